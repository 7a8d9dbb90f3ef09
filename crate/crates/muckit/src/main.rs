fn main() {
    std::process::exit(muckit::cli::run(std::env::args_os()));
}
