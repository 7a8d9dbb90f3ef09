//! Command-line front end: extraction, solving, core verification, and the
//! benchmark harness.
//!
//! Exit codes follow the SAT-competition convention where it applies:
//! 0 for a successful report or verification, 10 when the input turned out
//! satisfiable, 20 when an unsatisfiable input produced a core or proof,
//! and 1 for usage problems, unreadable files, or failed verification.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::extractors::{
    extract, extract_crr_seeded, extract_ec_seeded, Algorithm, CrrOptions, ExtractError,
    Extraction, Preprocess,
};
use crate::formula::{emit_dimacs, parse_dimacs, Assignment, ClauseIndex, CnfFormula};
use crate::oracle::{check_muc, MucVerdict};
use crate::proof::parse_trace;
use crate::rrp::RrpRoot;
use crate::solver::{solve, SolveResult, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_SAT: i32 = 10;
pub const EXIT_UNSAT: i32 = 20;

#[derive(Parser)]
#[command(
    name = "muckit",
    version,
    about = "Minimal unsatisfiable core extraction built on a proof-logging CDCL solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Extract an unsatisfiable core and print it as DIMACS.
    Extract(ExtractArgs),
    /// Decide one instance; print the model or report unsatisfiability.
    Solve(SolveArgs),
    /// Check that a core file is contained in a formula and unsatisfiable.
    Verify(VerifyArgs),
    /// Run every requested algorithm over a directory of CNF files and
    /// report one CSV row per instance and algorithm.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Ec,
    EcFp,
    Naive,
    Crr,
    CrrRrp,
}

impl AlgoArg {
    fn algorithm(self) -> Algorithm {
        match self {
            AlgoArg::Ec => Algorithm::Ec,
            AlgoArg::EcFp => Algorithm::EcFp,
            AlgoArg::Naive => Algorithm::Naive,
            AlgoArg::Crr => Algorithm::Crr,
            AlgoArg::CrrRrp => Algorithm::CrrRrp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PreprocessArg {
    None,
    Ec,
    EcFp,
}

#[derive(Clone, Copy, ValueEnum)]
enum RootArg {
    /// Walk paths from the empty clause toward the candidate.
    Empty,
    /// Walk paths from the candidate toward the empty clause.
    Clause,
}

#[derive(Args)]
struct ExtractArgs {
    /// Input formula in DIMACS CNF format.
    file: PathBuf,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// Write the core here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// How crr obtains its first refutation.
    #[arg(long, value_enum, default_value = "ec")]
    preprocess: PreprocessArg,
    /// Depth budget for the refutation-path walk; 0 disables steering.
    #[arg(long, default_value_t = 50)]
    rrp_depth: usize,
    /// Which end of the refutation the path walk starts from.
    #[arg(long, value_enum, default_value = "empty")]
    rrp_root: RootArg,
    /// Seed the extraction with a proof trace instead of a first solve
    /// (ec, crr, and crr-rrp only).
    #[arg(long)]
    from_trace: Option<PathBuf>,
    /// Write the proof of the input's unsatisfiability as a trace file.
    #[arg(long)]
    emit_proof: Option<PathBuf>,
    /// Write the full extraction report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the final refutation as a Graphviz graph (not for naive,
    /// which keeps none).
    #[arg(long)]
    dump_dot: Option<PathBuf>,
    #[arg(long, env = "MUCKIT_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolveArgs {
    /// Input formula in DIMACS CNF format.
    file: PathBuf,
    /// Write the refutation as a trace file when unsatisfiable.
    #[arg(long)]
    emit_proof: Option<PathBuf>,
    #[arg(long, env = "MUCKIT_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// The candidate core, in DIMACS CNF format.
    core: PathBuf,
    /// The formula the core must come from.
    #[arg(long)]
    against: PathBuf,
    /// Also check minimality by brute force (small instances only).
    #[arg(long)]
    oracle: bool,
    #[arg(long, env = "MUCKIT_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of .cnf files.
    dir: PathBuf,
    /// Comma-separated algorithms to run.
    #[arg(long, value_delimiter = ',', required = true)]
    algos: Vec<AlgoArg>,
    /// Per-run wall-clock budget in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    /// Parallel worker count.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Append rows to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit nonzero if any run did not finish with a core.
    #[arg(long)]
    strict: bool,
    #[arg(long, env = "MUCKIT_SEED", default_value_t = 0)]
    seed: u64,
}

/// Parses an argument vector and runs the requested subcommand, returning
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Cmd::Extract(args) => cmd_extract(&args),
        Cmd::Solve(args) => cmd_solve(&args),
        Cmd::Verify(args) => cmd_verify(&args),
        Cmd::Bench(args) => cmd_bench(&args),
    };
    outcome.unwrap_or_else(|message| {
        eprintln!("error: {message}");
        EXIT_ERROR
    })
}

fn read_formula(path: &Path) -> Result<CnfFormula, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_dimacs(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn print_model(model: &Assignment) {
    println!("s SATISFIABLE");
    let mut line = String::from("v");
    for lit in model.to_literals() {
        line.push(' ');
        line.push_str(&lit.to_dimacs().to_string());
    }
    line.push_str(" 0");
    println!("{line}");
}

fn cmd_extract(args: &ExtractArgs) -> Result<i32, String> {
    let f = read_formula(&args.file)?;
    let options = CrrOptions {
        preprocess: match args.preprocess {
            PreprocessArg::None => Preprocess::None,
            PreprocessArg::Ec => Preprocess::Ec,
            PreprocessArg::EcFp => Preprocess::EcFp,
        },
        depth_limit: args.rrp_depth,
        rrp_root: match args.rrp_root {
            RootArg::Empty => RrpRoot::EmptyClause,
            RootArg::Clause => RrpRoot::Clause,
        },
        seed: args.seed,
        ..CrrOptions::default()
    };
    let extraction = match &args.from_trace {
        None => match extract(&f, args.algo.algorithm(), &options) {
            Ok(extraction) => extraction,
            Err(ExtractError::Satisfiable(model)) => {
                print_model(&model);
                return Ok(EXIT_SAT);
            }
        },
        Some(trace_path) => {
            let text = fs::read_to_string(trace_path)
                .map_err(|e| format!("cannot read {}: {e}", trace_path.display()))?;
            let proof =
                parse_trace(&text).map_err(|e| format!("{}: {e}", trace_path.display()))?;
            let seeded = match args.algo.algorithm() {
                Algorithm::Ec => extract_ec_seeded(&f, &proof),
                Algorithm::Crr => extract_crr_seeded(&f, &proof, &options),
                Algorithm::CrrRrp => extract_crr_seeded(
                    &f,
                    &proof,
                    &CrrOptions {
                        rrp: true,
                        ..options
                    },
                ),
                other => {
                    return Err(format!(
                        "--from-trace does not apply to --algo {}",
                        other.name()
                    ))
                }
            };
            seeded.map_err(|e| format!("{}: {e}", trace_path.display()))?
        }
    };
    emit_extraction(args, &f, &extraction)?;
    Ok(EXIT_UNSAT)
}

fn emit_extraction(
    args: &ExtractArgs,
    f: &CnfFormula,
    extraction: &Extraction,
) -> Result<(), String> {
    let core_text = emit_dimacs(&f.restrict(&extraction.report.core));
    match &args.output {
        None => print!("{core_text}"),
        Some(path) => write_file(path, &core_text)?,
    }
    if let Some(path) = &args.emit_proof {
        let proof = extraction
            .initial_proof
            .as_ref()
            .expect("every successful extraction records its first proof");
        write_file(path, &proof.to_trace_string())?;
    }
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&extraction.report)
            .expect("reports are plain serializable data");
        write_file(path, &(json + "\n"))?;
    }
    if let Some(path) = &args.dump_dot {
        let refutation = extraction
            .refutation
            .as_ref()
            .ok_or("this algorithm keeps no refutation to export")?;
        write_file(path, &refutation.to_dot())?;
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<i32, String> {
    let f = read_formula(&args.file)?;
    let config = SolverConfig { seed: args.seed };
    match solve(&f, None, &config) {
        SolveResult::Sat(model) => {
            print_model(&model);
            Ok(EXIT_SAT)
        }
        SolveResult::Unsat(proof) => {
            println!("s UNSATISFIABLE");
            if let Some(path) = &args.emit_proof {
                write_file(path, &proof.to_trace_string())?;
            }
            Ok(EXIT_UNSAT)
        }
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32, String> {
    let core = read_formula(&args.core)?;
    let full = read_formula(&args.against)?;
    let mut taken = vec![false; full.len()];
    let mut indices: BTreeSet<ClauseIndex> = BTreeSet::new();
    for (position, clause) in core.clauses().iter().enumerate() {
        let found = (0..full.len()).find(|&i| !taken[i] && full.clause(i) == clause);
        match found {
            Some(i) => {
                taken[i] = true;
                indices.insert(i);
            }
            None => {
                return Err(format!(
                    "core clause {position} does not occur in {}",
                    args.against.display()
                ))
            }
        }
    }
    println!("contained: ok ({} of {} clauses)", core.len(), full.len());
    let config = SolverConfig { seed: args.seed };
    match solve(&core, None, &config) {
        SolveResult::Sat(_) => return Err("the core is satisfiable".into()),
        SolveResult::Unsat(_) => println!("unsatisfiable: ok"),
    }
    if args.oracle {
        match check_muc(&full, &indices).map_err(|e| e.to_string())? {
            MucVerdict::Minimal => println!("minimal: ok"),
            MucVerdict::NotUnsat(_) => return Err("oracle disputes unsatisfiability".into()),
            MucVerdict::NotMinimal(witness) => {
                return Err(format!("clause {witness} of the core is removable"))
            }
        }
    }
    Ok(EXIT_OK)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RunStatus {
    Ok,
    Timeout,
    Memout,
    SatisfiableInput,
}

impl RunStatus {
    fn label(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Timeout => "timeout",
            RunStatus::Memout => "memout",
            RunStatus::SatisfiableInput => "satisfiable-input",
        }
    }
}

struct BenchTask {
    instance: String,
    path: PathBuf,
    num_vars: u32,
    num_clauses: usize,
    algo: AlgoArg,
}

pub const BENCH_CSV_HEADER: &str =
    "instance,vars,clauses,algo,core_size,ms,sat_calls,rel_hardness,status";

fn cmd_bench(args: &BenchArgs) -> Result<i32, String> {
    let mut files: Vec<PathBuf> = fs::read_dir(&args.dir)
        .map_err(|e| format!("cannot read {}: {e}", args.dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "cnf"))
        .collect();
    files.sort();

    let mut tasks = Vec::new();
    for path in files {
        let f = read_formula(&path)?;
        let instance = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        for &algo in &args.algos {
            tasks.push(BenchTask {
                instance: instance.clone(),
                path: path.clone(),
                num_vars: f.num_vars(),
                num_clauses: f.len(),
                algo,
            });
        }
    }

    let needs_header = match &args.out {
        None => true,
        Some(path) => fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true),
    };
    let sink: Box<dyn Write + Send> = match &args.out {
        None => Box::new(io::stdout()),
        Some(path) => Box::new(
            fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| format!("cannot open {}: {e}", path.display()))?,
        ),
    };
    let sink = Mutex::new(sink);
    if needs_header {
        let mut out = sink.lock().unwrap();
        writeln!(out, "{BENCH_CSV_HEADER}").map_err(|e| e.to_string())?;
        out.flush().map_err(|e| e.to_string())?;
    }

    let queue = Mutex::new(tasks.into_iter().collect::<std::collections::VecDeque<_>>());
    let all_ok = Mutex::new(true);
    let timeout = Duration::from_secs(args.timeout);
    let workers = args.jobs.max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let Some(task) = queue.lock().unwrap().pop_front() else {
                    return;
                };
                let row = run_bench_task(&task, timeout, args.seed);
                if row.status != RunStatus::Ok {
                    *all_ok.lock().unwrap() = false;
                }
                let mut out = sink.lock().unwrap();
                let _ = writeln!(out, "{}", row.csv(&task));
                let _ = out.flush();
            });
        }
    });

    if args.strict && !*all_ok.lock().unwrap() {
        return Err("some runs did not finish with a core".into());
    }
    Ok(EXIT_OK)
}

struct BenchRow {
    status: RunStatus,
    core_size: Option<usize>,
    ms: Option<u64>,
    sat_calls: Option<u64>,
    rel_hardness: Option<f64>,
}

impl BenchRow {
    fn bare(status: RunStatus) -> BenchRow {
        BenchRow {
            status,
            core_size: None,
            ms: None,
            sat_calls: None,
            rel_hardness: None,
        }
    }

    fn csv(&self, task: &BenchTask) -> String {
        let opt = |s: Option<String>| s.unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            task.instance,
            task.num_vars,
            task.num_clauses,
            task.algo.algorithm().name(),
            opt(self.core_size.map(|v| v.to_string())),
            opt(self.ms.map(|v| v.to_string())),
            opt(self.sat_calls.map(|v| v.to_string())),
            opt(self.rel_hardness.map(|v| format!("{v:.3}"))),
            self.status.label(),
        )
    }
}

fn run_bench_task(task: &BenchTask, timeout: Duration, seed: u64) -> BenchRow {
    let exe = match std::env::current_exe() {
        Ok(exe) => exe,
        Err(_) => return BenchRow::bare(RunStatus::Memout),
    };
    let report = match tempfile::NamedTempFile::new() {
        Ok(file) => file,
        Err(_) => return BenchRow::bare(RunStatus::Memout),
    };
    let algo_name = task.algo.algorithm().name();
    let child = Command::new(exe)
        .arg("extract")
        .arg("--algo")
        .arg(algo_name)
        .arg("--report")
        .arg(report.path())
        .arg("--seed")
        .arg(seed.to_string())
        .arg(&task.path)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn();
    let mut child = match child {
        Ok(child) => child,
        Err(_) => return BenchRow::bare(RunStatus::Memout),
    };

    let started = Instant::now();
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) => {
                if started.elapsed() >= timeout {
                    let _ = child.kill();
                    let _ = child.wait();
                    return BenchRow::bare(RunStatus::Timeout);
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(_) => return BenchRow::bare(RunStatus::Memout),
        }
    };

    match status.code() {
        Some(code) if code == EXIT_UNSAT => {}
        Some(code) if code == EXIT_SAT => return BenchRow::bare(RunStatus::SatisfiableInput),
        _ => return BenchRow::bare(RunStatus::Memout),
    }

    let mut text = String::new();
    let read = fs::File::open(report.path())
        .and_then(|mut f| f.read_to_string(&mut text))
        .is_ok();
    if !read {
        return BenchRow::bare(RunStatus::Memout);
    }
    match serde_json::from_str::<serde_json::Value>(&text) {
        Ok(json) => BenchRow {
            status: RunStatus::Ok,
            core_size: json["core"].as_array().map(|a| a.len()),
            ms: json["elapsed_ms"].as_u64(),
            sat_calls: json["sat_calls"].as_u64(),
            rel_hardness: json["final_hardness"].as_f64(),
        },
        Err(_) => BenchRow::bare(RunStatus::Memout),
    }
}
