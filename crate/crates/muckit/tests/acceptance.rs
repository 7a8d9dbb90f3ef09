//! One test per release gate. Each prints a single summary line so a full
//! run reads as a checklist.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use muckit::extractors::{
    extract_crr, extract_crr_seeded, extract_ec, extract_ec_fp, extract_naive, CrrOptions,
    ExtractOptions, Preprocess, TraceDecision, TraceEntry,
};
use muckit::formula::{parse_dimacs, ClauseIndex, CnfFormula};
use muckit::gen::{pigeonhole, random_3cnf};
use muckit::oracle::{brute_force_sat, check_muc, MucVerdict};
use muckit::proof::parse_trace;
use muckit::refutation::Refutation;
use muckit::rrp::RrpRoot;
use muckit::solver::{solve, SolveResult, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn muckit_bin(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_muckit"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn twincore() -> CnfFormula {
    parse_dimacs(&std::fs::read_to_string(data("twincore.cnf")).unwrap()).unwrap()
}

/// Every optional cross-check the extractor offers, switched on.
fn strict() -> CrrOptions {
    CrrOptions {
        validate_steps: true,
        check_sat_paths: true,
        verify_hook_neutrality: true,
        ..CrrOptions::default()
    }
}

fn indices(report_core: &[ClauseIndex]) -> BTreeSet<ClauseIndex> {
    report_core.iter().copied().collect()
}

/// 500 unsatisfiable random 3-CNF instances, 10 to 20 variables at
/// clause/variable ratios between 4.5 and 6.0, certified unsat by the
/// oracle before use. Built once and shared by the suites below.
fn corpus() -> &'static [CnfFormula] {
    static CORPUS: OnceLock<Vec<CnfFormula>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        let mut instances = Vec::new();
        while instances.len() < 500 {
            let vars = rng.gen_range(10..=20u32);
            let ratio = rng.gen_range(4.5..=6.0f64);
            let clauses = (vars as f64 * ratio).round() as usize;
            let f = random_3cnf(vars, clauses, rng.gen());
            if !brute_force_sat(&f).unwrap().is_sat() {
                instances.push(f);
            }
        }
        instances
    })
}

/// Replays an extraction trace against the oracle: every Marked clause's
/// complement must be satisfiable and every Removed clause's complement
/// unsatisfiable, relative to the clauses still live at that point.
fn oracle_confirms_trace(f: &CnfFormula, trace: &[TraceEntry]) {
    let mut live: BTreeSet<ClauseIndex> = (0..f.len()).collect();
    for entry in trace {
        let without: Vec<ClauseIndex> = live
            .iter()
            .copied()
            .filter(|&i| i != entry.clause)
            .collect();
        let complement_sat = brute_force_sat(&f.restrict(&without)).unwrap().is_sat();
        match entry.decision {
            TraceDecision::Marked => assert!(complement_sat, "clause {}", entry.clause),
            TraceDecision::Removed => {
                assert!(!complement_sat, "clause {}", entry.clause);
                live.remove(&entry.clause);
            }
            TraceDecision::RemovedByTrim => {
                live.remove(&entry.clause);
            }
        }
    }
}

#[test]
fn criterion_1_twincore_end_to_end() {
    let started = Instant::now();
    let f = twincore();
    let twincore_path = data("twincore.cnf");
    let trace_path = data("twincore.trace");
    let expected_core = "p cnf 4 5\n1 2 4 0\n1 2 -4 0\n-1 3 0\n-1 -3 0\n-2 0\n";

    // naive lands on the expected core unaided; its verdicts are bare
    // satisfiability facts.
    let (code, stdout, _) = muckit_bin(&["extract", "--algo", "naive", twincore_path.to_str().unwrap()]);
    assert_eq!(code, 20);
    assert_eq!(stdout, expected_core);

    // crr and crr-rrp reach it from the bundled refutation: the scan reuses
    // the derivation of -1 through clauses 4 and 5, so clause 5 survives
    // every splice. A first refutation found by solving cannot keep
    // clauses 0 and 5 at all: unit propagation alone refutes twincore.cnf
    // through the other five clauses.
    for algo in ["crr", "crr-rrp"] {
        let (code, stdout, _) = muckit_bin(&[
            "extract",
            "--algo",
            algo,
            "--from-trace",
            trace_path.to_str().unwrap(),
            twincore_path.to_str().unwrap(),
        ]);
        assert_eq!(code, 20, "{algo}");
        assert_eq!(stdout, expected_core, "{algo}");
    }

    // The full trace of the seeded scan, confirmed step by step against
    // the oracle: clauses 0 and 3 Removed, the other five Marked.
    let proof = parse_trace(&std::fs::read_to_string(&trace_path).unwrap()).unwrap();
    for rrp in [false, true] {
        let out = extract_crr_seeded(&f, &proof, &CrrOptions { rrp, ..strict() }).unwrap();
        assert_eq!(out.report.core, vec![1, 2, 4, 5, 6]);
        assert_eq!(check_muc(&f, &indices(&out.report.core)).unwrap(), MucVerdict::Minimal);
        let decisions: Vec<(ClauseIndex, TraceDecision)> = out
            .report
            .trace
            .iter()
            .map(|e| (e.clause, e.decision))
            .collect();
        assert_eq!(
            decisions,
            [
                (0, TraceDecision::Removed),
                (1, TraceDecision::Marked),
                (2, TraceDecision::Marked),
                (3, TraceDecision::Removed),
                (4, TraceDecision::Marked),
                (5, TraceDecision::Marked),
                (6, TraceDecision::Marked),
            ]
        );
        oracle_confirms_trace(&f, &out.report.trace);
    }

    // Unseeded crr and crr-rrp settle on the other minimal core of
    // twincore.cnf; the oracle certifies it as well.
    for algo in ["crr", "crr-rrp"] {
        let (code, stdout, _) = muckit_bin(&["extract", "--algo", algo, twincore_path.to_str().unwrap()]);
        assert_eq!(code, 20, "{algo}");
        let core = parse_dimacs(&stdout).unwrap();
        assert_eq!(core.len(), 5, "{algo}");
    }
    for rrp in [false, true] {
        let out = extract_crr(&f, &CrrOptions { rrp, ..strict() }).unwrap();
        assert_eq!(out.report.core, vec![1, 2, 3, 4, 6]);
        assert_eq!(check_muc(&f, &indices(&out.report.core)).unwrap(), MucVerdict::Minimal);
        oracle_confirms_trace(&f, &out.report.trace);
    }

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!(
        "criterion 1 PASS: twincore cores match, every verdict oracle-confirmed, {elapsed:?} total"
    );
}

#[test]
fn criterion_2_oracle_minimality_suite() {
    let started = Instant::now();
    let mut checked = 0;
    for f in corpus() {
        let naive = extract_naive(f, &ExtractOptions::default()).unwrap();
        let crr = extract_crr(f, &strict()).unwrap();
        let steered = extract_crr(
            f,
            &CrrOptions {
                rrp: true,
                ..strict()
            },
        )
        .unwrap();
        for (name, report) in [
            ("naive", &naive.report),
            ("crr", &crr.report),
            ("crr-rrp", &steered.report),
        ] {
            assert_eq!(
                check_muc(f, &indices(&report.core)).unwrap(),
                MucVerdict::Minimal,
                "{name} on instance {checked}"
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 1500);
    println!(
        "criterion 2 PASS: {} instances x 3 algorithms all oracle-minimal in {:?}",
        corpus().len(),
        started.elapsed()
    );
}

#[test]
fn criterion_3_every_complement_model_falsifies_a_path() {
    let started = Instant::now();
    // check_sat_paths makes every satisfiable sub-solve assert that the
    // model falsifies a complete candidate-to-sink path in the current
    // refutation; a missing path panics the run.
    let mut instances = 0;
    let mut models = 0;
    for f in &corpus()[..120] {
        let out = extract_crr(
            f,
            &CrrOptions {
                rrp: true,
                check_sat_paths: true,
                ..CrrOptions::default()
            },
        )
        .unwrap();
        instances += 1;
        models += out
            .report
            .trace
            .iter()
            .filter(|e| e.decision == TraceDecision::Marked)
            .count();
    }
    assert!(instances >= 100);
    assert!(models >= instances, "every minimal core marks clauses");
    println!(
        "criterion 3 PASS: {models} complement models over {instances} instances each falsified a path in {:?}",
        started.elapsed()
    );
}

#[test]
fn criterion_4_refutations_stay_valid_through_build_trim_and_splice() {
    let started = Instant::now();
    let mut splices = 0;
    for f in &corpus()[..120] {
        let proof = match solve(f, None, &SolverConfig::default()) {
            SolveResult::Unsat(proof) => proof,
            SolveResult::Sat(_) => unreachable!("corpus instances are unsat"),
        };
        let mut refutation = Refutation::from_proof(&proof, f.num_vars());
        refutation.validate().unwrap();
        refutation.trim();
        refutation.validate().unwrap();

        // validate_steps re-checks the sub-proof and the spliced refutation
        // at every Removed step; the scan itself asserts that no marked
        // clause ever falls to a trim.
        let out = extract_crr(f, &strict()).unwrap();
        splices += out
            .report
            .trace
            .iter()
            .filter(|e| e.decision == TraceDecision::Removed)
            .count();
        out.refutation.unwrap().validate().unwrap();
    }

    let seeded = extract_crr_seeded(
        &twincore(),
        &parse_trace(&std::fs::read_to_string(data("twincore.trace")).unwrap()).unwrap(),
        &strict(),
    )
    .unwrap();
    seeded.refutation.unwrap().validate().unwrap();

    assert!(splices > 0, "the suite exercises splicing");
    println!(
        "criterion 4 PASS: 120 instances validated after build, trim, and {splices} splices in {:?}",
        started.elapsed()
    );
}

#[test]
fn criterion_5_fixpoint_cores_never_grow_and_stay_unsat() {
    let started = Instant::now();
    let config = SolverConfig::default();
    for (index, f) in corpus().iter().enumerate() {
        let ec = extract_ec(f, &ExtractOptions::default()).unwrap().report;
        let fp = extract_ec_fp(f, &ExtractOptions::default()).unwrap().report;
        assert!(
            fp.core.len() <= ec.core.len(),
            "instance {index}: {} > {}",
            fp.core.len(),
            ec.core.len()
        );
        for core in [&ec.core, &fp.core] {
            match solve(&f.restrict(core), None, &config) {
                SolveResult::Unsat(_) => {}
                SolveResult::Sat(_) => panic!("instance {index}: core is satisfiable"),
            }
        }
    }
    println!(
        "criterion 5 PASS: |ec-fp| <= |ec| and both cores unsat on {} instances in {:?}",
        corpus().len(),
        started.elapsed()
    );
}

#[test]
fn criterion_6_solver_matches_the_oracle_on_ten_thousand_instances() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1FF);
    let config = SolverConfig::default();
    let mut sat = 0;
    let mut unsat = 0;
    for round in 0..10_000 {
        let f = if round % 10 == 9 {
            // wide range, mixed clause lengths, unit-heavy
            let vars = rng.gen_range(3..=8u32);
            let clauses = rng.gen_range(1..=(4 * vars) as usize);
            random_mixed(&mut rng, vars, clauses)
        } else {
            let vars = rng.gen_range(3..=20u32);
            let ratio = rng.gen_range(2.0..=8.0f64);
            random_3cnf(vars, (vars as f64 * ratio).round() as usize, rng.gen())
        };
        let oracle_sat = brute_force_sat(&f).unwrap().is_sat();
        match solve(&f, None, &config) {
            SolveResult::Sat(model) => {
                assert!(oracle_sat, "round {round}: solver claims sat");
                assert!(model.satisfies(&f), "round {round}: bogus model");
                sat += 1;
            }
            SolveResult::Unsat(_) => {
                assert!(!oracle_sat, "round {round}: solver claims unsat");
                unsat += 1;
            }
        }
    }
    println!(
        "criterion 6 PASS: 10000 instances agree with the oracle ({sat} sat, {unsat} unsat) in {:?}",
        started.elapsed()
    );
}

fn random_mixed(rng: &mut ChaCha8Rng, num_vars: u32, num_clauses: usize) -> CnfFormula {
    use muckit::formula::{Clause, Literal, Var};
    let clauses = (0..num_clauses)
        .map(|_| {
            let len = rng.gen_range(1..=3usize).min(num_vars as usize);
            let mut vars: Vec<u32> = (1..=num_vars).collect();
            let lits: Vec<Literal> = (0..len)
                .map(|_| {
                    let at = rng.gen_range(0..vars.len());
                    Literal::new(Var::new(vars.swap_remove(at)), rng.gen_bool(0.5))
                })
                .collect();
            Clause::new(lits).unwrap()
        })
        .collect();
    CnfFormula::new(num_vars, clauses)
}

#[test]
fn criterion_7_path_steering_never_changes_a_verdict() {
    let started = Instant::now();
    // verify_hook_neutrality re-runs every steered sub-solve without the
    // hook and asserts the verdicts match.
    let mut sub_solves = 0;
    for (index, f) in corpus()[..150].iter().enumerate() {
        let root = if index % 2 == 0 {
            RrpRoot::EmptyClause
        } else {
            RrpRoot::Clause
        };
        let depth = [50, 3][index % 2];
        let out = extract_crr(
            f,
            &CrrOptions {
                rrp: true,
                rrp_root: root,
                depth_limit: depth,
                verify_hook_neutrality: true,
                preprocess: if index % 3 == 0 {
                    Preprocess::EcFp
                } else {
                    Preprocess::Ec
                },
                ..CrrOptions::default()
            },
        )
        .unwrap();
        sub_solves += out.report.sat_calls;
    }
    assert!(sub_solves > 150);
    println!(
        "criterion 7 PASS: {sub_solves} steered sub-solves matched their plain verdicts in {:?}",
        started.elapsed()
    );
}

#[test]
fn criterion_8_pigeonhole_scale_sanity() {
    let config = SolverConfig::default();
    let mut timings = Vec::new();
    for holes in [5u32, 6, 7] {
        let f = pigeonhole(holes);
        let started = Instant::now();
        let out = extract_crr(&f, &CrrOptions::default()).unwrap();
        let extraction_time = started.elapsed();
        assert!(
            extraction_time < Duration::from_secs(600),
            "php{holes} took {extraction_time:?}"
        );

        let report = out.report;
        assert!(report.final_hardness.unwrap() >= 1.0);
        // every clause of PHP(n+1, n) is necessary, so the core is the
        // whole formula
        assert_eq!(report.core.len(), f.len());
        match solve(&f.restrict(&report.core), None, &config) {
            SolveResult::Unsat(_) => {}
            SolveResult::Sat(_) => panic!("php{holes}: core satisfiable"),
        }
        for &leave_out in &report.core {
            let keep: Vec<ClauseIndex> = report
                .core
                .iter()
                .copied()
                .filter(|&i| i != leave_out)
                .collect();
            match solve(&f.restrict(&keep), None, &config) {
                SolveResult::Sat(_) => {}
                SolveResult::Unsat(_) => panic!("php{holes}: clause {leave_out} removable"),
            }
        }
        timings.push(format!(
            "php{holes} {}x{} in {extraction_time:?} (hardness {:.2})",
            f.num_vars(),
            f.len(),
            report.final_hardness.unwrap()
        ));
    }
    println!("criterion 8 PASS: {}", timings.join(", "));
}

#[test]
fn criterion_9_bench_csv_format() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("corpus");
    std::fs::create_dir(&dir).unwrap();
    let instances = ["twincore.cnf", "sat1.cnf", "rand1.cnf"];
    for name in instances {
        std::fs::copy(data(name), dir.join(name)).unwrap();
    }
    let algos = ["ec", "ec-fp", "naive", "crr", "crr-rrp"];
    let (code, stdout, stderr) = muckit_bin(&[
        "bench",
        "--algos",
        &algos.join(","),
        "--timeout",
        "60",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stderr}");

    let mut lines = stdout.lines();
    assert_eq!(
        lines.next(),
        Some("instance,vars,clauses,algo,core_size,ms,sat_calls,rel_hardness,status")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), instances.len() * algos.len());

    let mut seen = BTreeSet::new();
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 9, "{row}");
        let (instance, algo, status) = (fields[0], fields[3], fields[8]);
        assert!(seen.insert((instance.to_string(), algo.to_string())), "{row}");
        assert!(algos.contains(&algo), "{row}");
        let clauses: usize = fields[2].parse().unwrap();
        match status {
            "ok" => {
                let core_size: usize = fields[4].parse().unwrap();
                assert!(core_size <= clauses, "{row}");
                fields[5].parse::<u64>().unwrap();
                fields[6].parse::<u64>().unwrap();
                if matches!(algo, "crr" | "crr-rrp") {
                    assert!(fields[7].parse::<f64>().unwrap() >= 1.0, "{row}");
                } else {
                    assert!(fields[7].is_empty(), "{row}");
                }
            }
            "satisfiable-input" => {
                assert_eq!(instance, "sat1", "{row}");
                assert!(fields[4..8].iter().all(|f| f.is_empty()), "{row}");
            }
            other => panic!("unexpected status {other} in {row}"),
        }
    }
    assert_eq!(seen.len(), instances.len() * algos.len());
    println!(
        "criterion 9 PASS: {} rows, one per instance and algorithm, in {:?}",
        seen.len(),
        started.elapsed()
    );
}
