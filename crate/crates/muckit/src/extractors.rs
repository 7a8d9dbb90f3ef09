//! Unsatisfiable-core extraction algorithms.
//!
//! Four extractors share one interface. `ec` solves once and keeps the
//! source clauses the refutation actually uses; `ec-fp` repeats that until
//! the core stops shrinking. Both are cheap but not minimal. `naive`
//! deletes one clause at a time and re-solves from scratch, giving a
//! minimal core at one solver call per clause. `crr` also guarantees
//! minimality but keeps the refutation from the previous round: to test a
//! clause it solves only the clauses outside that clause's cone, and on
//! unsatisfiability splices the sub-derivation back into the graph instead
//! of starting over. With [`CrrOptions::rrp`] the sub-solves are steered
//! along refutation paths first.
//!
//! All extractors are deterministic for a fixed seed.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{Assignment, ClauseIndex, CnfFormula};
use crate::proof::{ProofError, ProofLog};
use crate::refutation::Refutation;
use crate::rrp::{ProofPathGraph, RrpHook, RrpRoot};
use crate::solver::{solve, solve_subset, SolveResult, SolverConfig};

/// The extraction algorithms the toolkit ships.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Naive,
    Ec,
    EcFp,
    Crr,
    CrrRrp,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::Ec => "ec",
            Algorithm::EcFp => "ec-fp",
            Algorithm::Crr => "crr",
            Algorithm::CrrRrp => "crr-rrp",
        }
    }
}

/// How `crr` obtains its first refutation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preprocess {
    /// Solve once and trim (same as `Ec`).
    None,
    /// Solve once and trim.
    Ec,
    /// Iterate solve-and-trim until the core stops shrinking.
    EcFp,
}

/// Options shared by the `naive`, `ec`, and `ec-fp` extractors.
#[derive(Clone, Debug, Default)]
pub struct ExtractOptions {
    pub seed: u64,
}

/// Options for the `crr` extractor.
#[derive(Clone, Debug)]
pub struct CrrOptions {
    /// Steer sub-solves along refutation paths.
    pub rrp: bool,
    pub preprocess: Preprocess,
    /// Traversal depth budget for the path walk; 0 disables it entirely.
    pub depth_limit: usize,
    pub rrp_root: RrpRoot,
    /// Re-validate the sub-proof and the spliced refutation at every step.
    pub validate_steps: bool,
    /// On every satisfiable sub-solve, check that the model falsifies some
    /// derivation path from the candidate to the sink.
    pub check_sat_paths: bool,
    /// Re-run every steered sub-solve without the hook and insist on the
    /// same verdict. The comparison run is not counted in `sat_calls`.
    pub verify_hook_neutrality: bool,
    pub seed: u64,
}

impl Default for CrrOptions {
    fn default() -> CrrOptions {
        CrrOptions {
            rrp: false,
            preprocess: Preprocess::Ec,
            depth_limit: 50,
            rrp_root: RrpRoot::EmptyClause,
            validate_steps: false,
            check_sat_paths: false,
            verify_hook_neutrality: false,
            seed: 0,
        }
    }
}

/// What happened to one clause during extraction, in decision order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceDecision {
    /// Proven necessary: the instance without it is satisfiable.
    Marked,
    /// Proven unnecessary by a dedicated solver call.
    Removed,
    /// Fell out of the refutation when it was trimmed.
    RemovedByTrim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub clause: ClauseIndex,
    pub decision: TraceDecision,
}

/// The outcome of an extraction run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoreReport {
    /// Indices of the core clauses in the input formula, ascending.
    pub core: Vec<ClauseIndex>,
    /// Whether the algorithm guarantees the core is minimal.
    pub minimal: bool,
    /// Solver calls the algorithm itself made.
    pub sat_calls: u64,
    pub elapsed_ms: u64,
    /// Live vertices per source clause in the final refutation, when the
    /// algorithm maintains one.
    pub final_hardness: Option<f64>,
    pub trace: Vec<TraceEntry>,
}

/// A report plus the artifacts behind it.
pub struct Extraction {
    pub report: CoreReport,
    /// The final refutation, for algorithms that maintain one.
    pub refutation: Option<Refutation>,
    /// The proof from the first full solve of the input.
    pub initial_proof: Option<ProofLog>,
}

#[derive(Debug, Clone, Error)]
pub enum ExtractError {
    #[error("the input formula is satisfiable")]
    Satisfiable(Assignment),
}

/// Why a supplied proof trace cannot seed an extraction of this formula.
#[derive(Debug, Clone, Error)]
pub enum SeedError {
    #[error("trace lists {found} source clauses, the formula has {expected}")]
    SourceCount { expected: usize, found: usize },
    #[error("trace source {0} differs from the formula clause at that position")]
    SourceClause(ClauseIndex),
    #[error("trace never derives the empty clause")]
    NoEmptyClause,
    #[error("trace does not replay: {0}")]
    Invalid(#[from] ProofError),
}

/// Checks a supplied proof against the formula and builds its refutation.
fn seed_refutation(f: &CnfFormula, proof: &ProofLog) -> Result<Refutation, SeedError> {
    if proof.num_sources() != f.len() {
        return Err(SeedError::SourceCount {
            expected: f.len(),
            found: proof.num_sources(),
        });
    }
    for (index, clause) in proof.sources().iter().enumerate() {
        if clause != f.clause(index) {
            return Err(SeedError::SourceClause(index));
        }
    }
    proof.validate()?;
    if proof.empty_clause_id().is_none() {
        return Err(SeedError::NoEmptyClause);
    }
    Ok(Refutation::from_proof(proof, f.num_vars()))
}

/// Dispatches on the algorithm; `naive`, `ec`, and `ec-fp` use only the
/// seed from `options`.
pub fn extract(
    f: &CnfFormula,
    algorithm: Algorithm,
    options: &CrrOptions,
) -> Result<Extraction, ExtractError> {
    let shared = ExtractOptions {
        seed: options.seed,
    };
    match algorithm {
        Algorithm::Naive => extract_naive(f, &shared),
        Algorithm::Ec => extract_ec(f, &shared),
        Algorithm::EcFp => extract_ec_fp(f, &shared),
        Algorithm::Crr => extract_crr(
            f,
            &CrrOptions {
                rrp: false,
                ..options.clone()
            },
        ),
        Algorithm::CrrRrp => extract_crr(
            f,
            &CrrOptions {
                rrp: true,
                ..options.clone()
            },
        ),
    }
}

fn first_solve(f: &CnfFormula, config: &SolverConfig) -> Result<ProofLog, ExtractError> {
    match solve(f, None, config) {
        SolveResult::Sat(model) => Err(ExtractError::Satisfiable(model)),
        SolveResult::Unsat(proof) => Ok(proof),
    }
}

fn record_trim(trace: &mut Vec<TraceEntry>, dropped: Vec<ClauseIndex>) {
    for clause in dropped {
        trace.push(TraceEntry {
            clause,
            decision: TraceDecision::RemovedByTrim,
        });
    }
}

/// One solve plus a trim.
fn ec_round(
    f: &CnfFormula,
    config: &SolverConfig,
    sat_calls: &mut u64,
    trace: &mut Vec<TraceEntry>,
) -> Result<(Refutation, ProofLog), ExtractError> {
    let proof = first_solve(f, config)?;
    *sat_calls += 1;
    let mut refutation = Refutation::from_proof(&proof, f.num_vars());
    record_trim(trace, refutation.trim());
    Ok((refutation, proof))
}

/// Solve-and-trim until the source set stops shrinking.
fn ec_fixpoint(
    f: &CnfFormula,
    config: &SolverConfig,
    sat_calls: &mut u64,
    trace: &mut Vec<TraceEntry>,
) -> Result<(Refutation, ProofLog), ExtractError> {
    let (mut refutation, initial_proof) = ec_round(f, config, sat_calls, trace)?;
    let mut core = refutation.source_indices();
    while !core.iter().any(|&i| f.clause(i).is_empty()) {
        let result = solve_subset(f, &core, None, config)
            .expect("a trimmed core has valid, non-empty clauses");
        *sat_calls += 1;
        let proof = match result {
            SolveResult::Sat(_) => unreachable!("a trimmed core stays unsatisfiable"),
            SolveResult::Unsat(proof) => proof,
        };
        let mut next = Refutation::from_proof_with_sources(&proof, f.num_vars(), &core);
        record_trim(trace, next.trim());
        let next_core = next.source_indices();
        let shrunk = next_core.len() < core.len();
        refutation = next;
        core = next_core;
        if !shrunk {
            break;
        }
    }
    Ok((refutation, initial_proof))
}

/// Keeps the clauses a trimmed refutation uses. Not minimal in general.
pub fn extract_ec(f: &CnfFormula, options: &ExtractOptions) -> Result<Extraction, ExtractError> {
    let start = Instant::now();
    let config = SolverConfig { seed: options.seed };
    let mut sat_calls = 0;
    let mut scratch = Vec::new();
    let (refutation, proof) = ec_round(f, &config, &mut sat_calls, &mut scratch)?;
    Ok(Extraction {
        report: CoreReport {
            core: refutation.source_indices(),
            minimal: false,
            sat_calls,
            elapsed_ms: start.elapsed().as_millis() as u64,
            final_hardness: None,
            trace: Vec::new(),
        },
        refutation: Some(refutation),
        initial_proof: Some(proof),
    })
}

/// Builds a core from a refutation supplied by the caller instead of a
/// solver run: the kept clauses are the sources the trimmed proof uses.
pub fn extract_ec_seeded(f: &CnfFormula, proof: &ProofLog) -> Result<Extraction, SeedError> {
    let start = Instant::now();
    let mut refutation = seed_refutation(f, proof)?;
    refutation.trim();
    Ok(Extraction {
        report: CoreReport {
            core: refutation.source_indices(),
            minimal: false,
            sat_calls: 0,
            elapsed_ms: start.elapsed().as_millis() as u64,
            final_hardness: None,
            trace: Vec::new(),
        },
        refutation: Some(refutation),
        initial_proof: Some(proof.clone()),
    })
}

/// Iterates [`extract_ec`] until no clause falls away. Not minimal in
/// general.
pub fn extract_ec_fp(f: &CnfFormula, options: &ExtractOptions) -> Result<Extraction, ExtractError> {
    let start = Instant::now();
    let config = SolverConfig { seed: options.seed };
    let mut sat_calls = 0;
    let mut scratch = Vec::new();
    let (refutation, proof) = ec_fixpoint(f, &config, &mut sat_calls, &mut scratch)?;
    Ok(Extraction {
        report: CoreReport {
            core: refutation.source_indices(),
            minimal: false,
            sat_calls,
            elapsed_ms: start.elapsed().as_millis() as u64,
            final_hardness: None,
            trace: Vec::new(),
        },
        refutation: Some(refutation),
        initial_proof: Some(proof),
    })
}

/// Deletion-based minimal core: drop each clause in turn and re-solve the
/// rest from scratch, keeping the clause exactly when the rest is
/// satisfiable.
pub fn extract_naive(f: &CnfFormula, options: &ExtractOptions) -> Result<Extraction, ExtractError> {
    let start = Instant::now();
    let config = SolverConfig { seed: options.seed };
    let proof = first_solve(f, &config)?;
    let mut sat_calls = 1;
    let mut trace = Vec::new();
    let mut kept: Vec<ClauseIndex> = (0..f.len()).collect();
    for index in 0..f.len() {
        let candidate: Vec<ClauseIndex> = kept.iter().copied().filter(|&i| i != index).collect();
        let result = solve(&f.restrict(&candidate), None, &config);
        sat_calls += 1;
        match result {
            SolveResult::Sat(_) => trace.push(TraceEntry {
                clause: index,
                decision: TraceDecision::Marked,
            }),
            SolveResult::Unsat(_) => {
                kept = candidate;
                trace.push(TraceEntry {
                    clause: index,
                    decision: TraceDecision::Removed,
                });
            }
        }
    }
    Ok(Extraction {
        report: CoreReport {
            core: kept,
            minimal: true,
            sat_calls,
            elapsed_ms: start.elapsed().as_millis() as u64,
            final_hardness: None,
            trace,
        },
        refutation: None,
        initial_proof: Some(proof),
    })
}

/// Minimal core by refutation surgery: scan the live source clauses in
/// ascending index order, solve each clause's complement instance, mark
/// the clause when that is satisfiable and splice the sub-derivation in
/// when it is not.
pub fn extract_crr(f: &CnfFormula, options: &CrrOptions) -> Result<Extraction, ExtractError> {
    let start = Instant::now();
    let config = SolverConfig { seed: options.seed };
    let mut sat_calls = 0;
    let mut trace = Vec::new();
    let (refutation, initial_proof) = match options.preprocess {
        Preprocess::None | Preprocess::Ec => ec_round(f, &config, &mut sat_calls, &mut trace)?,
        Preprocess::EcFp => ec_fixpoint(f, &config, &mut sat_calls, &mut trace)?,
    };
    Ok(crr_scan(
        refutation,
        initial_proof,
        trace,
        sat_calls,
        options,
        start,
    ))
}

/// [`extract_crr`] with the first refutation supplied by the caller instead
/// of the preprocessing stage.
pub fn extract_crr_seeded(
    f: &CnfFormula,
    proof: &ProofLog,
    options: &CrrOptions,
) -> Result<Extraction, SeedError> {
    let start = Instant::now();
    let mut refutation = seed_refutation(f, proof)?;
    let mut trace = Vec::new();
    record_trim(&mut trace, refutation.trim());
    Ok(crr_scan(refutation, proof.clone(), trace, 0, options, start))
}

fn crr_scan(
    mut refutation: Refutation,
    initial_proof: ProofLog,
    mut trace: Vec<TraceEntry>,
    mut sat_calls: u64,
    options: &CrrOptions,
    start: Instant,
) -> Extraction {
    let config = SolverConfig { seed: options.seed };
    let mut marked: BTreeSet<ClauseIndex> = BTreeSet::new();
    loop {
        let next = refutation
            .sources()
            .into_iter()
            .find(|(index, _)| !marked.contains(index));
        let Some((index, vertex)) = next else { break };
        let (sub_formula, mapping) = refutation.complement_instance(vertex);
        let result = if options.rrp {
            let graph = ProofPathGraph::new(&refutation, vertex, options.rrp_root);
            let mut hook = RrpHook::new(&graph, options.depth_limit);
            let steered = solve(&sub_formula, Some(&mut hook), &config);
            if options.verify_hook_neutrality {
                let plain = solve(&sub_formula, None, &config);
                assert_eq!(
                    steered.is_sat(),
                    plain.is_sat(),
                    "path steering changed the verdict for clause {index}"
                );
            }
            steered
        } else {
            solve(&sub_formula, None, &config)
        };
        sat_calls += 1;
        match result {
            SolveResult::Sat(model) => {
                if options.check_sat_paths {
                    assert!(
                        refutation.find_falsified_path(vertex, &model).is_some(),
                        "complement model must falsify a path from clause {index}"
                    );
                }
                marked.insert(index);
                trace.push(TraceEntry {
                    clause: index,
                    decision: TraceDecision::Marked,
                });
            }
            SolveResult::Unsat(sub_proof) => {
                if options.validate_steps {
                    sub_proof.validate().expect("sub-proof replays");
                }
                let dropped = refutation.splice(vertex, &sub_proof, &mapping);
                trace.push(TraceEntry {
                    clause: index,
                    decision: TraceDecision::Removed,
                });
                for d in dropped {
                    assert!(
                        !marked.contains(&d),
                        "trim dropped clause {d} which is already proven necessary"
                    );
                    trace.push(TraceEntry {
                        clause: d,
                        decision: TraceDecision::RemovedByTrim,
                    });
                }
                if options.validate_steps {
                    refutation.validate().expect("refutation stays sound");
                }
            }
        }
    }

    let core = refutation.source_indices();
    assert_eq!(
        core,
        marked.iter().copied().collect::<Vec<_>>(),
        "every surviving source clause is marked"
    );
    Extraction {
        report: CoreReport {
            core,
            minimal: true,
            sat_calls,
            elapsed_ms: start.elapsed().as_millis() as u64,
            final_hardness: Some(refutation.relative_hardness()),
            trace,
        },
        refutation: Some(refutation),
        initial_proof: Some(initial_proof),
    }
}
