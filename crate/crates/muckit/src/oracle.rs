//! Brute-force satisfiability oracle and minimal-core checker.
//!
//! The oracle shares no code with the CDCL solver: it enumerates
//! assignments recursively, variables ascending with false tried before
//! true, pruning a branch as soon as some clause is fully falsified. Only
//! variables that occur in the active clause set are branched on; absent
//! variables are fixed to false in any reported model, which keeps the
//! enumeration deterministic and the model reproducible. A variable-count
//! bound keeps runs finite.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::formula::{Assignment, Clause, ClauseIndex, CnfFormula, Literal, Var};

/// Default bound on `num_vars` for brute-force runs.
pub const DEFAULT_VAR_BOUND: u32 = 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("formula has {num_vars} variables, brute-force bound is {bound}")]
    TooManyVars { num_vars: u32, bound: u32 },
    #[error("clause index {index} out of range for {len} clauses")]
    IndexOutOfRange { index: ClauseIndex, len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleResult {
    /// The first model in enumeration order.
    Sat(Assignment),
    Unsat,
}

impl OracleResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, OracleResult::Sat(_))
    }
}

/// Verdict of [`check_muc`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MucVerdict {
    Minimal,
    /// The candidate set is satisfiable; carries a model of it.
    NotUnsat(Assignment),
    /// Removing this clause keeps the set unsatisfiable.
    NotMinimal(ClauseIndex),
}

/// Exhaustive satisfiability check of `formula` within the default bound.
pub fn brute_force_sat(formula: &CnfFormula) -> Result<OracleResult, OracleError> {
    brute_force_sat_bounded(formula, DEFAULT_VAR_BOUND)
}

pub fn brute_force_sat_bounded(
    formula: &CnfFormula,
    bound: u32,
) -> Result<OracleResult, OracleError> {
    if formula.num_vars() > bound {
        return Err(OracleError::TooManyVars {
            num_vars: formula.num_vars(),
            bound,
        });
    }
    Ok(enumerate(formula.num_vars(), formula.clauses()))
}

/// Checks that the clauses of `f` selected by `core` form a minimal
/// unsatisfiable subset: the selection is unsatisfiable and dropping any
/// single member makes it satisfiable. The first offending clause in
/// ascending index order is reported.
pub fn check_muc(f: &CnfFormula, core: &BTreeSet<ClauseIndex>) -> Result<MucVerdict, OracleError> {
    check_muc_bounded(f, core, DEFAULT_VAR_BOUND)
}

pub fn check_muc_bounded(
    f: &CnfFormula,
    core: &BTreeSet<ClauseIndex>,
    bound: u32,
) -> Result<MucVerdict, OracleError> {
    if f.num_vars() > bound {
        return Err(OracleError::TooManyVars {
            num_vars: f.num_vars(),
            bound,
        });
    }
    for &index in core {
        if index >= f.len() {
            return Err(OracleError::IndexOutOfRange {
                index,
                len: f.len(),
            });
        }
    }
    let selected: Vec<Clause> = core.iter().map(|&i| f.clause(i).clone()).collect();
    if let OracleResult::Sat(model) = enumerate(f.num_vars(), &selected) {
        return Ok(MucVerdict::NotUnsat(model));
    }
    for (pos, &index) in core.iter().enumerate() {
        let mut rest = selected.clone();
        rest.remove(pos);
        if let OracleResult::Unsat = enumerate(f.num_vars(), &rest) {
            return Ok(MucVerdict::NotMinimal(index));
        }
    }
    Ok(MucVerdict::Minimal)
}

fn enumerate(num_vars: u32, clauses: &[Clause]) -> OracleResult {
    let mut occurring: BTreeSet<Var> = BTreeSet::new();
    for clause in clauses {
        occurring.extend(clause.literals().iter().map(|l| l.var()));
    }
    let vars: Vec<Var> = occurring.into_iter().collect();
    let mut assignment = Assignment::new(num_vars);
    // Variables outside the clause set cannot affect satisfiability.
    for n in 1..=num_vars {
        let var = Var::new(n);
        if vars.binary_search(&var).is_err() {
            assignment.assign(Literal::negative(var), 0);
        }
    }
    if descend(clauses, &vars, 0, &mut assignment) {
        OracleResult::Sat(assignment)
    } else {
        OracleResult::Unsat
    }
}

fn descend(clauses: &[Clause], vars: &[Var], depth: usize, assignment: &mut Assignment) -> bool {
    if any_clause_falsified(clauses, assignment) {
        return false;
    }
    let Some(&var) = vars.get(depth) else {
        return true;
    };
    for value in [false, true] {
        assignment.assign(Literal::new(var, value), 0);
        if descend(clauses, vars, depth + 1, assignment) {
            return true;
        }
        assignment.unassign(var);
    }
    false
}

fn any_clause_falsified(clauses: &[Clause], assignment: &Assignment) -> bool {
    clauses.iter().any(|clause| {
        clause
            .literals()
            .iter()
            .all(|&lit| assignment.literal_value(lit) == Some(false))
    })
}
