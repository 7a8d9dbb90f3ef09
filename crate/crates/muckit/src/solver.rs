//! A CDCL satisfiability solver that logs a resolution derivation for every
//! clause it learns.
//!
//! The solver uses two watched literals per clause, first-UIP conflict
//! analysis, activity-ordered decisions with phase saving, and Luby
//! restarts. Every learned clause is recorded in a [`ProofLog`] together
//! with the antecedent chain that reproduces it by sequential resolution.
//! Unit propagations at decision level 0 are logged as derived unit
//! clauses, so when the search ends in a root-level conflict the final
//! empty clause also carries a complete chain.
//!
//! An optional [`DecisionHook`] is consulted before the built-in heuristic
//! whenever the solver needs a decision; a hook that always answers
//! `None` leaves the search identical to running without one.

use std::collections::VecDeque;

use thiserror::Error;

use crate::formula::{Assignment, Clause, ClauseIndex, CnfFormula, Literal, Var};
use crate::proof::{ClauseId, ProofLog};

const RESTART_BASE: u64 = 64;
const VAR_DECAY: f64 = 0.95;
const ACTIVITY_LIMIT: f64 = 1e100;
const CONFLICT_WINDOW: usize = 256;

/// Tunables for one solver run. The seed only influences initial variable
/// phases; a run is fully deterministic for a fixed seed.
#[derive(Clone, Debug, Default)]
pub struct SolverConfig {
    pub seed: u64,
}

/// Outcome of a solver run: a total model or a proof of unsatisfiability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Assignment),
    Unsat(ProofLog),
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }

    pub fn model(&self) -> Option<&Assignment> {
        match self {
            SolveResult::Sat(a) => Some(a),
            SolveResult::Unsat(_) => None,
        }
    }

    pub fn proof(&self) -> Option<&ProofLog> {
        match self {
            SolveResult::Sat(_) => None,
            SolveResult::Unsat(p) => Some(p),
        }
    }
}

/// Literal occurrence counts over a sliding window of recently learned
/// clauses. Decision hooks use this to prefer literals that participated in
/// recent conflict derivations.
#[derive(Clone, Debug)]
pub struct LitCounts {
    counts: Vec<u32>,
    window: VecDeque<Vec<Literal>>,
    capacity: usize,
}

impl LitCounts {
    pub fn new(num_vars: u32, capacity: usize) -> LitCounts {
        LitCounts {
            counts: vec![0; 2 * (num_vars as usize + 1)],
            window: VecDeque::new(),
            capacity,
        }
    }

    pub(crate) fn push(&mut self, lits: &[Literal]) {
        if self.capacity == 0 {
            return;
        }
        if self.window.len() == self.capacity {
            for lit in self.window.pop_front().unwrap() {
                self.counts[lit.code()] -= 1;
            }
        }
        for &lit in lits {
            self.counts[lit.code()] += 1;
        }
        self.window.push_back(lits.to_vec());
    }

    pub fn count(&self, lit: Literal) -> u32 {
        self.counts[lit.code()]
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }
}

/// Search state a [`DecisionHook`] may inspect.
pub struct SearchContext<'a> {
    pub assignment: &'a Assignment,
    pub recent_conflicts: &'a LitCounts,
}

/// External guidance for the decision engine.
///
/// `next_decision` is asked before the built-in heuristic each time the
/// solver is about to branch; returning `None` hands the choice back. A
/// returned literal must be unassigned. `on_backjump` is called after each
/// conflict analysis with the computed backjump level, before the trail is
/// unwound, and with level 0 when the solver restarts.
pub trait DecisionHook {
    fn next_decision(&mut self, search: &SearchContext<'_>) -> Option<Literal>;
    fn on_backjump(&mut self, search: &SearchContext<'_>, backjump_level: u32);
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubsetError {
    #[error("clause index {index} out of range for {len} clauses")]
    IndexOutOfRange { index: ClauseIndex, len: usize },
    #[error("kept clause {index} is empty")]
    EmptyClauseKept { index: ClauseIndex },
}

/// Decides the formula. On `Unsat` the returned proof's source ids `1..=n`
/// are the formula's clauses in order. A formula that contains the empty
/// clause yields a proof with no derived entries whose conclusion is that
/// source clause itself.
pub fn solve(
    f: &CnfFormula,
    hook: Option<&mut dyn DecisionHook>,
    config: &SolverConfig,
) -> SolveResult {
    solve_clauses(f.num_vars(), f.clauses().to_vec(), hook, config)
}

/// Solves the sub-formula made of `keep` (in the given order) over the same
/// variable range. Source id `i + 1` of the returned proof corresponds to
/// `keep[i]`.
pub fn solve_subset(
    f: &CnfFormula,
    keep: &[ClauseIndex],
    hook: Option<&mut dyn DecisionHook>,
    config: &SolverConfig,
) -> Result<SolveResult, SubsetError> {
    let mut clauses = Vec::with_capacity(keep.len());
    for &index in keep {
        if index >= f.len() {
            return Err(SubsetError::IndexOutOfRange {
                index,
                len: f.len(),
            });
        }
        let clause = f.clause(index);
        if clause.is_empty() {
            return Err(SubsetError::EmptyClauseKept { index });
        }
        clauses.push(clause.clone());
    }
    Ok(solve_clauses(f.num_vars(), clauses, hook, config))
}

pub(crate) fn solve_clauses(
    num_vars: u32,
    clauses: Vec<Clause>,
    hook: Option<&mut dyn DecisionHook>,
    config: &SolverConfig,
) -> SolveResult {
    if clauses.iter().any(|c| c.is_empty()) {
        return SolveResult::Unsat(ProofLog::new(clauses));
    }
    Search::new(num_vars, clauses, hook, config).run()
}

struct ClauseRec {
    lits: Vec<Literal>,
    proof_id: ClauseId,
}

/// Max-heap over variable activities with deterministic tie-breaking
/// (smaller variable number wins).
struct VarOrder {
    heap: Vec<Var>,
    pos: Vec<usize>, // slot -> heap position + 1, 0 when absent
    activity: Vec<f64>,
}

impl VarOrder {
    fn new(num_vars: u32) -> VarOrder {
        let mut order = VarOrder {
            heap: Vec::with_capacity(num_vars as usize),
            pos: vec![0; num_vars as usize + 1],
            activity: vec![0.0; num_vars as usize + 1],
        };
        for n in 1..=num_vars {
            order.push(Var::new(n));
        }
        order
    }

    fn better(&self, a: Var, b: Var) -> bool {
        let (xa, xb) = (self.activity[a.slot()], self.activity[b.slot()]);
        xa > xb || (xa == xb && a < b)
    }

    fn push(&mut self, v: Var) {
        if self.pos[v.slot()] != 0 {
            return;
        }
        self.heap.push(v);
        self.pos[v.slot()] = self.heap.len();
        self.sift_up(self.heap.len() - 1);
    }

    fn pop_max(&mut self) -> Option<Var> {
        let top = *self.heap.first()?;
        self.pos[top.slot()] = 0;
        let last = self.heap.pop().unwrap();
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last.slot()] = 1;
            self.sift_down(0);
        }
        Some(top)
    }

    fn bump(&mut self, v: Var, inc: f64) -> f64 {
        self.activity[v.slot()] += inc;
        if self.pos[v.slot()] != 0 {
            self.sift_up(self.pos[v.slot()] - 1);
        }
        self.activity[v.slot()]
    }

    fn rescale(&mut self, factor: f64) {
        for a in &mut self.activity {
            *a *= factor;
        }
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.better(self.heap[i], self.heap[parent]) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let mut best = i;
            for child in [2 * i + 1, 2 * i + 2] {
                if child < self.heap.len() && self.better(self.heap[child], self.heap[best]) {
                    best = child;
                }
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i].slot()] = i + 1;
        self.pos[self.heap[j].slot()] = j + 1;
    }
}

struct Search<'h> {
    num_vars: u32,
    clauses: Vec<ClauseRec>,
    watches: Vec<Vec<u32>>,
    assignment: Assignment,
    reason: Vec<Option<u32>>,
    trail: Vec<Literal>,
    trail_lim: Vec<usize>,
    qhead: usize,
    order: VarOrder,
    phase: Vec<bool>,
    seen: Vec<bool>,
    proof: ProofLog,
    unit_entry: Vec<Option<ClauseId>>,
    lit_counts: LitCounts,
    hook: Option<&'h mut dyn DecisionHook>,
    var_inc: f64,
    conflicts_since_restart: u64,
    restarts: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn luby(mut x: u64) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) / 2;
        seq -= 1;
        x %= size;
    }
    1 << seq
}

impl<'h> Search<'h> {
    fn new(
        num_vars: u32,
        clauses: Vec<Clause>,
        hook: Option<&'h mut dyn DecisionHook>,
        config: &SolverConfig,
    ) -> Search<'h> {
        let recs = clauses
            .iter()
            .enumerate()
            .map(|(i, c)| ClauseRec {
                lits: c.literals().to_vec(),
                proof_id: i + 1,
            })
            .collect();
        let phase = (0..=num_vars as u64)
            .map(|n| config.seed != 0 && splitmix64(config.seed ^ n) & 1 == 1)
            .collect();
        Search {
            num_vars,
            clauses: recs,
            watches: vec![Vec::new(); 2 * (num_vars as usize + 1)],
            assignment: Assignment::new(num_vars),
            reason: vec![None; num_vars as usize + 1],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            order: VarOrder::new(num_vars),
            phase,
            seen: vec![false; num_vars as usize + 1],
            proof: ProofLog::new(clauses),
            unit_entry: vec![None; 2 * (num_vars as usize + 1)],
            lit_counts: LitCounts::new(num_vars, CONFLICT_WINDOW),
            hook,
            var_inc: 1.0,
            conflicts_since_restart: 0,
            restarts: 0,
        }
    }

    fn run(mut self) -> SolveResult {
        if let Err(conflicting) = self.attach_all() {
            self.log_root_conflict(conflicting);
            return SolveResult::Unsat(self.proof);
        }
        loop {
            if let Some(conflicting) = self.propagate() {
                if self.decision_level() == 0 {
                    self.log_root_conflict(conflicting);
                    return SolveResult::Unsat(self.proof);
                }
                self.handle_conflict(conflicting);
            } else if self.trail.len() == self.num_vars as usize {
                return SolveResult::Sat(self.assignment);
            } else if self.restart_due() {
                self.restart();
            } else {
                self.make_decision();
            }
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn attach_all(&mut self) -> Result<(), u32> {
        for ci in 0..self.clauses.len() as u32 {
            match self.clauses[ci as usize].lits.len() {
                0 => unreachable!("empty clauses are handled before search"),
                1 => {
                    let lit = self.clauses[ci as usize].lits[0];
                    match self.assignment.literal_value(lit) {
                        Some(true) => {}
                        Some(false) => return Err(ci),
                        None => self.enqueue(lit, Some(ci)),
                    }
                }
                _ => {
                    let (a, b) = {
                        let lits = &self.clauses[ci as usize].lits;
                        (lits[0], lits[1])
                    };
                    self.watches[a.code()].push(ci);
                    self.watches[b.code()].push(ci);
                }
            }
        }
        Ok(())
    }

    /// Runs unit propagation to fixpoint; returns a falsified clause on
    /// conflict.
    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let code = false_lit.code();
            let mut i = 0;
            'watchers: while i < self.watches[code].len() {
                let ci = self.watches[code][i];
                let other = {
                    let lits = &mut self.clauses[ci as usize].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                    debug_assert_eq!(lits[1], false_lit);
                    lits[0]
                };
                if self.assignment.literal_value(other) == Some(true) {
                    i += 1;
                    continue;
                }
                let len = self.clauses[ci as usize].lits.len();
                for k in 2..len {
                    let candidate = self.clauses[ci as usize].lits[k];
                    if self.assignment.literal_value(candidate) != Some(false) {
                        self.clauses[ci as usize].lits.swap(1, k);
                        self.watches[code].swap_remove(i);
                        self.watches[candidate.code()].push(ci);
                        continue 'watchers;
                    }
                }
                if self.assignment.literal_value(other) == Some(false) {
                    return Some(ci);
                }
                self.enqueue(other, Some(ci));
                i += 1;
            }
        }
        None
    }

    fn enqueue(&mut self, lit: Literal, reason: Option<u32>) {
        let level = self.decision_level();
        self.assignment.assign(lit, level);
        self.reason[lit.var().slot()] = reason;
        self.trail.push(lit);
        if level == 0 {
            if let Some(ci) = reason {
                self.log_root_unit(lit, ci);
            }
        }
    }

    /// Records a proof entry for a literal forced at level 0, resolving its
    /// reason clause against the unit entries of the other literals.
    fn log_root_unit(&mut self, lit: Literal, ci: u32) {
        if self.clauses[ci as usize].lits.len() == 1 {
            self.unit_entry[lit.code()] = Some(self.clauses[ci as usize].proof_id);
            return;
        }
        let chain = {
            let rec = &self.clauses[ci as usize];
            let mut chain = Vec::with_capacity(rec.lits.len());
            chain.push(rec.proof_id);
            for &m in &rec.lits {
                if m != lit {
                    chain.push(self.unit_entry[(!m).code()].expect("root literal has a unit entry"));
                }
            }
            chain
        };
        let id = self
            .proof
            .add_derived(Clause::new(vec![lit]).unwrap(), chain);
        self.unit_entry[lit.code()] = Some(id);
    }

    /// Derives the empty clause from a clause falsified at level 0.
    fn log_root_conflict(&mut self, ci: u32) {
        let chain = {
            let rec = &self.clauses[ci as usize];
            let mut chain = Vec::with_capacity(rec.lits.len() + 1);
            chain.push(rec.proof_id);
            for &m in &rec.lits {
                chain.push(self.unit_entry[(!m).code()].expect("root literal has a unit entry"));
            }
            chain
        };
        self.proof.add_derived(Clause::empty(), chain);
    }

    fn handle_conflict(&mut self, conflicting: u32) {
        self.conflicts_since_restart += 1;
        let (learned, backjump, chain) = self.analyze(conflicting);
        let clause = Clause::new(learned.clone()).expect("learned clause is not tautological");
        let proof_id = self.proof.add_derived(clause, chain);
        self.lit_counts.push(&learned);
        self.notify_backjump(backjump);
        self.backtrack(backjump);
        let assert_lit = learned[0];
        let ci = self.record_learned(learned, proof_id);
        self.enqueue(assert_lit, Some(ci));
        self.var_inc /= VAR_DECAY;
    }

    /// First-UIP conflict analysis. Returns the learned clause (asserting
    /// literal first, a deepest remaining literal second), the backjump
    /// level, and the resolution chain that derives the clause: the
    /// conflicting clause, the reason clauses in resolution order, then the
    /// unit entries that strip literals already false at level 0.
    fn analyze(&mut self, conflicting: u32) -> (Vec<Literal>, u32, Vec<ClauseId>) {
        let current = self.decision_level();
        let mut rest: Vec<Literal> = Vec::new();
        let mut chain = vec![self.clauses[conflicting as usize].proof_id];
        let mut dropped: Vec<Literal> = Vec::new();
        let mut to_clear: Vec<Var> = Vec::new();
        let mut counter = 0usize;
        let mut idx = self.trail.len();
        let mut clause_ci = conflicting;
        let mut pivot: Option<Literal> = None;

        let uip = loop {
            let len = self.clauses[clause_ci as usize].lits.len();
            for k in 0..len {
                let q = self.clauses[clause_ci as usize].lits[k];
                if Some(q) == pivot {
                    continue;
                }
                let v = q.var();
                if self.seen[v.slot()] {
                    continue;
                }
                let level = self.assignment.level(v).expect("conflict literal is assigned");
                if level == 0 {
                    if !dropped.contains(&q) {
                        dropped.push(q);
                    }
                    continue;
                }
                self.seen[v.slot()] = true;
                to_clear.push(v);
                self.bump_var(v);
                if level == current {
                    counter += 1;
                } else {
                    rest.push(q);
                }
            }
            let lit = loop {
                idx -= 1;
                let lit = self.trail[idx];
                if self.seen[lit.var().slot()] {
                    break lit;
                }
            };
            self.seen[lit.var().slot()] = false;
            counter -= 1;
            if counter == 0 {
                break lit;
            }
            clause_ci = self.reason[lit.var().slot()].expect("propagated literal has a reason");
            chain.push(self.clauses[clause_ci as usize].proof_id);
            pivot = Some(lit);
        };
        for &q in &dropped {
            chain.push(self.unit_entry[(!q).code()].expect("root literal has a unit entry"));
        }
        for v in to_clear {
            self.seen[v.slot()] = false;
        }

        let mut learned = Vec::with_capacity(rest.len() + 1);
        learned.push(!uip);
        learned.extend(rest);
        let backjump = if learned.len() == 1 {
            0
        } else {
            let mut deepest = 1;
            for k in 2..learned.len() {
                let lk = self.assignment.level(learned[k].var()).unwrap();
                let ld = self.assignment.level(learned[deepest].var()).unwrap();
                if lk > ld {
                    deepest = k;
                }
            }
            learned.swap(1, deepest);
            self.assignment.level(learned[1].var()).unwrap()
        };
        (learned, backjump, chain)
    }

    fn bump_var(&mut self, v: Var) {
        if self.order.bump(v, self.var_inc) > ACTIVITY_LIMIT {
            self.order.rescale(1.0 / ACTIVITY_LIMIT);
            self.var_inc /= ACTIVITY_LIMIT;
        }
    }

    fn record_learned(&mut self, lits: Vec<Literal>, proof_id: ClauseId) -> u32 {
        let ci = self.clauses.len() as u32;
        if lits.len() >= 2 {
            self.watches[lits[0].code()].push(ci);
            self.watches[lits[1].code()].push(ci);
        }
        self.clauses.push(ClauseRec { lits, proof_id });
        ci
    }

    fn notify_backjump(&mut self, backjump_level: u32) {
        let context = SearchContext {
            assignment: &self.assignment,
            recent_conflicts: &self.lit_counts,
        };
        if let Some(hook) = self.hook.as_mut() {
            hook.on_backjump(&context, backjump_level);
        }
    }

    fn backtrack(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let cut = self.trail_lim[level as usize];
        for k in (cut..self.trail.len()).rev() {
            let lit = self.trail[k];
            let v = lit.var();
            self.phase[v.slot()] = lit.is_positive();
            self.assignment.unassign(v);
            self.reason[v.slot()] = None;
            self.order.push(v);
        }
        self.trail.truncate(cut);
        self.trail_lim.truncate(level as usize);
        self.qhead = cut;
    }

    fn restart_due(&self) -> bool {
        self.conflicts_since_restart >= RESTART_BASE * luby(self.restarts)
    }

    fn restart(&mut self) {
        self.restarts += 1;
        self.conflicts_since_restart = 0;
        if self.decision_level() > 0 {
            self.notify_backjump(0);
            self.backtrack(0);
        }
    }

    fn make_decision(&mut self) {
        let hooked = {
            let context = SearchContext {
                assignment: &self.assignment,
                recent_conflicts: &self.lit_counts,
            };
            match self.hook.as_mut() {
                Some(hook) => hook.next_decision(&context),
                None => None,
            }
        };
        debug_assert!(
            hooked.is_none_or(|l| self.assignment.literal_value(l).is_none()),
            "decision hooks must return unassigned literals"
        );
        let lit = hooked
            .filter(|&l| self.assignment.literal_value(l).is_none())
            .unwrap_or_else(|| self.pick_branch());
        self.trail_lim.push(self.trail.len());
        self.enqueue(lit, None);
    }

    fn pick_branch(&mut self) -> Literal {
        loop {
            let v = self.order.pop_max().expect("an unassigned variable exists");
            if self.assignment.value(v).is_none() {
                return Literal::new(v, self.phase[v.slot()]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_dimacs;
    use crate::oracle::{brute_force_sat, OracleResult};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TWINCORE: &str = "p cnf 4 7\n1 4 -2 0\n1 4 2 0\n1 2 -4 0\n-3 2 0\n-1 3 0\n-1 -3 0\n-2 0\n";

    struct AlwaysUnknown;

    impl DecisionHook for AlwaysUnknown {
        fn next_decision(&mut self, _: &SearchContext<'_>) -> Option<Literal> {
            None
        }

        fn on_backjump(&mut self, _: &SearchContext<'_>, _: u32) {}
    }

    fn solve_text(text: &str) -> SolveResult {
        solve(&parse_dimacs(text).unwrap(), None, &SolverConfig::default())
    }

    #[test]
    fn sat_model_is_total_and_satisfying() {
        let f = parse_dimacs("p cnf 3 2\n1 2 0\n-1 3 0\n").unwrap();
        match solve(&f, None, &SolverConfig::default()) {
            SolveResult::Sat(model) => {
                assert!(model.is_total());
                assert!(model.satisfies(&f));
            }
            SolveResult::Unsat(_) => panic!("expected sat"),
        }
    }

    #[test]
    fn empty_formula_is_sat_with_empty_model() {
        let f = parse_dimacs("p cnf 0 0\n").unwrap();
        match solve(&f, None, &SolverConfig::default()) {
            SolveResult::Sat(model) => assert_eq!(model.num_vars(), 0),
            SolveResult::Unsat(_) => panic!("expected sat"),
        }
    }

    #[test]
    fn unsat_proof_ends_in_the_empty_clause_and_validates() {
        let f = parse_dimacs(TWINCORE).unwrap();
        match solve(&f, None, &SolverConfig::default()) {
            SolveResult::Unsat(proof) => {
                assert_eq!(proof.num_sources(), 7);
                assert_eq!(proof.empty_clause_id(), Some(proof.num_entries()));
                assert!(!proof.derived().is_empty());
                proof.validate().unwrap();
                let last = proof.derived().last().unwrap();
                assert!(last.clause.is_empty());
                assert!(!last.antecedents.is_empty());
            }
            SolveResult::Sat(_) => panic!("expected unsat"),
        }
    }

    #[test]
    fn contradictory_units_conflict_during_attachment() {
        match solve_text("p cnf 1 2\n1 0\n-1 0\n") {
            SolveResult::Unsat(proof) => {
                proof.validate().unwrap();
                assert_eq!(proof.empty_clause_id(), Some(3));
            }
            SolveResult::Sat(_) => panic!("expected unsat"),
        }
    }

    #[test]
    fn root_unit_cascades_are_logged() {
        // propagation forces 2 and then 3 before the last clause clashes
        match solve_text("p cnf 3 4\n1 0\n-1 2 0\n-2 3 0\n-2 -3 0\n") {
            SolveResult::Unsat(proof) => {
                proof.validate().unwrap();
                // derived entries include logged units for 2 and 3
                let derived_units: Vec<_> = proof
                    .derived()
                    .iter()
                    .filter(|e| e.clause.len() == 1)
                    .collect();
                assert!(derived_units.len() >= 2);
            }
            SolveResult::Sat(_) => panic!("expected unsat"),
        }
    }

    #[test]
    fn formula_containing_the_empty_clause_degenerates() {
        let f = parse_dimacs("p cnf 2 2\n0\n1 2 0\n").unwrap();
        match solve(&f, None, &SolverConfig::default()) {
            SolveResult::Unsat(proof) => {
                assert!(proof.derived().is_empty());
                assert_eq!(proof.empty_clause_id(), Some(1));
            }
            SolveResult::Sat(_) => panic!("expected unsat"),
        }
    }

    #[test]
    fn solve_subset_maps_source_ids_positionally() {
        let f = parse_dimacs(TWINCORE).unwrap();
        let keep = vec![1, 2, 4, 5, 6];
        match solve_subset(&f, &keep, None, &SolverConfig::default()).unwrap() {
            SolveResult::Unsat(proof) => {
                assert_eq!(proof.num_sources(), keep.len());
                for (i, &index) in keep.iter().enumerate() {
                    assert_eq!(&proof.sources()[i], f.clause(index));
                }
                proof.validate().unwrap();
            }
            SolveResult::Sat(_) => panic!("expected unsat"),
        }
    }

    #[test]
    fn solve_subset_rejects_bad_requests() {
        let f = parse_dimacs("p cnf 2 2\n0\n1 2 0\n").unwrap();
        assert_eq!(
            solve_subset(&f, &[5], None, &SolverConfig::default()),
            Err(SubsetError::IndexOutOfRange { index: 5, len: 2 })
        );
        assert_eq!(
            solve_subset(&f, &[0], None, &SolverConfig::default()),
            Err(SubsetError::EmptyClauseKept { index: 0 })
        );
    }

    #[test]
    fn always_unknown_hook_changes_nothing() {
        for text in [
            TWINCORE,
            "p cnf 3 2\n1 2 0\n-1 3 0\n",
            "p cnf 4 8\n1 2 0\n-1 2 0\n1 -2 0\n-1 -2 3 0\n3 4 0\n-3 4 0\n3 -4 0\n-3 -4 0\n",
        ] {
            let f = parse_dimacs(text).unwrap();
            let config = SolverConfig::default();
            let plain = solve(&f, None, &config);
            let mut hook = AlwaysUnknown;
            let hooked = solve(&f, Some(&mut hook), &config);
            assert_eq!(plain, hooked);
        }
    }

    #[test]
    fn identical_seeds_give_identical_runs() {
        let f = parse_dimacs(TWINCORE).unwrap();
        for seed in [0, 1, 42] {
            let config = SolverConfig { seed };
            assert_eq!(solve(&f, None, &config), solve(&f, None, &config));
        }
    }

    fn random_formula(rng: &mut ChaCha8Rng) -> CnfFormula {
        let num_vars = rng.gen_range(1..=8u32);
        let num_clauses = rng.gen_range(0..=(4 * num_vars) as usize);
        let mut clauses = Vec::new();
        while clauses.len() < num_clauses {
            let len = rng.gen_range(1..=3usize).min(num_vars as usize);
            let mut vars: Vec<u32> = (1..=num_vars).collect();
            let mut lits = Vec::new();
            for _ in 0..len {
                let i = rng.gen_range(0..vars.len());
                let v = vars.swap_remove(i);
                lits.push(Literal::new(Var::new(v), rng.gen_bool(0.5)));
            }
            clauses.push(Clause::new(lits).unwrap());
        }
        CnfFormula::new(num_vars, clauses)
    }

    #[test]
    fn agrees_with_the_oracle_on_small_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xB0A7);
        for _ in 0..400 {
            let f = random_formula(&mut rng);
            let expected = brute_force_sat(&f).unwrap();
            match solve(&f, None, &SolverConfig::default()) {
                SolveResult::Sat(model) => {
                    assert!(expected.is_sat(), "solver sat, oracle unsat: {f:?}");
                    assert!(model.satisfies(&f));
                }
                SolveResult::Unsat(proof) => {
                    assert_eq!(expected, OracleResult::Unsat, "solver unsat, oracle sat: {f:?}");
                    proof.validate().unwrap();
                    assert!(proof.empty_clause_id().is_some());
                }
            }
        }
    }

    #[test]
    fn luby_sequence_prefix() {
        let prefix: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(prefix, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }
}
