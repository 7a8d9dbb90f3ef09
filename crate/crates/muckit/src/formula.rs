//! CNF formulas: variables, literals, clauses, partial assignments, and
//! DIMACS text I/O.
//!
//! Clauses are kept canonical (literals sorted, duplicates removed) and a
//! clause may never contain a variable in both polarities; tautological
//! input is rejected when a clause is constructed or parsed. Clause
//! identity within a formula is positional: [`ClauseIndex`] is the 0-based
//! position in file order, and duplicates of the same clause keep distinct
//! indices.

use std::fmt;
use std::ops::Not;

use thiserror::Error;

/// 0-based position of a clause within a [`CnfFormula`].
pub type ClauseIndex = usize;

/// A propositional variable, numbered from 1 as in DIMACS.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    /// Largest variable number accepted by the parser.
    pub const MAX_NUMBER: u32 = (i32::MAX as u32) >> 1;

    pub fn new(number: u32) -> Var {
        assert!(number >= 1, "variables are numbered from 1");
        assert!(number <= Var::MAX_NUMBER, "variable number too large");
        Var(number)
    }

    pub fn number(self) -> u32 {
        self.0
    }

    /// Slot for per-variable tables indexed 1..=num_vars.
    pub(crate) fn slot(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var({})", self.0)
    }
}

/// A signed variable. Packed as `var << 1 | sign` so that a literal and its
/// negation are adjacent codes and either polarity can index dense tables.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal(u32);

impl Literal {
    pub fn new(var: Var, positive: bool) -> Literal {
        Literal(var.0 << 1 | u32::from(!positive))
    }

    pub fn positive(var: Var) -> Literal {
        Literal::new(var, true)
    }

    pub fn negative(var: Var) -> Literal {
        Literal::new(var, false)
    }

    /// `None` when `n == 0` (the DIMACS clause terminator) or out of range.
    pub fn from_dimacs(n: i32) -> Option<Literal> {
        if n == 0 || n == i32::MIN || n.unsigned_abs() > Var::MAX_NUMBER {
            return None;
        }
        Some(Literal::new(Var::new(n.unsigned_abs()), n > 0))
    }

    pub fn to_dimacs(self) -> i32 {
        let v = (self.0 >> 1) as i32;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    /// Dense index; a literal and its negation differ in the low bit.
    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }
}

impl Not for Literal {
    type Output = Literal;

    fn not(self) -> Literal {
        Literal(self.0 ^ 1)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lit({})", self.to_dimacs())
    }
}

/// A clause would contain some variable in both polarities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("tautological clause: variable {var} occurs in both polarities")]
pub struct TautologyError {
    pub var: Var,
}

/// A disjunction of literals in canonical order. The empty clause is valid
/// and unsatisfiable.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    lits: Vec<Literal>,
}

impl Clause {
    pub fn new(mut lits: Vec<Literal>) -> Result<Clause, TautologyError> {
        lits.sort_unstable();
        lits.dedup();
        for pair in lits.windows(2) {
            if pair[0].var() == pair[1].var() {
                return Err(TautologyError { var: pair[0].var() });
            }
        }
        Ok(Clause { lits })
    }

    pub fn empty() -> Clause {
        Clause { lits: Vec::new() }
    }

    /// Convenience constructor from DIMACS-style signed integers.
    pub fn from_dimacs(lits: &[i32]) -> Result<Clause, TautologyError> {
        let lits = lits
            .iter()
            .map(|&n| Literal::from_dimacs(n).expect("nonzero in-range literal"))
            .collect();
        Clause::new(lits)
    }

    pub fn literals(&self) -> &[Literal] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn contains(&self, lit: Literal) -> bool {
        self.lits.binary_search(&lit).is_ok()
    }

    pub fn max_var(&self) -> Option<Var> {
        self.lits.last().map(|l| l.var())
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Clause[")?;
        for (i, l) in self.lits.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", l.to_dimacs())?;
        }
        write!(f, "]")
    }
}

/// Status of a clause under a (possibly partial) assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClauseStatus {
    Satisfied,
    Falsified,
    Undetermined,
}

/// The empty clause is falsified under every assignment.
pub fn clause_status(clause: &Clause, assignment: &Assignment) -> ClauseStatus {
    let mut undetermined = false;
    for &lit in clause.literals() {
        match assignment.literal_value(lit) {
            Some(true) => return ClauseStatus::Satisfied,
            Some(false) => {}
            None => undetermined = true,
        }
    }
    if undetermined {
        ClauseStatus::Undetermined
    } else {
        ClauseStatus::Falsified
    }
}

/// A partial truth assignment that also records the decision level at which
/// each variable was assigned. The level is meaningful only while the
/// variable is assigned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    value: Vec<Option<bool>>,
    level: Vec<u32>,
}

impl Assignment {
    pub fn new(num_vars: u32) -> Assignment {
        Assignment {
            value: vec![None; num_vars as usize + 1],
            level: vec![0; num_vars as usize + 1],
        }
    }

    pub fn num_vars(&self) -> u32 {
        (self.value.len() - 1) as u32
    }

    pub fn value(&self, var: Var) -> Option<bool> {
        self.value[var.slot()]
    }

    /// Truth value of `lit` under the assignment, `None` when unassigned.
    pub fn literal_value(&self, lit: Literal) -> Option<bool> {
        self.value[lit.var().slot()].map(|v| v == lit.is_positive())
    }

    /// Decision level of `var`, recorded only while assigned.
    pub fn level(&self, var: Var) -> Option<u32> {
        self.value[var.slot()].map(|_| self.level[var.slot()])
    }

    /// Makes `lit` true at `level`.
    pub fn assign(&mut self, lit: Literal, level: u32) {
        let slot = lit.var().slot();
        debug_assert!(self.value[slot].is_none(), "variable already assigned");
        self.value[slot] = Some(lit.is_positive());
        self.level[slot] = level;
    }

    pub fn unassign(&mut self, var: Var) {
        self.value[var.slot()] = None;
    }

    pub fn assigned_count(&self) -> usize {
        self.value.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_total(&self) -> bool {
        self.value[1..].iter().all(|v| v.is_some())
    }

    /// True literals of a total assignment, ascending by variable.
    pub fn to_literals(&self) -> Vec<Literal> {
        (1..=self.num_vars())
            .filter_map(|n| {
                let var = Var::new(n);
                self.value(var).map(|b| Literal::new(var, b))
            })
            .collect()
    }

    pub fn satisfies(&self, formula: &CnfFormula) -> bool {
        formula
            .clauses()
            .iter()
            .all(|c| clause_status(c, self) == ClauseStatus::Satisfied)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("missing `p cnf <vars> <clauses>` header")]
    MissingHeader,
    #[error("malformed header line: {0:?}")]
    BadHeader(String),
    #[error("bad token {0:?}, expected an integer literal")]
    BadToken(String),
    #[error("literal {literal} out of range for {num_vars} variables")]
    LiteralOutOfRange { literal: i32, num_vars: u32 },
    #[error("header declares {declared} clauses but the body has {found}")]
    WrongClauseCount { declared: usize, found: usize },
    #[error("last clause is not terminated by 0")]
    UnterminatedClause,
    #[error("clause {clause} is tautological on variable {var}")]
    Tautology { clause: ClauseIndex, var: Var },
}

/// An immutable CNF formula over variables `1..=num_vars`.
#[derive(Clone, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    /// `num_vars` must cover every variable used by `clauses`.
    pub fn new(num_vars: u32, clauses: Vec<Clause>) -> CnfFormula {
        for c in &clauses {
            if let Some(v) = c.max_var() {
                assert!(
                    v.number() <= num_vars,
                    "clause uses variable {} beyond num_vars {}",
                    v,
                    num_vars
                );
            }
        }
        CnfFormula { num_vars, clauses }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, index: ClauseIndex) -> &Clause {
        &self.clauses[index]
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Sub-formula over the same variable range, clauses in `keep` order.
    pub fn restrict(&self, keep: &[ClauseIndex]) -> CnfFormula {
        let clauses = keep.iter().map(|&i| self.clauses[i].clone()).collect();
        CnfFormula {
            num_vars: self.num_vars,
            clauses,
        }
    }
}

impl fmt::Debug for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CnfFormula({} vars, {:?})", self.num_vars, self.clauses)
    }
}

/// Parses DIMACS CNF text. Comment lines start with `c`; the `p cnf` header
/// must precede the clause body; every clause ends with `0`. Tautological
/// clauses, out-of-range literals, and clause-count mismatches are errors.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, ParseError> {
    let mut lines = text.lines();
    let (num_vars, declared) = loop {
        let line = lines.next().ok_or(ParseError::MissingHeader)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if !trimmed.starts_with('p') {
            return Err(ParseError::MissingHeader);
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
            return Err(ParseError::BadHeader(line.to_string()));
        }
        let num_vars: u32 = fields[2]
            .parse()
            .ok()
            .filter(|&v| v <= Var::MAX_NUMBER)
            .ok_or_else(|| ParseError::BadHeader(line.to_string()))?;
        let declared: usize = fields[3]
            .parse()
            .map_err(|_| ParseError::BadHeader(line.to_string()))?;
        break (num_vars, declared);
    };

    let mut clauses: Vec<Clause> = Vec::with_capacity(declared);
    let mut current: Vec<Literal> = Vec::new();
    let mut open = false;
    for line in lines {
        let trimmed = line.trim();
        if trimmed.starts_with('c') {
            continue;
        }
        for token in trimmed.split_whitespace() {
            let n: i32 = token
                .parse()
                .map_err(|_| ParseError::BadToken(token.to_string()))?;
            if n == 0 {
                let clause = Clause::new(std::mem::take(&mut current)).map_err(|e| {
                    ParseError::Tautology {
                        clause: clauses.len(),
                        var: e.var,
                    }
                })?;
                clauses.push(clause);
                open = false;
            } else {
                let lit = Literal::from_dimacs(n).filter(|l| l.var().number() <= num_vars);
                let lit = lit.ok_or(ParseError::LiteralOutOfRange {
                    literal: n,
                    num_vars,
                })?;
                current.push(lit);
                open = true;
            }
        }
    }
    if open {
        return Err(ParseError::UnterminatedClause);
    }
    if clauses.len() != declared {
        return Err(ParseError::WrongClauseCount {
            declared,
            found: clauses.len(),
        });
    }
    Ok(CnfFormula::new(num_vars, clauses))
}

/// Renders a formula in the exact byte format the toolkit emits: the header,
/// then one clause per line with space-separated literals and a trailing 0.
pub fn emit_dimacs(formula: &CnfFormula) -> String {
    let mut out = String::new();
    emit_dimacs_to(formula, &mut out);
    out
}

pub(crate) fn emit_dimacs_to(formula: &CnfFormula, out: &mut String) {
    use fmt::Write;

    writeln!(out, "p cnf {} {}", formula.num_vars(), formula.len()).unwrap();
    for clause in formula.clauses() {
        for lit in clause.literals() {
            write!(out, "{} ", lit.to_dimacs()).unwrap();
        }
        out.push_str("0\n");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lit(n: i32) -> Literal {
        Literal::from_dimacs(n).unwrap()
    }

    #[test]
    fn literal_packing_round_trips() {
        for n in [1, -1, 2, -2, 41, -97] {
            assert_eq!(lit(n).to_dimacs(), n);
        }
        assert_eq!(Literal::from_dimacs(0), None);
        assert_eq!(!lit(3), lit(-3));
        assert_eq!(!!lit(-3), lit(-3));
        assert_eq!(lit(5).var(), Var::new(5));
        assert!(lit(5).is_positive());
        assert!(!lit(-5).is_positive());
    }

    #[test]
    fn clause_canonicalizes_and_dedups() {
        let c = Clause::from_dimacs(&[4, 1, -2, 1]).unwrap();
        let rendered: Vec<i32> = c.literals().iter().map(|l| l.to_dimacs()).collect();
        assert_eq!(rendered, vec![1, -2, 4]);
        assert_eq!(c.len(), 3);
        assert!(c.contains(lit(-2)));
        assert!(!c.contains(lit(2)));
    }

    #[test]
    fn tautology_is_rejected() {
        let err = Clause::from_dimacs(&[1, -1, 2]).unwrap_err();
        assert_eq!(err.var, Var::new(1));
    }

    #[test]
    fn parses_the_header_and_clauses() {
        let f = parse_dimacs("c comment\np cnf 3 2\n1 -3 0\n2 0\n").unwrap();
        assert_eq!(f.num_vars(), 3);
        assert_eq!(f.len(), 2);
        assert_eq!(f.clause(0), &Clause::from_dimacs(&[1, -3]).unwrap());
        assert_eq!(f.clause(1), &Clause::from_dimacs(&[2]).unwrap());
    }

    #[test]
    fn parses_an_empty_clause() {
        let f = parse_dimacs("p cnf 2 1\n0\n").unwrap();
        assert_eq!(f.len(), 1);
        assert!(f.clause(0).is_empty());
    }

    #[test]
    fn parses_clauses_spanning_lines() {
        let f = parse_dimacs("p cnf 4 2\n1 2\n3 0 -4\n0\n").unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.clause(0), &Clause::from_dimacs(&[1, 2, 3]).unwrap());
        assert_eq!(f.clause(1), &Clause::from_dimacs(&[-4]).unwrap());
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_dimacs(""), Err(ParseError::MissingHeader));
        assert_eq!(parse_dimacs("1 2 0\n"), Err(ParseError::MissingHeader));
        assert!(matches!(
            parse_dimacs("p cnf x 1\n1 0\n"),
            Err(ParseError::BadHeader(_))
        ));
        assert_eq!(
            parse_dimacs("p cnf 2 2\n1 0\n"),
            Err(ParseError::WrongClauseCount {
                declared: 2,
                found: 1
            })
        );
        assert_eq!(
            parse_dimacs("p cnf 2 1\n1 0\n2 0\n"),
            Err(ParseError::WrongClauseCount {
                declared: 1,
                found: 2
            })
        );
        assert_eq!(
            parse_dimacs("p cnf 2 1\n3 0\n"),
            Err(ParseError::LiteralOutOfRange {
                literal: 3,
                num_vars: 2
            })
        );
        assert_eq!(
            parse_dimacs("p cnf 2 1\n1 2\n"),
            Err(ParseError::UnterminatedClause)
        );
        assert_eq!(
            parse_dimacs("p cnf 2 1\n1 -1 0\n"),
            Err(ParseError::Tautology {
                clause: 0,
                var: Var::new(1)
            })
        );
    }

    #[test]
    fn emit_format_is_exact() {
        let f = parse_dimacs("p cnf 4 2\nc mid comment\n1 4 -2 0\n0\n").unwrap();
        assert_eq!(emit_dimacs(&f), "p cnf 4 2\n1 -2 4 0\n0\n");
    }

    #[test]
    fn clause_status_cases() {
        let c = Clause::from_dimacs(&[1, -2]).unwrap();
        let mut a = Assignment::new(2);
        assert_eq!(clause_status(&c, &a), ClauseStatus::Undetermined);
        a.assign(lit(-1), 1);
        assert_eq!(clause_status(&c, &a), ClauseStatus::Undetermined);
        a.assign(lit(2), 2);
        assert_eq!(clause_status(&c, &a), ClauseStatus::Falsified);
        a.unassign(Var::new(2));
        a.assign(lit(-2), 2);
        assert_eq!(clause_status(&c, &a), ClauseStatus::Satisfied);
        assert_eq!(
            clause_status(&Clause::empty(), &a),
            ClauseStatus::Falsified
        );
    }

    #[test]
    fn assignment_levels_follow_assignment() {
        let mut a = Assignment::new(3);
        assert_eq!(a.level(Var::new(2)), None);
        a.assign(lit(2), 4);
        assert_eq!(a.level(Var::new(2)), Some(4));
        a.unassign(Var::new(2));
        assert_eq!(a.level(Var::new(2)), None);
    }

    prop_compose! {
        fn arb_formula()(num_vars in 1u32..9)(
            num_vars in Just(num_vars),
            raw in prop::collection::vec(
                prop::collection::vec((1u32..=num_vars, any::<bool>()), 0..6),
                0..12,
            ),
        ) -> CnfFormula {
            let clauses = raw
                .into_iter()
                .filter_map(|lits| {
                    let lits = lits
                        .into_iter()
                        .map(|(v, pos)| Literal::new(Var::new(v), pos))
                        .collect();
                    Clause::new(lits).ok()
                })
                .collect();
            CnfFormula::new(num_vars, clauses)
        }
    }

    proptest! {
        #[test]
        fn dimacs_round_trip(f in arb_formula()) {
            let text = emit_dimacs(&f);
            let back = parse_dimacs(&text).unwrap();
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(emit_dimacs(&back), text);
        }

        #[test]
        fn total_assignments_decide_every_clause(f in arb_formula(), bits in any::<u64>()) {
            let mut a = Assignment::new(f.num_vars());
            for n in 1..=f.num_vars() {
                let positive = bits >> (n % 64) & 1 == 1;
                a.assign(Literal::new(Var::new(n), positive), 0);
            }
            for c in f.clauses() {
                prop_assert_ne!(clause_status(c, &a), ClauseStatus::Undetermined);
            }
        }
    }
}
