//! Resolution proof logs and their on-disk trace format.
//!
//! A [`ProofLog`] records every input clause plus every clause the solver
//! derived, in derivation order. Ids are dense and 1-based: `1..=n` are the
//! input clauses in formula order, derived clauses continue from `n + 1`.
//! Each derived clause carries the list of antecedent ids whose sequential
//! resolution reproduces it, so a log can be checked without trusting the
//! solver that wrote it.
//!
//! Trace text format, one entry per line:
//!
//! ```text
//! <id> <literal>... 0 <antecedent-id>... 0
//! ```
//!
//! Input clauses have an empty antecedent section.

use std::fmt;
use std::io;

use thiserror::Error;

use crate::formula::{Clause, Literal};

/// 1-based id of a proof entry (input clause or derived clause).
pub type ClauseId = usize;

/// A clause derived by sequentially resolving `antecedents` left to right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedEntry {
    pub clause: Clause,
    pub antecedents: Vec<ClauseId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("no complementary pair between the clauses")]
    NoPivot,
    #[error("clauses clash on more than one variable")]
    MultiplePivots,
}

/// Resolves two clauses on their unique complementary pair.
pub fn resolve(a: &Clause, b: &Clause) -> Result<Clause, ResolveError> {
    let mut pivot = None;
    for &lit in a.literals() {
        if b.contains(!lit) {
            if pivot.is_some() {
                return Err(ResolveError::MultiplePivots);
            }
            pivot = Some(lit);
        }
    }
    let pivot = pivot.ok_or(ResolveError::NoPivot)?;
    let lits = a
        .literals()
        .iter()
        .chain(b.literals())
        .copied()
        .filter(|&l| l != pivot && l != !pivot)
        .collect::<Vec<Literal>>();
    // A surviving clash would have tripped MultiplePivots above.
    Ok(Clause::new(lits).expect("resolvent cannot be tautological"))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("entry {id}: unknown antecedent {antecedent}")]
    UnknownAntecedent { id: ClauseId, antecedent: ClauseId },
    #[error("entry {id}: antecedent {antecedent} does not precede it")]
    ForwardReference { id: ClauseId, antecedent: ClauseId },
    #[error("entry {id}: empty antecedent chain")]
    EmptyChain { id: ClauseId },
    #[error("entry {id}: resolution step failed: {source}")]
    BadStep {
        id: ClauseId,
        #[source]
        source: ResolveError,
    },
    #[error("entry {id}: chain does not reproduce the recorded clause")]
    WrongClause { id: ClauseId },
}

/// An append-only resolution log produced by one solver run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofLog {
    sources: Vec<Clause>,
    derived: Vec<DerivedEntry>,
}

impl ProofLog {
    pub fn new(sources: Vec<Clause>) -> ProofLog {
        ProofLog {
            sources,
            derived: Vec::new(),
        }
    }

    pub(crate) fn add_derived(&mut self, clause: Clause, antecedents: Vec<ClauseId>) -> ClauseId {
        debug_assert!(!antecedents.is_empty());
        self.derived.push(DerivedEntry { clause, antecedents });
        self.sources.len() + self.derived.len()
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn sources(&self) -> &[Clause] {
        &self.sources
    }

    pub fn derived(&self) -> &[DerivedEntry] {
        &self.derived
    }

    pub fn num_entries(&self) -> usize {
        self.sources.len() + self.derived.len()
    }

    pub fn clause(&self, id: ClauseId) -> Option<&Clause> {
        if id == 0 || id > self.num_entries() {
            return None;
        }
        if id <= self.sources.len() {
            Some(&self.sources[id - 1])
        } else {
            Some(&self.derived[id - self.sources.len() - 1].clause)
        }
    }

    /// Id of the empty clause this log concludes with: the final derived
    /// entry when one exists, otherwise an input clause that is itself empty
    /// (the degenerate refutation of a formula containing the empty clause).
    pub fn empty_clause_id(&self) -> Option<ClauseId> {
        if let Some(last) = self.derived.last() {
            if last.clause.is_empty() {
                return Some(self.num_entries());
            }
        }
        if self.derived.is_empty() {
            if let Some(pos) = self.sources.iter().position(|c| c.is_empty()) {
                return Some(pos + 1);
            }
        }
        None
    }

    /// Replays every derived entry and checks it against the recorded clause.
    pub fn validate(&self) -> Result<(), ProofError> {
        for (i, entry) in self.derived.iter().enumerate() {
            let id = self.sources.len() + i + 1;
            let replayed = self.replay_chain(id, &entry.antecedents)?;
            if replayed != entry.clause {
                return Err(ProofError::WrongClause { id });
            }
        }
        Ok(())
    }

    fn replay_chain(&self, id: ClauseId, chain: &[ClauseId]) -> Result<Clause, ProofError> {
        let mut iter = chain.iter();
        let first = *iter.next().ok_or(ProofError::EmptyChain { id })?;
        let mut acc = self
            .checked_antecedent(id, first)?
            .clone();
        for &next in iter {
            let clause = self.checked_antecedent(id, next)?;
            acc = resolve(&acc, clause).map_err(|source| ProofError::BadStep { id, source })?;
        }
        Ok(acc)
    }

    fn checked_antecedent(&self, id: ClauseId, antecedent: ClauseId) -> Result<&Clause, ProofError> {
        if antecedent >= id {
            return Err(ProofError::ForwardReference { id, antecedent });
        }
        self.clause(antecedent)
            .ok_or(ProofError::UnknownAntecedent { id, antecedent })
    }

    pub fn write_trace<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        for (i, clause) in self.sources.iter().enumerate() {
            write_entry(&mut w, i + 1, clause, &[])?;
        }
        for (i, entry) in self.derived.iter().enumerate() {
            write_entry(
                &mut w,
                self.sources.len() + i + 1,
                &entry.clause,
                &entry.antecedents,
            )?;
        }
        Ok(())
    }

    pub fn to_trace_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_trace(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }
}

fn write_entry<W: io::Write>(
    w: &mut W,
    id: ClauseId,
    clause: &Clause,
    antecedents: &[ClauseId],
) -> io::Result<()> {
    write!(w, "{} ", id)?;
    for lit in clause.literals() {
        write!(w, "{} ", lit.to_dimacs())?;
    }
    write!(w, "0")?;
    for ant in antecedents {
        write!(w, " {}", ant)?;
    }
    writeln!(w, " 0")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceParseError {
    #[error("line {line}: bad token {token:?}")]
    BadToken { line: usize, token: String },
    #[error("line {line}: expected entry id {expected}, found {found}")]
    NonDenseId {
        line: usize,
        expected: ClauseId,
        found: ClauseId,
    },
    #[error("line {line}: truncated entry")]
    Truncated { line: usize },
    #[error("line {line}: input clause after a derived clause")]
    SourceAfterDerived { line: usize },
    #[error("line {line}: tautological clause")]
    Tautology { line: usize },
}

/// Parses the trace text format back into a [`ProofLog`]. Entries must be
/// dense and in id order, with all input clauses before derived ones, which
/// is exactly what [`ProofLog::write_trace`] emits.
pub fn parse_trace(text: &str) -> Result<ProofLog, TraceParseError> {
    let mut log = ProofLog::new(Vec::new());
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        let mut numbers = trimmed.split_whitespace().map(|token| {
            token.parse::<i64>().map_err(|_| TraceParseError::BadToken {
                line,
                token: token.to_string(),
            })
        });
        let id = match numbers.next() {
            Some(n) => n?,
            None => continue,
        };
        let expected = log.num_entries() + 1;
        if id <= 0 || id as usize != expected {
            return Err(TraceParseError::NonDenseId {
                line,
                expected,
                found: id.max(0) as usize,
            });
        }
        let mut lits = Vec::new();
        let mut ants = Vec::new();
        let mut in_lits = true;
        let mut closed = false;
        for n in numbers {
            let n = n?;
            if n == 0 {
                if in_lits {
                    in_lits = false;
                } else {
                    closed = true;
                    break;
                }
            } else if in_lits {
                let lit = Literal::from_dimacs(n as i32).ok_or_else(|| TraceParseError::BadToken {
                    line,
                    token: n.to_string(),
                })?;
                lits.push(lit);
            } else {
                ants.push(n as usize);
            }
        }
        if !closed {
            return Err(TraceParseError::Truncated { line });
        }
        let clause = Clause::new(lits).map_err(|_| TraceParseError::Tautology { line })?;
        if ants.is_empty() {
            if !log.derived.is_empty() {
                return Err(TraceParseError::SourceAfterDerived { line });
            }
            log.sources.push(clause);
        } else {
            log.derived.push(DerivedEntry {
                clause,
                antecedents: ants,
            });
        }
    }
    Ok(log)
}

impl fmt::Display for ProofLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_trace_string())
    }
}
