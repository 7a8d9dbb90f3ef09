//! Minimal unsatisfiable core extraction built on a proof-logging CDCL
//! solver.

pub mod cli;
pub mod extractors;
pub mod formula;
pub mod gen;
pub mod oracle;
pub mod proof;
pub mod refutation;
pub mod rrp;
pub mod solver;
