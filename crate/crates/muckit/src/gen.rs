//! Deterministic instance generators for the bundled corpus and the test
//! suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{Clause, CnfFormula, Literal, Var};

/// The pigeonhole principle instance PHP(holes + 1, holes): more pigeons
/// than holes, one clause per pigeon plus pairwise hole exclusions. The
/// formula is unsatisfiable and every clause is necessary.
///
/// Variable `holes * pigeon + hole + 1` puts `pigeon` into `hole`.
pub fn pigeonhole(holes: u32) -> CnfFormula {
    assert!(holes >= 1, "need at least one hole");
    let pigeons = holes + 1;
    let var = |pigeon: u32, hole: u32| Var::new(holes * pigeon + hole + 1);
    let mut clauses = Vec::new();
    for pigeon in 0..pigeons {
        let lits: Vec<Literal> = (0..holes)
            .map(|hole| Literal::new(var(pigeon, hole), true))
            .collect();
        clauses.push(Clause::new(lits).unwrap());
    }
    for hole in 0..holes {
        for first in 0..pigeons {
            for second in first + 1..pigeons {
                clauses.push(
                    Clause::new(vec![
                        Literal::new(var(first, hole), false),
                        Literal::new(var(second, hole), false),
                    ])
                    .unwrap(),
                );
            }
        }
    }
    CnfFormula::new(pigeons * holes, clauses)
}

/// A uniformly random 3-CNF formula: each clause picks three distinct
/// variables and independent signs. Reproducible for a fixed seed.
pub fn random_3cnf(num_vars: u32, num_clauses: usize, seed: u64) -> CnfFormula {
    assert!(num_vars >= 3, "three distinct variables per clause");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clauses = (0..num_clauses)
        .map(|_| {
            let mut vars = [0u32; 3];
            for i in 0..3 {
                loop {
                    let v = rng.gen_range(1..=num_vars);
                    if !vars[..i].contains(&v) {
                        vars[i] = v;
                        break;
                    }
                }
            }
            let lits: Vec<Literal> = vars
                .iter()
                .map(|&v| Literal::new(Var::new(v), rng.gen_bool(0.5)))
                .collect();
            Clause::new(lits).unwrap()
        })
        .collect();
    CnfFormula::new(num_vars, clauses)
}
