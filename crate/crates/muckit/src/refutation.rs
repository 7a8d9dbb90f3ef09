//! Resolution refutations as clause DAGs.
//!
//! A refutation holds one vertex per clause: source vertices for the
//! instance clauses and conflict vertices for derived clauses, with edges
//! from antecedents to derivations. Vertices live in an append-only arena
//! and keep their ids across surgery, so every edge points from a lower id
//! to a higher one. The two mutating operations are [`Refutation::trim`],
//! which discards everything that does not reach the sink, and
//! [`Refutation::splice`], which replaces the cone of a source vertex by a
//! sub-derivation built from the remaining vertices.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::formula::{clause_status, Assignment, Clause, ClauseIndex, ClauseStatus, CnfFormula};
use crate::proof::{resolve, ClauseId, ProofLog, ResolveError};

pub type VertexId = usize;

#[derive(Debug, Clone)]
pub struct Vertex {
    clause: Clause,
    parents: Vec<VertexId>,
    children: Vec<VertexId>,
    source: Option<ClauseIndex>,
}

impl Vertex {
    pub fn clause(&self) -> &Clause {
        &self.clause
    }

    /// Antecedent vertices, in derivation order.
    pub fn parents(&self) -> &[VertexId] {
        &self.parents
    }

    pub fn children(&self) -> &[VertexId] {
        &self.children
    }

    /// Index of the instance clause this vertex stands for, if it is a
    /// source vertex.
    pub fn source_index(&self) -> Option<ClauseIndex> {
        self.source
    }

    pub fn is_source(&self) -> bool {
        self.source.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefutationError {
    #[error("sink vertex {0} is not live")]
    MissingSink(VertexId),
    #[error("sink vertex {0} does not hold the empty clause")]
    SinkNotEmpty(VertexId),
    #[error("vertex {vertex} has dead parent {parent}")]
    DeadParent { vertex: VertexId, parent: VertexId },
    #[error("vertex {vertex} has dead child {child}")]
    DeadChild { vertex: VertexId, child: VertexId },
    #[error("edge {parent} -> {child} is recorded on one side only")]
    AsymmetricEdge { parent: VertexId, child: VertexId },
    #[error("edge {parent} -> {child} does not ascend")]
    EdgeOrder { parent: VertexId, child: VertexId },
    #[error("source vertex {0} has parents")]
    SourceWithParents(VertexId),
    #[error("conflict vertex {0} has no antecedents")]
    NoAntecedents(VertexId),
    #[error("vertex {vertex}: {source}")]
    BadResolution {
        vertex: VertexId,
        source: ResolveError,
    },
    #[error("vertex {0} does not match the resolvent of its antecedents")]
    WrongClause(VertexId),
}

/// A refutation DAG over a fixed variable range.
#[derive(Debug, Clone)]
pub struct Refutation {
    vertices: Vec<Option<Vertex>>,
    sink: VertexId,
    num_vars: u32,
}

impl Refutation {
    /// Builds the DAG of a proof whose sources are the instance clauses
    /// `0..n` in order.
    pub fn from_proof(proof: &ProofLog, num_vars: u32) -> Refutation {
        let indices: Vec<ClauseIndex> = (0..proof.num_sources()).collect();
        Refutation::from_proof_with_sources(proof, num_vars, &indices)
    }

    /// Builds the DAG of a proof whose `i`-th source stands for instance
    /// clause `indices[i]`.
    pub fn from_proof_with_sources(
        proof: &ProofLog,
        num_vars: u32,
        indices: &[ClauseIndex],
    ) -> Refutation {
        assert_eq!(indices.len(), proof.num_sources());
        let sink = proof
            .empty_clause_id()
            .expect("proof must conclude with the empty clause")
            - 1;
        let mut vertices: Vec<Option<Vertex>> = proof
            .sources()
            .iter()
            .zip(indices)
            .map(|(clause, &index)| {
                Some(Vertex {
                    clause: clause.clone(),
                    parents: Vec::new(),
                    children: Vec::new(),
                    source: Some(index),
                })
            })
            .collect();
        for (j, entry) in proof.derived().iter().enumerate() {
            let id = proof.num_sources() + j;
            let parents: Vec<VertexId> = entry.antecedents.iter().map(|&a| a - 1).collect();
            for &p in &parents {
                vertices[p].as_mut().expect("antecedent exists").children.push(id);
            }
            vertices.push(Some(Vertex {
                clause: entry.clause.clone(),
                parents,
                children: Vec::new(),
                source: None,
            }));
        }
        Refutation {
            vertices,
            sink,
            num_vars,
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn sink(&self) -> VertexId {
        self.sink
    }

    /// Upper bound on vertex ids; ids of deleted vertices are never reused.
    pub fn id_bound(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v < self.vertices.len() && self.vertices[v].is_some()
    }

    pub fn vertex(&self, v: VertexId) -> Option<&Vertex> {
        self.vertices.get(v)?.as_ref()
    }

    /// Live vertices in ascending id order.
    pub fn live(&self) -> impl Iterator<Item = (VertexId, &Vertex)> + '_ {
        self.vertices
            .iter()
            .enumerate()
            .filter_map(|(id, slot)| slot.as_ref().map(|v| (id, v)))
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.iter().filter(|v| v.is_some()).count()
    }

    /// Live source vertices as `(instance clause index, vertex id)`,
    /// ascending by clause index.
    pub fn sources(&self) -> Vec<(ClauseIndex, VertexId)> {
        let mut out: Vec<(ClauseIndex, VertexId)> = self
            .live()
            .filter_map(|(id, v)| v.source.map(|index| (index, id)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Instance clause indices of the live sources, ascending.
    pub fn source_indices(&self) -> Vec<ClauseIndex> {
        self.sources().into_iter().map(|(index, _)| index).collect()
    }

    /// Vertices reachable from `from` along derivation edges, including
    /// `from` itself.
    pub fn reachable(&self, from: VertexId) -> BTreeSet<VertexId> {
        self.closure(from, false)
    }

    /// Vertices that reach `from` along derivation edges, including `from`
    /// itself.
    pub fn backward_reachable(&self, from: VertexId) -> BTreeSet<VertexId> {
        self.closure(from, true)
    }

    fn closure(&self, from: VertexId, backward: bool) -> BTreeSet<VertexId> {
        assert!(self.contains(from), "vertex {from} is not live");
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            let vertex = self.vertices[v].as_ref().unwrap();
            let next = if backward {
                &vertex.parents
            } else {
                &vertex.children
            };
            for &n in next {
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        seen
    }

    /// Deletes every vertex that does not reach the sink. Returns the
    /// instance indices of the source vertices that were dropped,
    /// ascending.
    pub fn trim(&mut self) -> Vec<ClauseIndex> {
        let keep = self.backward_reachable(self.sink);
        let mut dropped = Vec::new();
        for id in 0..self.vertices.len() {
            if self.vertices[id].is_some() && !keep.contains(&id) {
                if let Some(index) = self.vertices[id].as_ref().unwrap().source {
                    dropped.push(index);
                }
                self.vertices[id] = None;
            }
        }
        for v in self.vertices.iter_mut().flatten() {
            v.children.retain(|c| keep.contains(c));
            debug_assert!(v.parents.iter().all(|p| keep.contains(p)));
        }
        dropped.sort_unstable();
        dropped
    }

    /// The clauses of all live vertices outside the cone of `v`, as a
    /// formula over the same variable range, together with the vertex each
    /// formula position stands for (ascending id order).
    pub fn complement_instance(&self, v: VertexId) -> (CnfFormula, Vec<VertexId>) {
        let excluded = self.reachable(v);
        let mut mapping = Vec::new();
        let mut clauses = Vec::new();
        for (id, vertex) in self.live() {
            if !excluded.contains(&id) {
                mapping.push(id);
                clauses.push(vertex.clause.clone());
            }
        }
        (CnfFormula::new(self.num_vars, clauses), mapping)
    }

    /// Replaces the cone of the source vertex `at` by the derivation of
    /// `sub`, a proof whose `i`-th source is the clause of the live vertex
    /// `sub_sources[i]`. The sub-proof's conclusion becomes the new sink
    /// and the graph is trimmed. Returns the instance indices of any
    /// further source vertices the trim dropped, ascending.
    pub fn splice(
        &mut self,
        at: VertexId,
        sub: &ProofLog,
        sub_sources: &[VertexId],
    ) -> Vec<ClauseIndex> {
        assert!(
            self.vertex(at).is_some_and(Vertex::is_source),
            "splice target must be a live source vertex"
        );
        assert_eq!(sub.num_sources(), sub_sources.len());
        let removed = self.reachable(at);
        for (i, &sv) in sub_sources.iter().enumerate() {
            assert!(
                self.contains(sv) && !removed.contains(&sv),
                "sub-proof source {sv} must survive the splice"
            );
            debug_assert_eq!(self.vertices[sv].as_ref().unwrap().clause, sub.sources()[i]);
        }
        for &r in &removed {
            self.vertices[r] = None;
        }
        for v in self.vertices.iter_mut().flatten() {
            v.children.retain(|c| !removed.contains(c));
            debug_assert!(v.parents.iter().all(|p| !removed.contains(p)));
        }
        let base = self.vertices.len();
        let num_sub_sources = sub.num_sources();
        let map_id = |sid: ClauseId| -> VertexId {
            if sid <= num_sub_sources {
                sub_sources[sid - 1]
            } else {
                base + (sid - num_sub_sources - 1)
            }
        };
        for (j, entry) in sub.derived().iter().enumerate() {
            let id = base + j;
            let parents: Vec<VertexId> = entry.antecedents.iter().map(|&a| map_id(a)).collect();
            for &p in &parents {
                self.vertices[p].as_mut().expect("antecedent is live").children.push(id);
            }
            self.vertices.push(Some(Vertex {
                clause: entry.clause.clone(),
                parents,
                children: Vec::new(),
                source: None,
            }));
        }
        self.sink = map_id(
            sub.empty_clause_id()
                .expect("sub-proof must conclude with the empty clause"),
        );
        self.trim()
    }

    /// Live vertices per live source vertex.
    pub fn relative_hardness(&self) -> f64 {
        let total = self.num_vertices();
        let sources = self.live().filter(|(_, v)| v.is_source()).count();
        debug_assert!(sources > 0);
        total as f64 / sources as f64
    }

    /// Checks structural soundness: edges link live vertices symmetrically
    /// and ascend in id, sources have no parents, the sink holds the empty
    /// clause, and every conflict vertex is the sequential resolvent of its
    /// antecedents.
    pub fn validate(&self) -> Result<(), RefutationError> {
        if !self.contains(self.sink) {
            return Err(RefutationError::MissingSink(self.sink));
        }
        if !self.vertices[self.sink].as_ref().unwrap().clause.is_empty() {
            return Err(RefutationError::SinkNotEmpty(self.sink));
        }
        for (id, vertex) in self.live() {
            for &p in &vertex.parents {
                if !self.contains(p) {
                    return Err(RefutationError::DeadParent {
                        vertex: id,
                        parent: p,
                    });
                }
                if p >= id {
                    return Err(RefutationError::EdgeOrder {
                        parent: p,
                        child: id,
                    });
                }
                if !self.vertices[p].as_ref().unwrap().children.contains(&id) {
                    return Err(RefutationError::AsymmetricEdge {
                        parent: p,
                        child: id,
                    });
                }
            }
            for &c in &vertex.children {
                if !self.contains(c) {
                    return Err(RefutationError::DeadChild {
                        vertex: id,
                        child: c,
                    });
                }
                if !self.vertices[c].as_ref().unwrap().parents.contains(&id) {
                    return Err(RefutationError::AsymmetricEdge {
                        parent: id,
                        child: c,
                    });
                }
            }
            if vertex.is_source() {
                if !vertex.parents.is_empty() {
                    return Err(RefutationError::SourceWithParents(id));
                }
            } else {
                let mut parents = vertex.parents.iter();
                let Some(&first) = parents.next() else {
                    return Err(RefutationError::NoAntecedents(id));
                };
                let mut current = self.vertices[first].as_ref().unwrap().clause.clone();
                for &p in parents {
                    let next = &self.vertices[p].as_ref().unwrap().clause;
                    current = resolve(&current, next)
                        .map_err(|source| RefutationError::BadResolution { vertex: id, source })?;
                }
                if current != vertex.clause {
                    return Err(RefutationError::WrongClause(id));
                }
            }
        }
        Ok(())
    }

    /// Searches for a derivation path `root -> ... -> sink` whose clauses
    /// the assignment all falsifies. Falsified paths witness why a
    /// satisfiable complement instance forces its excluded cone.
    pub fn find_falsified_path(
        &self,
        root: VertexId,
        assignment: &Assignment,
    ) -> Option<Vec<VertexId>> {
        let falsified = |id: VertexId| {
            clause_status(&self.vertices[id].as_ref().unwrap().clause, assignment)
                == ClauseStatus::Falsified
        };
        if !self.contains(root) || !falsified(root) {
            return None;
        }
        let mut visited = BTreeSet::from([root]);
        let mut path = vec![root];
        let mut cursor: Vec<usize> = vec![0];
        while let Some(&v) = path.last() {
            if v == self.sink {
                return Some(path);
            }
            let children = &self.vertices[v].as_ref().unwrap().children;
            let k = *cursor.last().unwrap();
            if k < children.len() {
                *cursor.last_mut().unwrap() += 1;
                let c = children[k];
                if visited.insert(c) && falsified(c) {
                    path.push(c);
                    cursor.push(0);
                }
            } else {
                path.pop();
                cursor.pop();
            }
        }
        None
    }

    /// Graphviz rendering; source vertices are boxes labeled with their
    /// instance index, the sink is doubled.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph refutation {\n  rankdir=TB;\n");
        for (id, vertex) in self.live() {
            let mut text = vertex
                .clause
                .literals()
                .iter()
                .map(|l| l.to_dimacs().to_string())
                .collect::<Vec<_>>()
                .join(" ");
            if text.is_empty() {
                text = "[]".to_string();
            }
            let mut attrs = String::new();
            if let Some(index) = vertex.source {
                write!(attrs, "shape=box, label=\"#{index}: {text}\"").unwrap();
            } else {
                write!(attrs, "label=\"{text}\"").unwrap();
            }
            if id == self.sink {
                attrs.push_str(", peripheries=2");
            }
            writeln!(out, "  v{id} [{attrs}];").unwrap();
        }
        for (id, vertex) in self.live() {
            for &c in &vertex.children {
                writeln!(out, "  v{id} -> v{c};").unwrap();
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_dimacs, Literal};
    use crate::proof::parse_trace;

    const TWINCORE_TRACE: &str = "\
1 1 -2 4 0 0
2 1 2 4 0 0
3 1 2 -4 0 0
4 2 -3 0 0
5 -1 3 0 0
6 -1 -3 0 0
7 -2 0 0
8 1 4 0 1 2 0
9 2 -4 0 4 5 3 0
10 1 2 0 9 8 0
11 -1 0 6 5 0
12 0 10 11 7 0
";

    fn twincore() -> Refutation {
        let proof = parse_trace(TWINCORE_TRACE).unwrap();
        proof.validate().unwrap();
        Refutation::from_proof(&proof, 4)
    }

    fn clause(lits: &[i32]) -> Clause {
        Clause::from_dimacs(lits).unwrap()
    }

    #[test]
    fn builds_the_twincore_dag() {
        let r = twincore();
        assert_eq!(r.num_vertices(), 12);
        assert_eq!(r.sink(), 11);
        assert_eq!(r.source_indices(), vec![0, 1, 2, 3, 4, 5, 6]);
        assert_eq!(r.vertex(8).unwrap().parents(), &[3, 4, 2]);
        assert_eq!(r.vertex(4).unwrap().children(), &[8, 10]);
        assert!((r.relative_hardness() - 12.0 / 7.0).abs() < 1e-12);
        r.validate().unwrap();
    }

    #[test]
    fn reachability_in_the_twincore_dag() {
        let r = twincore();
        assert_eq!(r.reachable(4), BTreeSet::from([4, 8, 9, 10, 11]));
        assert_eq!(r.reachable(0), BTreeSet::from([0, 7, 9, 11]));
        assert_eq!(r.backward_reachable(10), BTreeSet::from([4, 5, 10]));
    }

    #[test]
    fn trim_keeps_a_tight_dag_intact() {
        let mut r = twincore();
        assert!(r.trim().is_empty());
        assert_eq!(r.num_vertices(), 12);
    }

    #[test]
    fn trim_drops_unused_sources_and_derivations() {
        // source {2} and the derived clause (2) never feed the sink
        let trace = "1 1 0 0\n2 -1 0 0\n3 -1 2 0 0\n4 2 0 3 1 0\n5 0 1 2 0\n";
        let proof = parse_trace(trace).unwrap();
        proof.validate().unwrap();
        let mut r = Refutation::from_proof(&proof, 2);
        assert_eq!(r.num_vertices(), 5);
        assert_eq!(r.trim(), vec![2]);
        assert_eq!(r.num_vertices(), 3);
        assert_eq!(r.source_indices(), vec![0, 1]);
        r.validate().unwrap();
        assert!((r.relative_hardness() - 3.0 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn complement_lists_everything_outside_the_cone() {
        let r = twincore();
        let (f, mapping) = r.complement_instance(0);
        assert_eq!(f.num_vars(), 4);
        assert_eq!(mapping, vec![1, 2, 3, 4, 5, 6, 8, 10]);
        assert_eq!(f.clause(6), &clause(&[2, -4]));
        assert_eq!(f.clause(7), &clause(&[-1]));
    }

    #[test]
    fn splicing_replaces_the_cone_and_retrims() {
        let mut r = twincore();

        let (sub_f, mapping) = r.complement_instance(0);
        let mut sub = ProofLog::new(sub_f.clauses().to_vec());
        sub.add_derived(clause(&[1, 2]), vec![1, 7]);
        sub.add_derived(Clause::empty(), vec![9, 6, 8]);
        sub.validate().unwrap();
        assert!(r.splice(0, &sub, &mapping).is_empty());
        assert_eq!(r.source_indices(), vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(r.sink(), 13);
        assert_eq!(r.num_vertices(), 10);
        assert_eq!(r.vertex(12).unwrap().parents(), &[1, 8]);
        r.validate().unwrap();
        assert!((r.relative_hardness() - 10.0 / 6.0).abs() < 1e-12);

        let (sub_f, mapping) = r.complement_instance(3);
        assert_eq!(mapping, vec![1, 2, 4, 5, 6, 10]);
        let mut sub = ProofLog::new(sub_f.clauses().to_vec());
        sub.add_derived(clause(&[1, 2]), vec![1, 2]);
        sub.add_derived(clause(&[2]), vec![7, 6]);
        sub.add_derived(Clause::empty(), vec![8, 5]);
        sub.validate().unwrap();
        assert!(r.splice(3, &sub, &mapping).is_empty());
        assert_eq!(r.source_indices(), vec![1, 2, 4, 5, 6]);
        assert_eq!(r.sink(), 16);
        assert_eq!(r.num_vertices(), 9);
        r.validate().unwrap();
        assert!((r.relative_hardness() - 9.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_empty_source_refutation() {
        let proof = ProofLog::new(vec![Clause::empty(), clause(&[1, 2])]);
        let mut r = Refutation::from_proof(&proof, 2);
        assert_eq!(r.sink(), 0);
        assert_eq!(r.trim(), vec![1]);
        assert_eq!(r.num_vertices(), 1);
        r.validate().unwrap();
        let (f, mapping) = r.complement_instance(0);
        assert!(f.is_empty());
        assert!(mapping.is_empty());
        assert!((r.relative_hardness() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_wrong_resolvents() {
        // vertex 3 claims (-2) but its antecedents resolve to (2)
        let mut bad = ProofLog::new(vec![clause(&[1]), clause(&[-1, 2]), clause(&[-2])]);
        bad.add_derived(clause(&[-2]), vec![2, 1]);
        bad.add_derived(Clause::empty(), vec![4, 3]);
        let r = Refutation::from_proof(&bad, 2);
        assert_eq!(r.validate(), Err(RefutationError::WrongClause(3)));
    }

    #[test]
    fn validate_rejects_pivotless_chains() {
        let mut bad = ProofLog::new(vec![clause(&[1]), clause(&[2])]);
        bad.add_derived(Clause::empty(), vec![1, 2]);
        let r = Refutation::from_proof(&bad, 2);
        assert_eq!(
            r.validate(),
            Err(RefutationError::BadResolution {
                vertex: 2,
                source: ResolveError::NoPivot,
            })
        );
    }

    #[test]
    fn falsified_paths_witness_satisfiable_complements() {
        let mut r = twincore();
        let (sub_f, mapping) = r.complement_instance(0);
        let mut sub = ProofLog::new(sub_f.clauses().to_vec());
        sub.add_derived(clause(&[1, 2]), vec![1, 7]);
        sub.add_derived(Clause::empty(), vec![9, 6, 8]);
        r.splice(0, &sub, &mapping);

        // all-false satisfies the complement of vertex 1's cone and
        // falsifies the chain C2 -> (1 2) -> []
        let mut mu = Assignment::new(4);
        for n in 1..=4 {
            mu.assign(Literal::from_dimacs(-n).unwrap(), 0);
        }
        assert_eq!(r.find_falsified_path(1, &mu), Some(vec![1, 12, 13]));

        let mut nu = Assignment::new(4);
        nu.assign(Literal::from_dimacs(1).unwrap(), 0);
        assert_eq!(r.find_falsified_path(1, &nu), None);
    }

    #[test]
    fn dot_output_names_every_live_vertex() {
        let r = twincore();
        let dot = r.to_dot();
        assert!(dot.starts_with("digraph refutation {"));
        assert!(dot.contains("v0 [shape=box, label=\"#0: 1 -2 4\"];"));
        assert!(dot.contains("v11 [label=\"[]\", peripheries=2];"));
        assert!(dot.contains("  v0 -> v7;"));
        assert_eq!(dot.matches("shape=box").count(), 7);
    }

    #[test]
    fn dimacs_round_trip_keeps_vertex_clauses() {
        let f = parse_dimacs("p cnf 4 7\n1 4 -2 0\n1 4 2 0\n1 2 -4 0\n-3 2 0\n-1 3 0\n-1 -3 0\n-2 0\n")
            .unwrap();
        let r = twincore();
        for (index, id) in r.sources() {
            assert_eq!(r.vertex(id).unwrap().clause(), f.clause(index));
        }
    }
}
