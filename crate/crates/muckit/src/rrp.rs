//! Refutation-path pruning for complement sub-solves.
//!
//! When deciding whether a candidate clause is required, the sub-solver can
//! be steered to falsify, clause by clause, a derivation path between the
//! candidate and the empty clause. Each model of the complement instance
//! falsifies every clause of at least one such path, so walking the paths
//! first concentrates the search where models must live.
//!
//! [`ProofPathGraph`] restricts a refutation to the vertices lying between
//! the candidate and the sink and orients them for traversal. [`RrpCursor`]
//! walks that graph depth-first while a solve is running: it proposes
//! decisions that falsify the clause it currently points at, descends once
//! the clause is falsified, retreats when the clause becomes satisfied, and
//! goes inert when the traversal is exhausted (`EndOfTraversal`) or some
//! path has been falsified to its end (`EndOfPath`). [`RrpHook`] adapts the
//! cursor to the solver's decision callback.

use crate::formula::{clause_status, Assignment, Clause, ClauseStatus, Literal};
use crate::refutation::{Refutation, VertexId};
use crate::solver::{DecisionHook, SearchContext};

/// Which end of the refutation the traversal starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RrpRoot {
    /// Start at the empty clause and walk toward the candidate along
    /// antecedent edges.
    EmptyClause,
    /// Start at the candidate and walk toward the empty clause along
    /// derivation edges.
    Clause,
}

struct PathVertex {
    clause: Clause,
    next: Vec<VertexId>,
}

/// A refutation restricted to the cone of a candidate vertex intersected
/// with everything that reaches the sink, oriented for traversal.
pub struct ProofPathGraph {
    root: VertexId,
    id_bound: usize,
    members: std::collections::BTreeMap<VertexId, PathVertex>,
}

impl ProofPathGraph {
    pub fn new(refutation: &Refutation, candidate: VertexId, root: RrpRoot) -> ProofPathGraph {
        let cone = refutation.reachable(candidate);
        let back = refutation.backward_reachable(refutation.sink());
        let ids: Vec<VertexId> = cone.intersection(&back).copied().collect();
        assert!(
            ids.contains(&candidate) && ids.contains(&refutation.sink()),
            "candidate must lie on a path to the sink"
        );
        let mut members = std::collections::BTreeMap::new();
        for &id in &ids {
            let vertex = refutation.vertex(id).unwrap();
            let raw: &[VertexId] = match root {
                RrpRoot::EmptyClause => vertex.parents(),
                RrpRoot::Clause => vertex.children(),
            };
            let next: Vec<VertexId> = raw
                .iter()
                .copied()
                .filter(|n| ids.binary_search(n).is_ok())
                .collect();
            members.insert(
                id,
                PathVertex {
                    clause: vertex.clause().clone(),
                    next,
                },
            );
        }
        ProofPathGraph {
            root: match root {
                RrpRoot::EmptyClause => refutation.sink(),
                RrpRoot::Clause => candidate,
            },
            id_bound: refutation.id_bound(),
            members,
        }
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.members.contains_key(&v)
    }

    fn clause(&self, v: VertexId) -> &Clause {
        &self.members[&v].clause
    }

    fn next(&self, v: VertexId) -> &[VertexId] {
        &self.members[&v].next
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RrpState {
    /// Working on the clause at the top of the stack.
    Norm,
    /// The current clause became satisfied; retreat.
    Sat,
    /// The current clause is falsified; advance.
    False,
    /// Every path has been explored; the cursor is inert.
    EndOfTraversal,
    /// A complete path has been falsified; the cursor is inert.
    EndOfPath,
}

struct StackEntry {
    vertex: VertexId,
    mark: u32,
}

/// Depth-first walk over a [`ProofPathGraph`] that survives solver
/// backjumps. The stack holds the path from the root to the current
/// vertex; visited marks carry timestamps so a backjump can forget exactly
/// the exploration that depended on undone assignments.
pub struct RrpCursor<'g> {
    graph: &'g ProofPathGraph,
    stack: Vec<StackEntry>,
    visited: Vec<u32>,
    clock: u32,
    state: RrpState,
    depth_limit: usize,
}

impl<'g> RrpCursor<'g> {
    /// A cursor rooted at the graph root. Vertices at depth `depth_limit`
    /// (the root has depth 1) behave as if they had no outgoing edges; a
    /// limit of 0 yields an inert cursor.
    pub fn new(graph: &'g ProofPathGraph, depth_limit: usize) -> RrpCursor<'g> {
        let mut cursor = RrpCursor {
            graph,
            stack: Vec::new(),
            visited: vec![0; graph.id_bound],
            clock: 0,
            state: RrpState::Norm,
            depth_limit,
        };
        if depth_limit == 0 {
            cursor.state = RrpState::EndOfTraversal;
        } else {
            cursor.push(graph.root());
        }
        cursor
    }

    pub fn state(&self) -> RrpState {
        self.state
    }

    /// The vertex the cursor points at, if the traversal is still going.
    pub fn current(&self) -> Option<VertexId> {
        match self.state {
            RrpState::EndOfTraversal | RrpState::EndOfPath => None,
            _ => self.stack.last().map(|e| e.vertex),
        }
    }

    fn push(&mut self, v: VertexId) {
        self.clock += 1;
        self.visited[v] = self.clock;
        self.stack.push(StackEntry {
            vertex: v,
            mark: self.clock,
        });
    }

    /// Proposes the next decision, advancing the walk as far as the current
    /// assignment allows. Returns `None` once the cursor is inert.
    pub fn decide(&mut self, search: &SearchContext<'_>) -> Option<Literal> {
        loop {
            match self.state {
                RrpState::EndOfTraversal | RrpState::EndOfPath => return None,
                RrpState::Norm => {
                    let v = self.stack.last().unwrap().vertex;
                    match clause_status(self.graph.clause(v), search.assignment) {
                        ClauseStatus::Undetermined => return Some(self.pick(v, search)),
                        ClauseStatus::Satisfied => self.state = RrpState::Sat,
                        ClauseStatus::Falsified => self.state = RrpState::False,
                    }
                }
                RrpState::Sat => {
                    if self.stack.len() == 1 {
                        self.state = RrpState::EndOfTraversal;
                    } else {
                        self.stack.pop();
                        self.state = RrpState::Norm;
                    }
                }
                RrpState::False => {
                    let v = self.stack.last().unwrap().vertex;
                    let next = self.graph.next(v);
                    if self.stack.len() >= self.depth_limit || next.is_empty() {
                        self.state = RrpState::EndOfPath;
                    } else if let Some(&child) =
                        next.iter().find(|&&c| self.visited[c] == 0)
                    {
                        self.push(child);
                        self.state = RrpState::Norm;
                    } else if self.stack.len() == 1 {
                        self.state = RrpState::EndOfTraversal;
                    } else {
                        self.stack.pop();
                        self.state = RrpState::Norm;
                    }
                }
            }
        }
    }

    /// The decision that works toward falsifying `v`: the negation of the
    /// unassigned literal that occurred most often in recently learned
    /// clauses, earliest literal on ties.
    fn pick(&self, v: VertexId, search: &SearchContext<'_>) -> Literal {
        let mut best: Option<(u32, Literal)> = None;
        for &lit in self.graph.clause(v).literals() {
            if search.assignment.literal_value(lit).is_none() {
                let count = search.recent_conflicts.count(lit);
                if best.is_none_or(|(c, _)| count > c) {
                    best = Some((count, lit));
                }
            }
        }
        let (_, lit) = best.expect("an undetermined clause has an unassigned literal");
        !lit
    }

    /// Reacts to the solver retracting to `backjump_level` (called before
    /// the trail unwinds). If the retraction disturbs the clause under the
    /// cursor, the stack is cut back to the shallowest disturbed vertex and
    /// everything explored after that vertex is forgotten.
    pub fn notify_backjump(&mut self, search: &SearchContext<'_>, backjump_level: u32) {
        if matches!(self.state, RrpState::EndOfTraversal | RrpState::EndOfPath) {
            return;
        }
        let top = self.stack.last().unwrap().vertex;
        if backjump_level >= self.max_decision_level(top, search.assignment) {
            return;
        }
        let pos = self
            .stack
            .iter()
            .position(|e| self.max_decision_level(e.vertex, search.assignment) > backjump_level)
            .unwrap();
        let mark = self.stack[pos].mark;
        self.stack.truncate(pos + 1);
        for ts in &mut self.visited {
            if *ts > mark {
                *ts = 0;
            }
        }
        self.state = RrpState::Norm;
    }

    fn max_decision_level(&self, v: VertexId, assignment: &Assignment) -> u32 {
        self.graph
            .clause(v)
            .literals()
            .iter()
            .filter_map(|l| assignment.level(l.var()))
            .max()
            .unwrap_or(0)
    }
}

/// Adapts an [`RrpCursor`] to the solver's decision callback.
pub struct RrpHook<'g> {
    cursor: RrpCursor<'g>,
}

impl<'g> RrpHook<'g> {
    pub fn new(graph: &'g ProofPathGraph, depth_limit: usize) -> RrpHook<'g> {
        RrpHook {
            cursor: RrpCursor::new(graph, depth_limit),
        }
    }

    pub fn cursor(&self) -> &RrpCursor<'g> {
        &self.cursor
    }
}

impl DecisionHook for RrpHook<'_> {
    fn next_decision(&mut self, search: &SearchContext<'_>) -> Option<Literal> {
        self.cursor.decide(search)
    }

    fn on_backjump(&mut self, search: &SearchContext<'_>, backjump_level: u32) {
        self.cursor.notify_backjump(search, backjump_level);
    }
}
