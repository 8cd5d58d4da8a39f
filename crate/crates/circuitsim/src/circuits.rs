use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rack / ToR node index, 0..n-1.
pub type NodeId = usize;

/// Unordered rack pair, normalized to (min, max).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair(NodeId, NodeId);

impl Pair {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        assert!(a != b, "self-pair {a}");
        if a < b {
            Pair(a, b)
        } else {
            Pair(b, a)
        }
    }

    pub fn lo(&self) -> NodeId {
        self.0
    }

    pub fn hi(&self) -> NodeId {
        self.1
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.0 == v || self.1 == v
    }

    /// The endpoint opposite to `v`.
    pub fn other(&self, v: NodeId) -> NodeId {
        debug_assert!(self.contains(v));
        if self.0 == v {
            self.1
        } else {
            self.0
        }
    }
}

impl std::fmt::Display for Pair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

/// Which scheduling layer established a circuit. Assigned when the circuit
/// is connected and never rewritten afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CircuitOrigin {
    Centralized,
    Distributed,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("circuit {0} already exists")]
    AlreadyConnected(Pair),
    #[error("circuit {0} does not exist")]
    NotConnected(Pair),
    #[error("node {node} is at its optical degree limit {k}")]
    DegreeExhausted { node: NodeId, k: usize },
}

/// The live symmetric circuit relation with per-node degree tracking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitState {
    k: usize,
    neighbors: Vec<BTreeSet<NodeId>>,
    origin: BTreeMap<Pair, CircuitOrigin>,
}

impl CircuitState {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(k >= 1 && k < n);
        CircuitState {
            k,
            neighbors: vec![BTreeSet::new(); n],
            origin: BTreeMap::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn degree_limit(&self) -> usize {
        self.k
    }

    pub fn contains(&self, p: Pair) -> bool {
        self.origin.contains_key(&p)
    }

    pub fn origin(&self, p: Pair) -> Option<CircuitOrigin> {
        self.origin.get(&p).copied()
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.neighbors[v].len()
    }

    pub fn neighbors(&self, v: NodeId) -> &BTreeSet<NodeId> {
        &self.neighbors[v]
    }

    /// Circuits in deterministic (lexicographic) order.
    pub fn pairs(&self) -> impl Iterator<Item = (Pair, CircuitOrigin)> + '_ {
        self.origin.iter().map(|(p, o)| (*p, *o))
    }

    pub fn len(&self) -> usize {
        self.origin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origin.is_empty()
    }

    pub fn connect(&mut self, p: Pair, origin: CircuitOrigin) -> Result<(), CircuitError> {
        if self.contains(p) {
            return Err(CircuitError::AlreadyConnected(p));
        }
        for v in [p.lo(), p.hi()] {
            if self.degree(v) >= self.k {
                return Err(CircuitError::DegreeExhausted { node: v, k: self.k });
            }
        }
        self.neighbors[p.lo()].insert(p.hi());
        self.neighbors[p.hi()].insert(p.lo());
        self.origin.insert(p, origin);
        Ok(())
    }

    pub fn disconnect(&mut self, p: Pair) -> Result<(), CircuitError> {
        if !self.contains(p) {
            return Err(CircuitError::NotConnected(p));
        }
        self.neighbors[p.lo()].remove(&p.hi());
        self.neighbors[p.hi()].remove(&p.lo());
        self.origin.remove(&p);
        Ok(())
    }

    pub fn clear(&mut self) {
        for s in &mut self.neighbors {
            s.clear();
        }
        self.origin.clear();
    }

    /// Unordered pairs present in exactly one of the two states.
    pub fn symmetric_difference(&self, other: &CircuitState) -> Vec<Pair> {
        let mine: BTreeSet<Pair> = self.origin.keys().copied().collect();
        let theirs: BTreeSet<Pair> = other.origin.keys().copied().collect();
        mine.symmetric_difference(&theirs).copied().collect()
    }

    /// Structural validator run by the engine after every mutation round:
    /// symmetry between the pair map and adjacency sets, degree bound, no
    /// self-pairs. Violations indicate a scheduler bug and abort the run.
    pub fn validate(&self) {
        let mut seen = 0usize;
        for (v, nbrs) in self.neighbors.iter().enumerate() {
            assert!(
                nbrs.len() <= self.k,
                "node {} exceeds optical degree: {} > {}",
                v,
                nbrs.len(),
                self.k
            );
            for &u in nbrs {
                assert!(u != v, "self-circuit at node {v}");
                assert!(
                    self.neighbors[u].contains(&v),
                    "asymmetric circuit: {v} lists {u} but not vice versa"
                );
                assert!(
                    self.origin.contains_key(&Pair::new(u, v)),
                    "adjacency for {u},{v} lacks an origin entry"
                );
                seen += 1;
            }
        }
        assert_eq!(seen, 2 * self.origin.len(), "origin map out of sync");
    }
}
