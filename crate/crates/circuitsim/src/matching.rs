//! Demand graphs and the matching algorithms built on them: exact maximum
//! weight matching, a brute-force oracle for testing, top-m sparsification,
//! and the iterated-matching approximation to weighted b-matching.

use std::collections::{BTreeMap, BTreeSet};

use crate::blossom::{max_weight_matching, Weight};
use crate::circuits::{NodeId, Pair};

/// Weighted undirected demand graph over rack ids `0..n`. Weights are byte
/// counts; zero-weight edges are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandGraph {
    n: usize,
    edges: BTreeMap<Pair, u64>,
}

impl DemandGraph {
    pub fn new(n: usize) -> Self {
        DemandGraph { n, edges: BTreeMap::new() }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    /// Add `w` bytes to the undirected edge {i,j}. Zero adds are dropped so
    /// the zero-weight-edges-absent invariant holds.
    pub fn add_weight(&mut self, i: NodeId, j: NodeId, w: u64) {
        assert!(i < self.n && j < self.n, "node out of range");
        if w == 0 {
            return;
        }
        *self.edges.entry(Pair::new(i, j)).or_insert(0) += w;
    }

    pub fn weight(&self, i: NodeId, j: NodeId) -> u64 {
        self.edges.get(&Pair::new(i, j)).copied().unwrap_or(0)
    }

    /// Edges in lexicographic pair order.
    pub fn edges(&self) -> impl Iterator<Item = (Pair, u64)> + '_ {
        self.edges.iter().map(|(&p, &w)| (p, w))
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }
}

/// A matching: pairwise disjoint unordered pairs plus their total weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub pairs: BTreeSet<Pair>,
    pub weight: u64,
}

impl Matching {
    fn from_pairs(g: &DemandGraph, pairs: BTreeSet<Pair>) -> Self {
        let weight = pairs.iter().map(|p| g.weight(p.lo(), p.hi())).sum();
        let m = Matching { pairs, weight };
        m.validate();
        m
    }

    pub fn validate(&self) {
        let mut seen = BTreeSet::new();
        for p in &self.pairs {
            assert!(seen.insert(p.lo()) && seen.insert(p.hi()), "node matched twice");
        }
    }
}

/// A degree-bounded pair set: every node appears in at most `b` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BMatching {
    pub pairs: BTreeSet<Pair>,
    pub b: usize,
}

impl BMatching {
    pub fn degree(&self, v: NodeId) -> usize {
        self.pairs.iter().filter(|p| p.contains(v)).count()
    }

    pub fn total_weight(&self, g: &DemandGraph) -> u64 {
        self.pairs.iter().map(|p| g.weight(p.lo(), p.hi())).sum()
    }

    pub fn validate(&self) {
        let mut deg: BTreeMap<NodeId, usize> = BTreeMap::new();
        for p in &self.pairs {
            *deg.entry(p.lo()).or_insert(0) += 1;
            *deg.entry(p.hi()).or_insert(0) += 1;
        }
        for (v, d) in deg {
            assert!(d <= self.b, "node {} has degree {} > b = {}", v, d, self.b);
        }
    }
}

/// Rank of pair (i,j), i < j, in the lexicographic enumeration of all
/// pairs over n nodes: (0,1), (0,2), ... (0,n-1), (1,2), ...
fn lex_rank(p: Pair, n: usize) -> u32 {
    let (i, j) = (p.lo() as u32, p.hi() as u32);
    let n = n as u32;
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Exact maximum weight matching via the blossom algorithm.
///
/// When the weights are small enough to embed a per-edge lexicographic
/// perturbation in `i128` (always true for test-scale graphs), ties are
/// broken toward the lexicographically smallest pair set; otherwise the
/// result is still deterministic through the sorted edge order, but the
/// tie-break among equal-weight optima is unspecified.
pub fn mwm_exact(g: &DemandGraph) -> Matching {
    let n = g.num_nodes();
    if g.is_empty() {
        return Matching { pairs: BTreeSet::new(), weight: 0 };
    }
    let max_w = g.edges.values().copied().max().unwrap();
    let num_ranks = (n * n.saturating_sub(1) / 2) as u32;
    // The perturbed weights must leave ample i128 headroom for the dual
    // arithmetic inside the solver.
    let bits = 64 - max_w.leading_zeros();
    let perturb = bits + num_ranks <= 100;

    let edges: Vec<(usize, usize, Weight)> = g
        .edges
        .iter()
        .map(|(&p, &w)| {
            let wt = if perturb {
                (w as Weight) * (1i128 << num_ranks) + (1i128 << (num_ranks - 1 - lex_rank(p, n)))
            } else {
                w as Weight
            };
            (p.lo(), p.hi(), wt)
        })
        .collect();

    let mate = max_weight_matching(n, &edges);
    let mut pairs = BTreeSet::new();
    for (i, &m) in mate.iter().enumerate() {
        if let Some(j) = m {
            if i < j {
                pairs.insert(Pair::new(i, j));
            }
        }
    }
    Matching::from_pairs(g, pairs)
}

/// Exhaustive maximum weight matching oracle. Enumerates every matching of
/// the graph; among maximum-weight ones it returns the lexicographically
/// smallest pair set. Exponential: refuses graphs with more than 12 nodes.
pub fn mwm_oracle(g: &DemandGraph) -> Matching {
    let n = g.num_nodes();
    assert!(n <= 12, "oracle enumeration is exponential; n must be <= 12");

    let mut adj: Vec<Vec<(NodeId, u64)>> = vec![vec![]; n];
    for (p, w) in g.edges() {
        adj[p.lo()].push((p.hi(), w));
    }

    struct Search<'a> {
        adj: &'a [Vec<(NodeId, u64)>],
        used: Vec<bool>,
        cur: Vec<Pair>,
        cur_w: u64,
        best: Vec<Pair>,
        best_w: u64,
    }
    impl Search<'_> {
        fn rec(&mut self, u: usize) {
            if u == self.adj.len() {
                if self.cur_w > self.best_w || (self.cur_w == self.best_w && self.cur < self.best)
                {
                    self.best = self.cur.clone();
                    self.best_w = self.cur_w;
                }
                return;
            }
            if !self.used[u] {
                // Try matching u to each free higher-numbered neighbor.
                for idx in 0..self.adj[u].len() {
                    let (v, w) = self.adj[u][idx];
                    if self.used[v] {
                        continue;
                    }
                    self.used[u] = true;
                    self.used[v] = true;
                    self.cur.push(Pair::new(u, v));
                    self.cur_w += w;
                    self.rec(u + 1);
                    self.cur_w -= w;
                    self.cur.pop();
                    self.used[v] = false;
                    self.used[u] = false;
                }
            }
            // Leave u as is (single or already matched from below).
            self.rec(u + 1);
        }
    }

    let mut s = Search {
        adj: &adj,
        used: vec![false; n],
        cur: vec![],
        cur_w: 0,
        best: vec![],
        best_w: 0,
    };
    s.rec(0);
    Matching::from_pairs(g, s.best.into_iter().collect())
}

/// Approximate weighted b-matching by iterating exact matchings: compute a
/// maximum weight matching, take its edges out of the residual graph, and
/// repeat b times. The union of the b matchings has degree at most b.
pub fn iterated_b_matching(g: &DemandGraph, b: usize) -> BMatching {
    assert!(b >= 1);
    let mut residual = g.clone();
    let mut pairs = BTreeSet::new();
    for _ in 0..b {
        let m = mwm_exact(&residual);
        if m.pairs.is_empty() {
            break;
        }
        for p in &m.pairs {
            residual.edges.remove(p);
            pairs.insert(*p);
        }
    }
    let out = BMatching { pairs, b };
    out.validate();
    out
}

/// Keep edge {i,j} iff it is among i's m heaviest edges or among j's m
/// heaviest edges (each endpoint nominates its top m; the union survives).
/// Ranking is weight-descending with lexicographic pair order on ties.
pub fn top_m_truncate(g: &DemandGraph, m: usize) -> DemandGraph {
    assert!(m >= 1);
    let n = g.num_nodes();
    let mut incident: Vec<Vec<(u64, Pair)>> = vec![vec![]; n];
    for (p, w) in g.edges() {
        incident[p.lo()].push((w, p));
        incident[p.hi()].push((w, p));
    }
    let mut keep = BTreeSet::new();
    for list in &mut incident {
        list.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, p) in list.iter().take(m) {
            keep.insert(p);
        }
    }
    let mut out = DemandGraph::new(n);
    for p in keep {
        out.add_weight(p.lo(), p.hi(), g.weight(p.lo(), p.hi()));
    }
    out
}
