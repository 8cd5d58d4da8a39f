//! Maximum weight matching in general undirected graphs.
//!
//! Port of Joris van Rantwijk's blossom solver
//! (<http://jorisvr.nl/article/maximum-matching>), which combines Edmonds'
//! blossom shrinking with the primal-dual schedule described by Galil
//! (ACM Computing Surveys, 1986). Runs in O(n^3).
//!
//! Weights are `i128` so callers can fold tie-breaking perturbations into
//! byte-count weights without overflow. Maximum cardinality is not forced:
//! only edges that pay for themselves end up matched.

pub type Weight = i128;

const SENTINEL: usize = usize::MAX;

/// Compute a maximum weight matching on `num_nodes` vertices.
///
/// `edges` lists undirected edges `(i, j, w)` with `i != j` and at most one
/// edge per vertex pair. Returns `mate` with `mate[i] == Some(j)` iff edge
/// {i,j} is matched. Output is deterministic for a fixed edge order;
/// callers wanting a canonical result should sort `edges` first.
pub fn max_weight_matching(
    num_nodes: usize,
    edges: &[(usize, usize, Weight)],
) -> Vec<Option<usize>> {
    if edges.is_empty() {
        return vec![None; num_nodes];
    }
    let mut solver = Solver::new(num_nodes, edges);
    solver.solve();
    solver
        .mate
        .iter()
        .map(|&m| if m == SENTINEL { None } else { Some(m) })
        .collect()
}

/// Vertices are numbered 0..nvertex-1; non-trivial blossoms use
/// nvertex..2*nvertex-1. Edge endpoints are numbered 0..2*nedge-1 such that
/// endpoints 2k and 2k+1 belong to edge k.
struct Solver {
    nvertex: usize,
    nedge: usize,
    edges: Vec<(usize, usize, Weight)>,
    // endpoint[p] is the vertex to which endpoint p is attached.
    endpoint: Vec<usize>,
    // neighbend[v] lists the remote endpoints of v's incident edges.
    neighbend: Vec<Vec<usize>>,
    // mate[v] is the remote endpoint of v's matched edge, or SENTINEL if
    // single. solve() rewrites it to the partner vertex at the end.
    mate: Vec<usize>,
    // label[b] for a top-level blossom: 0 free, 1 S, 2 T. For a vertex v
    // inside a T-blossom, label[v] is 2 iff v was reached from outside.
    label: Vec<usize>,
    // labelend[b] is the remote endpoint of the edge through which b got
    // its label, or SENTINEL if b's base vertex is single.
    labelend: Vec<usize>,
    // inblossom[v] is the top-level blossom containing vertex v.
    inblossom: Vec<usize>,
    // blossomparent[b] is b's immediate parent blossom, SENTINEL if top.
    blossomparent: Vec<usize>,
    // blossomchilds[b]: ordered sub-blossoms, starting at the base.
    blossomchilds: Vec<Vec<usize>>,
    // blossombase[b] is b's base vertex.
    blossombase: Vec<usize>,
    // blossomendps[b][i] is the local endpoint of blossomchilds[b][i] on
    // the edge to blossomchilds[b][i+1 mod len].
    blossomendps: Vec<Vec<usize>>,
    // bestedge[v]: least-slack edge from a free vertex to an S-vertex;
    // bestedge[b]: least-slack edge from top-level S-blossom b to another
    // S-blossom. Drives the delta2/delta3 computation.
    bestedge: Vec<usize>,
    // blossombestedges[b]: least-slack edges to neighbouring S-blossoms.
    blossombestedges: Vec<Vec<usize>>,
    unusedblossoms: Vec<usize>,
    // dualvar[v] = 2u(v) for vertices (pre-doubled to stay integral),
    // dualvar[b] = z(b) for blossoms.
    dualvar: Vec<Weight>,
    // allowedge[k]: edge k is known to have zero slack.
    allowedge: Vec<bool>,
    // Queue of newly discovered S-vertices.
    queue: Vec<usize>,
}

impl Solver {
    fn new(num_nodes: usize, edges: &[(usize, usize, Weight)]) -> Solver {
        let nedge = edges.len();
        let nvertex = num_nodes;
        for &(i, j, _wt) in edges {
            assert!(i != j && i < nvertex && j < nvertex);
        }
        let maxweight = edges.iter().map(|e| e.2).max().unwrap().max(0);

        let endpoint = (0..2 * nedge)
            .map(|p| if p % 2 == 0 { edges[p / 2].0 } else { edges[p / 2].1 })
            .collect();
        let mut neighbend = vec![vec![]; nvertex];
        for (k, &(i, j, _wt)) in edges.iter().enumerate() {
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        let mut blossombase: Vec<usize> = (0..nvertex).collect();
        blossombase.extend(vec![SENTINEL; nvertex]);
        let mut dualvar = vec![maxweight; nvertex];
        dualvar.extend(vec![0; nvertex]);

        Solver {
            nvertex,
            nedge,
            edges: edges.to_vec(),
            endpoint,
            neighbend,
            mate: vec![SENTINEL; nvertex],
            label: vec![0; 2 * nvertex],
            labelend: vec![SENTINEL; 2 * nvertex],
            inblossom: (0..nvertex).collect(),
            blossomparent: vec![SENTINEL; 2 * nvertex],
            blossomchilds: vec![vec![]; 2 * nvertex],
            blossombase,
            blossomendps: vec![vec![]; 2 * nvertex],
            bestedge: vec![SENTINEL; 2 * nvertex],
            blossombestedges: vec![vec![]; 2 * nvertex],
            unusedblossoms: (nvertex..2 * nvertex).collect(),
            dualvar,
            allowedge: vec![false; nedge],
            queue: vec![],
        }
    }

    // 2 * slack of edge k (not meaningful inside blossoms).
    #[inline]
    fn slack(&self, k: usize) -> Weight {
        let (i, j, wt) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2 * wt
    }

    fn blossom_leaves(&self, b: usize) -> Vec<usize> {
        let mut leaves = vec![];
        if b < self.nvertex {
            leaves.push(b);
        } else {
            for &t in &self.blossomchilds[b] {
                if t < self.nvertex {
                    leaves.push(t);
                } else {
                    leaves.extend(self.blossom_leaves(t));
                }
            }
        }
        leaves
    }

    /// Assign label t to the top-level blossom containing vertex w, reached
    /// through the edge with remote endpoint p.
    fn assign_label(&mut self, w: usize, t: usize, p: usize) {
        let b = self.inblossom[w];
        assert!(self.label[w] == 0 && self.label[b] == 0);
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = SENTINEL;
        self.bestedge[b] = SENTINEL;
        if t == 1 {
            // b became an S-blossom; add its vertices to the queue.
            let leaves = self.blossom_leaves(b);
            self.queue.extend(leaves);
        } else if t == 2 {
            // b became a T-blossom; its base is the only vertex with an
            // external mate, which now becomes an S-vertex.
            let base = self.blossombase[b];
            assert!(self.mate[base] != SENTINEL);
            let mbase = self.mate[base];
            let ep = self.endpoint[mbase];
            self.assign_label(ep, 1, mbase ^ 1);
        }
    }

    /// Trace back from vertices v and w to find either a new blossom or an
    /// augmenting path. Returns the base of the new blossom, or SENTINEL.
    fn scan_blossom(&mut self, v: usize, w: usize) -> usize {
        let mut path = vec![];
        let mut base = SENTINEL;
        let mut v = v;
        let mut w = w;
        while v != SENTINEL || w != SENTINEL {
            // Look for a breadcrumb in v's blossom or drop a new one.
            let mut b = self.inblossom[v];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            assert!(self.label[b] == 1);
            path.push(b);
            self.label[b] = 5;
            // Trace one step back.
            assert!(self.labelend[b] == self.mate[self.blossombase[b]]);
            if self.labelend[b] == SENTINEL {
                // The base of blossom b is single; stop tracing this path.
                v = SENTINEL;
            } else {
                v = self.endpoint[self.labelend[b]];
                b = self.inblossom[v];
                assert!(self.label[b] == 2);
                // b is a T-blossom; trace one more step back.
                assert!(self.labelend[b] != SENTINEL);
                v = self.endpoint[self.labelend[b]];
            }
            // Alternate between both paths.
            if w != SENTINEL {
                std::mem::swap(&mut v, &mut w);
            }
        }
        // Remove breadcrumbs.
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    /// Construct a new blossom with the given base, containing edge k which
    /// connects a pair of S-vertices. Label it S, set its dual to zero, and
    /// relabel its T-vertices to S.
    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _wt) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];

        let b = self.unusedblossoms.pop().unwrap();
        self.blossombase[b] = base;
        self.blossomparent[b] = SENTINEL;
        self.blossomparent[bb] = b;

        self.blossomchilds[b] = vec![];
        self.blossomendps[b] = vec![];

        // Trace back from v to base.
        while bv != bb {
            self.blossomparent[bv] = b;
            self.blossomchilds[b].push(bv);
            self.blossomendps[b].push(self.labelend[bv]);
            assert!(
                self.label[bv] == 2
                    || (self.label[bv] == 1
                        && self.labelend[bv] == self.mate[self.blossombase[bv]])
            );
            assert!(self.labelend[bv] != SENTINEL);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        // Reverse the lists and add the endpoint connecting the S-pair.
        self.blossomchilds[b].push(bb);
        self.blossomchilds[b].reverse();
        self.blossomendps[b].reverse();
        self.blossomendps[b].push(2 * k);

        // Trace back from w to base.
        while bw != bb {
            self.blossomparent[bw] = b;
            self.blossomchilds[b].push(bw);
            self.blossomendps[b].push(self.labelend[bw] ^ 1);
            assert!(
                self.label[bw] == 2
                    || (self.label[bw] == 1
                        && self.labelend[bw] == self.mate[self.blossombase[bw]])
            );
            assert!(self.labelend[bw] != SENTINEL);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }

        assert!(self.label[bb] == 1);
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0;

        // Relabel vertices.
        for v in self.blossom_leaves(b) {
            if self.label[self.inblossom[v]] == 2 {
                // Former T-vertex turned S-vertex; scan it.
                self.queue.push(v);
            }
            self.inblossom[v] = b;
        }

        // Compute blossombestedges[b].
        let mut bestedgeto = vec![SENTINEL; 2 * self.nvertex];
        for &bv in &self.blossomchilds[b].clone() {
            let nblists: Vec<Vec<usize>> = if self.blossombestedges[bv].is_empty() {
                // No least-slack list for this sub-blossom; use its
                // vertices' full edge lists.
                self.blossom_leaves(bv)
                    .iter()
                    .map(|&v| self.neighbend[v].iter().map(|p| p / 2).collect())
                    .collect()
            } else {
                vec![self.blossombestedges[bv].clone()]
            };
            for nblist in nblists {
                for k in nblist {
                    let (mut i, mut j, _wt) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let bj = self.inblossom[j];
                    let bestto = bestedgeto[bj];
                    if bj != b
                        && self.label[bj] == 1
                        && (bestto == SENTINEL || self.slack(k) < self.slack(bestto))
                    {
                        bestedgeto[bj] = k;
                    }
                }
            }
            // Forget the sub-blossom's least-slack edges.
            self.blossombestedges[bv] = vec![];
            self.bestedge[bv] = SENTINEL;
        }
        self.blossombestedges[b] = bestedgeto.into_iter().filter(|&k| k != SENTINEL).collect();

        self.bestedge[b] = SENTINEL;
        for &k in &self.blossombestedges[b] {
            let be = self.bestedge[b];
            if be == SENTINEL || self.slack(k) < self.slack(be) {
                self.bestedge[b] = k;
            }
        }
    }

    /// Expand the given top-level blossom.
    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        // Convert sub-blossoms into top-level blossoms.
        for s in self.blossomchilds[b].clone() {
            self.blossomparent[s] = SENTINEL;
            if s < self.nvertex {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0 {
                // Recursively expand this sub-blossom.
                self.expand_blossom(s, endstage);
            } else {
                for &v in &self.blossom_leaves(s) {
                    self.inblossom[v] = s;
                }
            }
        }

        // Expanding a T-blossom during a stage requires relabeling its
        // sub-blossoms.
        if !endstage && self.label[b] == 2 {
            // Start at the sub-blossom through which the expanding blossom
            // obtained its label, and walk until the base.
            assert!(self.labelend[b] != SENTINEL);
            let entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];

            let mut j = self.blossomchilds[b]
                .iter()
                .position(|&r| r == entrychild)
                .unwrap() as i32;
            let jstep: i32;
            let endptrick: usize;
            if j & 1 != 0 {
                // Odd start index: go forward and wrap.
                j -= self.blossomchilds[b].len() as i32;
                jstep = 1;
                endptrick = 0;
            } else {
                // Even start index: go backward.
                jstep = -1;
                endptrick = 1;
            }

            // Move along the blossom until the base.
            let mut p = self.labelend[b];
            while j != 0 {
                // Relabel the T-sub-blossom.
                self.label[self.endpoint[p ^ 1]] = 0;
                let q = pos_neg_index(&self.blossomendps[b], j - endptrick as i32);
                self.label[self.endpoint[q ^ endptrick ^ 1]] = 0;
                let ep = self.endpoint[p ^ 1];
                self.assign_label(ep, 2, p);

                // Step to the next S-sub-blossom; note its forward endpoint.
                self.allowedge[q / 2] = true;
                j += jstep;
                p = pos_neg_index(&self.blossomendps[b], j - endptrick as i32) ^ endptrick;

                // Step to the next T-sub-blossom.
                self.allowedge[p / 2] = true;
                j += jstep;
            }

            // Relabel the base T-sub-blossom without stepping through to
            // its mate.
            let bv = pos_neg_index(&self.blossomchilds[b], j);
            self.label[self.endpoint[p ^ 1]] = 2;
            self.label[bv] = 2;
            self.labelend[self.endpoint[p ^ 1]] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = SENTINEL;

            // Continue along the blossom until back at entrychild.
            j += jstep;
            while pos_neg_index(&self.blossomchilds[b], j) != entrychild {
                // Relabel the sub-blossom as T if any of its vertices was
                // reached from a neighbouring S-vertex outside the
                // expanding blossom.
                let bv = pos_neg_index(&self.blossomchilds[b], j);
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                let mut v = SENTINEL;
                for &leaf in &self.blossom_leaves(bv) {
                    v = leaf;
                    if self.label[v] != 0 {
                        break;
                    }
                }
                if self.label[v] != 0 {
                    assert!(self.label[v] == 2);
                    assert!(self.inblossom[v] == bv);
                    self.label[v] = 0;
                    self.label[self.endpoint[self.mate[self.blossombase[bv]]]] = 0;
                    let lblend = self.labelend[v];
                    self.assign_label(v, 2, lblend);
                }
                j += jstep;
            }
        }

        // Recycle the blossom number.
        self.label[b] = SENTINEL;
        self.labelend[b] = SENTINEL;
        self.blossombase[b] = SENTINEL;
        self.bestedge[b] = SENTINEL;
        self.blossomchilds[b] = vec![];
        self.blossomendps[b] = vec![];
        self.blossombestedges[b] = vec![];
        self.unusedblossoms.push(b);
    }

    /// Swap matched and unmatched edges over an alternating path through
    /// blossom b between vertex v and the base vertex.
    fn augment_blossom(&mut self, b: usize, v: usize) {
        // Bubble up through the blossom tree from v to an immediate
        // sub-blossom of b.
        let mut t = v;
        while self.blossomparent[t] != b {
            t = self.blossomparent[t];
        }
        // Recursively deal with the first sub-blossom.
        if t != SENTINEL && t >= self.nvertex {
            self.augment_blossom(t, v);
        }

        // Decide in which direction to go round the blossom.
        let i = self.blossomchilds[b].iter().position(|&r| r == t).unwrap();
        let mut j = i as i32;
        let jstep: i32;
        let endptrick: usize;
        if i & 1 != 0 {
            // Odd start index: go forward and wrap.
            j -= self.blossomchilds[b].len() as i32;
            jstep = 1;
            endptrick = 0;
        } else {
            // Even start index: go backward.
            jstep = -1;
            endptrick = 1;
        }

        // Move along the blossom until the base.
        while j != 0 {
            // Step to the next sub-blossom and augment it recursively.
            j += jstep;
            let mut t = pos_neg_index(&self.blossomchilds[b], j);
            let p = pos_neg_index(&self.blossomendps[b], j - endptrick as i32) ^ endptrick;
            if t != SENTINEL && t >= self.nvertex {
                let ep = self.endpoint[p];
                self.augment_blossom(t, ep);
            }
            // Step to the next sub-blossom and augment it recursively.
            j += jstep;
            t = pos_neg_index(&self.blossomchilds[b], j);
            if t != SENTINEL && t >= self.nvertex {
                let ep = self.endpoint[p ^ 1];
                self.augment_blossom(t, ep);
            }
            // Match the edge connecting those sub-blossoms.
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }

        // Rotate the sub-blossom list to put the new base at the front.
        rotate(&mut self.blossomchilds[b], i);
        rotate(&mut self.blossomendps[b], i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        assert!(self.blossombase[b] == v);
    }

    /// Swap matched and unmatched edges over an alternating path between
    /// two single vertices. The path runs through edge k, which connects a
    /// pair of S-vertices.
    fn augment_matching(&mut self, k: usize) {
        let (v, w, _wt) = self.edges[k];
        for &(sv, sp) in &[(v, 2 * k + 1), (w, 2 * k)] {
            // Match vertex s to remote endpoint p, then trace back until
            // reaching a single vertex, swapping matched and unmatched
            // edges along the way.
            let mut s = sv;
            let mut p = sp;
            loop {
                let bs = self.inblossom[s];
                assert!(self.label[bs] == 1);
                assert!(self.labelend[bs] == self.mate[self.blossombase[bs]]);
                // Augment through the S-blossom from s to base.
                if bs != SENTINEL && bs >= self.nvertex {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;
                // Trace one step back.
                if self.labelend[bs] == SENTINEL {
                    // Reached a single vertex; stop.
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                assert!(self.label[bt] == 2);
                assert!(self.labelend[bt] != SENTINEL);
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                // Augment through the T-blossom from j to base.
                assert!(self.blossombase[bt] == t);
                if bt != SENTINEL && bt >= self.nvertex {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                // Keep the opposite endpoint; it becomes mate[s] in the
                // next step.
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    /// Check the complementary-slackness conditions of the optimum.
    #[cfg(debug_assertions)]
    fn verify_optimum(&self) {
        // All edges have non-negative slack and matched edges have zero
        // slack (slack includes the duals of shared containing blossoms).
        for k in 0..self.nedge {
            let (i, j, wt) = self.edges[k];
            let mut s = self.dualvar[i] + self.dualvar[j] - 2 * wt;
            let mut iblossoms = vec![i];
            let mut jblossoms = vec![j];
            while self.blossomparent[*iblossoms.last().unwrap()] != SENTINEL {
                let ix = *iblossoms.last().unwrap();
                iblossoms.push(self.blossomparent[ix]);
            }
            while self.blossomparent[*jblossoms.last().unwrap()] != SENTINEL {
                let jx = *jblossoms.last().unwrap();
                jblossoms.push(self.blossomparent[jx]);
            }
            iblossoms.reverse();
            jblossoms.reverse();
            for (&bi, &bj) in iblossoms.iter().zip(jblossoms.iter()) {
                if bi != bj {
                    break;
                }
                s += 2 * self.dualvar[bi];
            }
            assert!(s >= 0);
            if self.mate[i] / 2 == k || self.mate[j] / 2 == k {
                assert!(self.mate[i] / 2 == k && self.mate[j] / 2 == k);
                assert!(s == 0);
            }
        }
        // Single vertices have zero dual value.
        for v in 0..self.nvertex {
            assert!(self.mate[v] != SENTINEL || self.dualvar[v] == 0);
        }
        // Blossoms with positive dual value are full.
        for b in self.nvertex..2 * self.nvertex {
            if self.blossombase[b] != SENTINEL && self.dualvar[b] > 0 {
                assert!(self.blossomendps[b].len() % 2 == 1);
                for (ix, &p) in self.blossomendps[b].iter().enumerate() {
                    if ix % 2 == 1 {
                        assert!(self.mate[self.endpoint[p]] == (p ^ 1));
                        assert!(self.mate[self.endpoint[p ^ 1]] == p);
                    }
                }
            }
        }
    }

    fn solve(&mut self) {
        // Each stage finds an augmenting path and uses it to improve the
        // matching; the loop ends when no augmenting path exists.
        for _ in 0..self.nvertex {
            self.label = vec![0; 2 * self.nvertex];
            self.bestedge = vec![SENTINEL; 2 * self.nvertex];
            for b in self.nvertex..2 * self.nvertex {
                self.blossombestedges[b] = vec![];
            }
            // Losing the labels means currently allowable edges may not
            // stay allowable throughout the stage.
            self.allowedge = vec![false; self.nedge];
            self.queue = vec![];

            // Label single blossoms/vertices with S and queue them.
            for v in 0..self.nvertex {
                if self.mate[v] == SENTINEL && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, SENTINEL);
                }
            }

            let mut augmented = false;
            loop {
                // Each substage either finds an augmenting path or pumps
                // slack out of the dual variables.

                // Continue labeling until all vertices reachable through
                // an alternating path have a label.
                'scan: while !self.queue.is_empty() && !augmented {
                    // Take an S-vertex from the queue and scan its
                    // neighbours.
                    let v = self.queue.pop().unwrap();
                    assert!(self.label[self.inblossom[v]] == 1);
                    for p in self.neighbend[v].clone() {
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            // Edge internal to a blossom.
                            continue;
                        }
                        let mut kslack = 0;
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= 0 {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == 0 {
                                // w is free; label it T and its mate S.
                                self.assign_label(w, 2, p ^ 1);
                            } else if self.label[self.inblossom[w]] == 1 {
                                // w is an S-vertex in another blossom; the
                                // back-links yield either an augmenting
                                // path or a new blossom.
                                let base = self.scan_blossom(v, w);
                                if base != SENTINEL {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break 'scan;
                                }
                            } else if self.label[w] == 0 {
                                // w is inside a T-blossom but not yet
                                // reached from outside; mark it for the
                                // relabeling done during expansion.
                                assert!(self.label[self.inblossom[w]] == 2);
                                self.label[w] = 2;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            // Track the least-slack edge to a different
                            // S-blossom.
                            let b = self.inblossom[v];
                            if self.bestedge[b] == SENTINEL
                                || kslack < self.slack(self.bestedge[b])
                            {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == 0 {
                            // w is free (or unreached inside a T-blossom);
                            // track the least-slack edge reaching it.
                            if self.bestedge[w] == SENTINEL
                                || kslack < self.slack(self.bestedge[w])
                            {
                                self.bestedge[w] = k;
                            }
                        }
                    }
                }
                if augmented {
                    break;
                }

                // No augmenting path under these constraints; compute the
                // delta and update the duals. Vertex duals, slacks and
                // deltas are all pre-multiplied by two.
                let mut deltatype = 1;
                let mut delta = *self.dualvar[..self.nvertex].iter().min().unwrap();
                let mut deltaedge = 0;
                let mut deltablossom = 0;

                // delta2: minimum slack on any edge between an S-vertex
                // and a free vertex.
                for v in 0..self.nvertex {
                    if self.label[self.inblossom[v]] == 0 && self.bestedge[v] != SENTINEL {
                        let d = self.slack(self.bestedge[v]);
                        if d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                // delta3: half the minimum slack on any edge between a
                // pair of S-blossoms.
                for b in 0..2 * self.nvertex {
                    if self.blossomparent[b] == SENTINEL
                        && self.label[b] == 1
                        && self.bestedge[b] != SENTINEL
                    {
                        let d = self.slack(self.bestedge[b]) / 2;
                        if d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                // delta4: minimum dual of any T-blossom.
                for b in self.nvertex..2 * self.nvertex {
                    if self.blossombase[b] != SENTINEL
                        && self.blossomparent[b] == SENTINEL
                        && self.label[b] == 2
                        && self.dualvar[b] < delta
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }

                // Update the dual variables.
                for v in 0..self.nvertex {
                    match self.label[self.inblossom[v]] {
                        0 => {}
                        1 => self.dualvar[v] -= delta,
                        2 => self.dualvar[v] += delta,
                        _ => unreachable!(),
                    }
                }
                for b in self.nvertex..2 * self.nvertex {
                    if self.blossombase[b] != SENTINEL && self.blossomparent[b] == SENTINEL {
                        match self.label[b] {
                            0 => {}
                            1 => self.dualvar[b] += delta,
                            2 => self.dualvar[b] -= delta,
                            _ => unreachable!(),
                        }
                    }
                }

                // Act at the point where the minimum delta occurred.
                match deltatype {
                    // No further improvement possible; optimum reached.
                    1 => break,
                    2 => {
                        // Use the least-slack edge to continue the search.
                        self.allowedge[deltaedge] = true;
                        let (mut i, j, _wt) = self.edges[deltaedge];
                        if self.label[self.inblossom[i]] == 0 {
                            i = j;
                        }
                        assert!(self.label[self.inblossom[i]] == 1);
                        self.queue.push(i);
                    }
                    3 => {
                        // Use the least-slack edge to continue the search.
                        self.allowedge[deltaedge] = true;
                        let (i, _j, _wt) = self.edges[deltaedge];
                        assert!(self.label[self.inblossom[i]] == 1);
                        self.queue.push(i);
                    }
                    // Expand the least-dual T-blossom.
                    4 => self.expand_blossom(deltablossom, false),
                    _ => unreachable!(),
                }
            }

            // Stop when no more augmenting paths can be found.
            if !augmented {
                break;
            }

            // End of stage: expand all S-blossoms with zero dual.
            for b in self.nvertex..2 * self.nvertex {
                if self.blossomparent[b] == SENTINEL
                    && self.blossombase[b] != SENTINEL
                    && self.label[b] == 1
                    && self.dualvar[b] == 0
                {
                    self.expand_blossom(b, true);
                }
            }
        }

        #[cfg(debug_assertions)]
        self.verify_optimum();

        // Rewrite mate[] so it refers to vertices instead of endpoints.
        for v in 0..self.nvertex {
            if self.mate[v] != SENTINEL {
                self.mate[v] = self.endpoint[self.mate[v]];
            }
        }
        for v in 0..self.nvertex {
            assert!(self.mate[v] == SENTINEL || self.mate[self.mate[v]] == v);
        }
    }
}

/// v = v[split..] + v[..split]
fn rotate(v: &mut Vec<usize>, split: usize) {
    v.rotate_left(split);
}

/// Python-style indexing with negative offsets counting from the back.
fn pos_neg_index(v: &[usize], index: i32) -> usize {
    let actual = if index >= 0 {
        index as usize
    } else {
        v.len() - (-index) as usize
    };
    v[actual]
}
