//! Exact matching kernels used as black boxes on small component graphs.
//!
//! `max_matching` is an augmenting-path blossom algorithm. The b-matching
//! kernels go through the expanded graph G_b (every vertex copied b_v
//! times, edges copied across all pairs) and fold copies back to integer
//! edge weights. Maximum-cost solving runs a maximum-weight matching on
//! the expansion with per-edge weight K + c_e, K large enough that
//! cardinality strictly dominates cost.
//!
//! The kernels are a swappable interface: callers only rely on the
//! contracts here, not on the expansion strategy.

use crate::error::{Error, Result};
use crate::graph::{truncate_capacities, BMatching, CapacityMap, Graph};

const NONE: usize = usize::MAX;

/// Per-edge nonnegative integer costs. In this crate costs are only ever
/// 1 and 2 (gadget-internal edges get cost 2).
#[derive(Debug, Clone)]
pub struct CostMap {
    c: Vec<i64>,
}

impl CostMap {
    pub fn new(c: Vec<i64>) -> Result<CostMap> {
        if let Some(&bad) = c.iter().find(|&&x| x < 0) {
            return Err(Error::Internal(format!("negative cost {bad}")));
        }
        Ok(CostMap { c })
    }

    pub fn uniform(m: usize, c: i64) -> CostMap {
        CostMap { c: vec![c; m] }
    }

    pub fn get(&self, eid: usize) -> i64 {
        self.c[eid]
    }

    pub fn set(&mut self, eid: usize, c: i64) {
        debug_assert!(c >= 0);
        self.c[eid] = c;
    }
}

/// Kernel output: a witness matching plus its cardinality and cost.
#[derive(Debug, Clone)]
pub struct KernelResult {
    pub x: BMatching,
    pub cardinality: i64,
    pub cost: i64,
}

/// Budget for the pseudo-polynomial expansion. Exceeding it is an error
/// rather than a thrash.
#[derive(Debug, Clone, Copy)]
pub struct KernelBudget {
    pub max_vertices: usize,
    pub max_edges: usize,
}

impl Default for KernelBudget {
    fn default() -> Self {
        KernelBudget {
            max_vertices: 50_000,
            max_edges: 2_000_000,
        }
    }
}

/// Expanded graph G_b as adjacency lists plus the owner map back to G.
pub(crate) struct Expansion {
    pub owner: Vec<usize>,
    pub adj: Vec<Vec<usize>>,
    pub n: usize,
}

pub(crate) fn expand(g: &Graph, b: &CapacityMap, budget: &KernelBudget) -> Result<Expansion> {
    let mut offsets = Vec::with_capacity(g.n() + 1);
    let mut total: usize = 0;
    for v in 0..g.n() {
        offsets.push(total);
        let bv = b.get(v);
        if bv < 0 {
            return Err(Error::Internal("negative capacity".into()));
        }
        total = total.saturating_add(bv as usize);
        if total > budget.max_vertices {
            return Err(Error::KernelBudget(format!(
                "expansion needs more than {} vertices",
                budget.max_vertices
            )));
        }
    }
    offsets.push(total);

    let mut edge_total: u64 = 0;
    for &(u, v) in g.edges() {
        edge_total = edge_total.saturating_add(b.get(u) as u64 * b.get(v) as u64);
        if edge_total > budget.max_edges as u64 {
            return Err(Error::KernelBudget(format!(
                "expansion needs more than {} edges",
                budget.max_edges
            )));
        }
    }

    let mut owner = vec![0usize; total];
    for v in 0..g.n() {
        for i in offsets[v]..offsets[v + 1] {
            owner[i] = v;
        }
    }
    let mut adj = vec![Vec::new(); total];
    for &(u, v) in g.edges() {
        for ui in offsets[u]..offsets[u + 1] {
            for vi in offsets[v]..offsets[v + 1] {
                adj[ui].push(vi);
                adj[vi].push(ui);
            }
        }
    }
    Ok(Expansion {
        owner,
        adj,
        n: total,
    })
}

fn fold_mates(g: &Graph, exp: &Expansion, mate: &[usize]) -> BMatching {
    let mut x = BMatching::zero(g.m());
    for v in 0..exp.n {
        let u = mate[v];
        if u != NONE && v < u {
            let eid = g
                .edge_id(exp.owner[v], exp.owner[u])
                .expect("matched expansion edge maps to a real edge");
            x.add(eid, 1);
        }
    }
    x
}

/// Maximum-cardinality matching (x_e in {0,1}).
pub fn max_matching(g: &Graph) -> KernelResult {
    let adj: Vec<Vec<usize>> = (0..g.n())
        .map(|v| g.adjacency(v).iter().map(|&(u, _)| u).collect())
        .collect();
    let mate = unweighted_mates(g.n(), &adj);
    let mut x = BMatching::zero(g.m());
    for v in 0..g.n() {
        let u = mate[v];
        if u != NONE && v < u {
            x.add(g.edge_id(v, u).unwrap(), 1);
        }
    }
    let cardinality = x.norm1();
    KernelResult {
        x,
        cardinality,
        cost: cardinality,
    }
}

/// Maximum-cardinality b-matching via expansion + blossom.
pub fn solve_bmatching_kernel(
    g: &Graph,
    b: &CapacityMap,
    budget: &KernelBudget,
) -> Result<KernelResult> {
    let bt = truncate_capacities(g, b);
    let exp = expand(g, &bt, budget)?;
    let mate = unweighted_mates(exp.n, &exp.adj);
    let x = fold_mates(g, &exp, &mate);
    let cardinality = x.norm1();
    Ok(KernelResult {
        x,
        cardinality,
        cost: cardinality,
    })
}

/// Among maximum-cardinality b-matchings, one of maximum cost.
pub fn solve_maxcost_bmatching_kernel(
    g: &Graph,
    b: &CapacityMap,
    c: &CostMap,
    budget: &KernelBudget,
) -> Result<KernelResult> {
    let bt = truncate_capacities(g, b);
    let exp = expand(g, &bt, budget)?;

    let mut edges: Vec<(usize, usize, i64)> = Vec::new();
    let mut cost_sum: i64 = 0;
    for v in 0..exp.n {
        for &u in &exp.adj[v] {
            if v < u {
                let eid = g.edge_id(exp.owner[v], exp.owner[u]).unwrap();
                edges.push((v, u, c.get(eid)));
                cost_sum += c.get(eid);
            }
        }
    }
    // Cardinality dominates cost: any K > sum of all costs works.
    let k = cost_sum + 1;
    for e in edges.iter_mut() {
        e.2 += k;
    }
    let mate = if edges.is_empty() {
        vec![NONE; exp.n]
    } else {
        weighted_mates(exp.n, &edges)
    };
    let x = fold_mates(g, &exp, &mate);
    let cardinality = x.norm1();
    let cost = (0..g.m()).map(|e| c.get(e) * x.get(e)).sum();
    Ok(KernelResult {
        x,
        cardinality,
        cost,
    })
}

// ---------------------------------------------------------------------
// Unweighted blossom (augmenting BFS with base contraction).
// ---------------------------------------------------------------------

/// `mate[v]` is the matched partner of v or NONE.
pub(crate) fn unweighted_mates(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut mate = vec![NONE; n];
    // Greedy seed matching saves most augmentation rounds.
    for v in 0..n {
        if mate[v] != NONE {
            continue;
        }
        for &u in &adj[v] {
            if mate[u] == NONE {
                mate[v] = u;
                mate[u] = v;
                break;
            }
        }
    }
    let mut aug = Augmenter::new(n);
    for v in 0..n {
        if mate[v] == NONE {
            aug.augment_from(v, adj, &mut mate);
        }
    }
    mate
}

struct Augmenter {
    parent: Vec<usize>,
    base: Vec<usize>,
    in_queue: Vec<bool>,
    in_blossom: Vec<bool>,
    on_path: Vec<bool>,
    queue: Vec<usize>,
}

impl Augmenter {
    fn new(n: usize) -> Augmenter {
        Augmenter {
            parent: vec![NONE; n],
            base: (0..n).collect(),
            in_queue: vec![false; n],
            in_blossom: vec![false; n],
            on_path: vec![false; n],
            queue: Vec::new(),
        }
    }

    fn lca(&mut self, mate: &[usize], mut a: usize, mut b: usize) -> usize {
        for v in self.on_path.iter_mut() {
            *v = false;
        }
        loop {
            a = self.base[a];
            self.on_path[a] = true;
            if mate[a] == NONE {
                break;
            }
            a = self.parent[mate[a]];
        }
        loop {
            b = self.base[b];
            if self.on_path[b] {
                return b;
            }
            b = self.parent[mate[b]];
        }
    }

    fn mark_path(&mut self, mate: &[usize], mut v: usize, cur_base: usize, mut child: usize) {
        while self.base[v] != cur_base {
            self.in_blossom[self.base[v]] = true;
            self.in_blossom[self.base[mate[v]]] = true;
            self.parent[v] = child;
            child = mate[v];
            v = self.parent[mate[v]];
        }
    }

    fn augment_from(&mut self, root: usize, adj: &[Vec<usize>], mate: &mut [usize]) -> bool {
        let n = self.parent.len();
        for i in 0..n {
            self.parent[i] = NONE;
            self.base[i] = i;
            self.in_queue[i] = false;
        }
        self.queue.clear();
        self.queue.push(root);
        self.in_queue[root] = true;
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            for idx in 0..adj[v].len() {
                let to = adj[v][idx];
                if self.base[v] == self.base[to] || mate[v] == to {
                    continue;
                }
                if to == root || (mate[to] != NONE && self.parent[mate[to]] != NONE) {
                    // Odd cycle: contract the blossom down to the lca base.
                    let cur_base = self.lca(mate, v, to);
                    for f in self.in_blossom.iter_mut() {
                        *f = false;
                    }
                    self.mark_path(mate, v, cur_base, to);
                    self.mark_path(mate, to, cur_base, v);
                    for i in 0..n {
                        if self.in_blossom[self.base[i]] {
                            self.base[i] = cur_base;
                            if !self.in_queue[i] {
                                self.in_queue[i] = true;
                                self.queue.push(i);
                            }
                        }
                    }
                } else if self.parent[to] == NONE {
                    self.parent[to] = v;
                    if mate[to] == NONE {
                        // Augment along the parent chain.
                        let mut cur = to;
                        while cur != NONE {
                            let prev = self.parent[cur];
                            let next = mate[prev];
                            mate[cur] = prev;
                            mate[prev] = cur;
                            cur = next;
                        }
                        return true;
                    } else {
                        let m = mate[to];
                        if !self.in_queue[m] {
                            self.in_queue[m] = true;
                            self.queue.push(m);
                        }
                    }
                }
            }
        }
        false
    }
}

// ---------------------------------------------------------------------
// Maximum-weight matching (Edmonds blossom, primal-dual).
//
// Port of the classic Galil-style implementation with integer duals;
// vertices are 0..n, non-trivial blossoms n..2n, edge endpoints 2k/2k+1
// for edge k. Returns mate[v] as a partner vertex or NONE.
// ---------------------------------------------------------------------

struct WeightedMatcher {
    nvertex: usize,
    edges: Vec<(usize, usize, i64)>,
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<usize>, // remote endpoint index or NONE
    label: Vec<u8>,
    labelend: Vec<usize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<usize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<usize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<usize>,
    blossombestedges: Vec<Vec<usize>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<i64>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

pub(crate) fn weighted_mates(n: usize, edges: &[(usize, usize, i64)]) -> Vec<usize> {
    let mut m = WeightedMatcher::new(n, edges.to_vec());
    m.run();
    let mut mates = vec![NONE; n];
    for v in 0..n {
        if m.mate[v] != NONE {
            mates[v] = m.endpoint[m.mate[v]];
        }
    }
    mates
}

impl WeightedMatcher {
    fn new(nvertex: usize, edges: Vec<(usize, usize, i64)>) -> WeightedMatcher {
        let nedge = edges.len();
        let maxweight = edges.iter().map(|e| e.2).max().unwrap_or(0).max(0);
        let endpoint: Vec<usize> = (0..2 * nedge)
            .map(|p| {
                if p % 2 == 0 {
                    edges[p / 2].0
                } else {
                    edges[p / 2].1
                }
            })
            .collect();
        let mut neighbend = vec![Vec::new(); nvertex];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        WeightedMatcher {
            nvertex,
            endpoint,
            neighbend,
            mate: vec![NONE; nvertex],
            label: vec![0; 2 * nvertex],
            labelend: vec![NONE; 2 * nvertex],
            inblossom: (0..nvertex).collect(),
            blossomparent: vec![NONE; 2 * nvertex],
            blossomchilds: vec![Vec::new(); 2 * nvertex],
            blossombase: (0..nvertex).chain(std::iter::repeat_n(NONE, nvertex)).collect(),
            blossomendps: vec![Vec::new(); 2 * nvertex],
            bestedge: vec![NONE; 2 * nvertex],
            blossombestedges: vec![Vec::new(); 2 * nvertex],
            unusedblossoms: (nvertex..2 * nvertex).collect(),
            dualvar: std::iter::repeat_n(maxweight, nvertex)
                .chain(std::iter::repeat_n(0, nvertex))
                .collect(),
            allowedge: vec![false; nedge],
            queue: Vec::new(),
            edges,
        }
    }

    fn slack(&self, k: usize) -> i64 {
        let (i, j, wt) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2 * wt
    }

    fn blossom_leaves(&self, b: usize, out: &mut Vec<usize>) {
        if b < self.nvertex {
            out.push(b);
        } else {
            for t in 0..self.blossomchilds[b].len() {
                self.blossom_leaves(self.blossomchilds[b][t], out);
            }
        }
    }

    fn assign_label(&mut self, w: usize, t: u8, p: usize) {
        let b = self.inblossom[w];
        debug_assert!(self.label[w] == 0 && self.label[b] == 0);
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = NONE;
        self.bestedge[b] = NONE;
        if t == 1 {
            let mut leaves = Vec::new();
            self.blossom_leaves(b, &mut leaves);
            self.queue.extend(leaves);
        } else {
            // T-label: the base's mate becomes S.
            let base = self.blossombase[b];
            debug_assert!(self.mate[base] != NONE);
            self.assign_label(self.endpoint[self.mate[base]], 1, self.mate[base] ^ 1);
        }
    }

    /// Trace back from v and w placing breadcrumbs; returns the base of a
    /// new blossom, or NONE if the paths reach two distinct roots
    /// (an augmenting path).
    fn scan_blossom(&mut self, mut v: usize, mut w: usize) -> usize {
        let mut path = Vec::new();
        let mut base = NONE;
        while v != NONE || w != NONE {
            let mut b = self.inblossom[v];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            debug_assert_eq!(self.label[b], 1);
            path.push(b);
            self.label[b] = 5;
            debug_assert_eq!(self.labelend[b], self.mate[self.blossombase[b]]);
            if self.labelend[b] == NONE {
                // The base of blossom b is single; stop tracing this path.
                v = NONE;
            } else {
                v = self.endpoint[self.labelend[b]];
                b = self.inblossom[v];
                debug_assert_eq!(self.label[b], 2);
                debug_assert!(self.labelend[b] != NONE);
                v = self.endpoint[self.labelend[b]];
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unusedblossoms.pop().expect("blossom slots available");
        self.blossombase[b] = base;
        self.blossomparent[b] = NONE;
        self.blossomparent[bb] = b;

        let mut path = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = b;
            path.push(bv);
            endps.push(self.labelend[bv]);
            debug_assert!(
                self.label[bv] == 2
                    || (self.label[bv] == 1
                        && self.labelend[bv] == self.mate[self.blossombase[bv]])
            );
            debug_assert!(self.labelend[bv] != NONE);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        path.push(bb);
        path.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = b;
            path.push(bw);
            endps.push(self.labelend[bw] ^ 1);
            debug_assert!(
                self.label[bw] == 2
                    || (self.label[bw] == 1
                        && self.labelend[bw] == self.mate[self.blossombase[bw]])
            );
            debug_assert!(self.labelend[bw] != NONE);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }

        debug_assert_eq!(self.label[bb], 1);
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0;
        self.blossomchilds[b] = path;
        self.blossomendps[b] = endps;
        // Former T-vertices become S-vertices of the new blossom.
        let mut leaves = Vec::new();
        self.blossom_leaves(b, &mut leaves);
        for &l in &leaves {
            if self.label[self.inblossom[l]] == 2 {
                self.queue.push(l);
            }
            self.inblossom[l] = b;
        }

        // Combine the children's least-slack edge lists.
        let mut bestedgeto = vec![NONE; 2 * self.nvertex];
        for bv in self.blossomchilds[b].clone() {
            let nblists: Vec<Vec<usize>> = if self.blossombestedges[bv].is_empty() {
                let mut lv = Vec::new();
                self.blossom_leaves(bv, &mut lv);
                lv.iter()
                    .map(|&vv| self.neighbend[vv].iter().map(|&p| p / 2).collect())
                    .collect()
            } else {
                vec![std::mem::take(&mut self.blossombestedges[bv])]
            };
            for nblist in nblists {
                for kk in nblist {
                    let (i, j, _) = self.edges[kk];
                    let outside = if self.inblossom[j] == b { i } else { j };
                    let bj = self.inblossom[outside];
                    if bj != b
                        && self.label[bj] == 1
                        && (bestedgeto[bj] == NONE || self.slack(kk) < self.slack(bestedgeto[bj]))
                    {
                        bestedgeto[bj] = kk;
                    }
                }
            }
            self.blossombestedges[bv].clear();
            self.bestedge[bv] = NONE;
        }
        self.blossombestedges[b] = bestedgeto.into_iter().filter(|&k| k != NONE).collect();
        self.bestedge[b] = NONE;
        for kk in self.blossombestedges[b].clone() {
            if self.bestedge[b] == NONE || self.slack(kk) < self.slack(self.bestedge[b]) {
                self.bestedge[b] = kk;
            }
        }
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        for s in self.blossomchilds[b].clone() {
            self.blossomparent[s] = NONE;
            if s < self.nvertex {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0 {
                self.expand_blossom(s, endstage);
            } else {
                let mut leaves = Vec::new();
                self.blossom_leaves(s, &mut leaves);
                for v in leaves {
                    self.inblossom[v] = s;
                }
            }
        }
        if !endstage && self.label[b] == 2 {
            // Expanding a T-blossom mid-stage: relabel the even-path
            // sub-blossoms from the entry child down to the base, then
            // re-derive T labels for any other reachable sub-blossom.
            debug_assert!(self.labelend[b] != NONE);
            let entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];
            let mut j = self.blossomchilds[b]
                .iter()
                .position(|&c| c == entrychild)
                .unwrap() as isize;
            let len = self.blossomchilds[b].len() as isize;
            let (jstep, endptrick): (isize, usize) = if j & 1 != 0 {
                j -= len;
                (1, 0)
            } else {
                (-1, 1)
            };
            let mut p = self.labelend[b];
            while j != 0 {
                self.label[self.endpoint[p ^ 1]] = 0;
                let idx = Self::wrap(j - endptrick as isize, len);
                self.label[self.endpoint[self.blossomendps[b][idx] ^ endptrick ^ 1]] = 0;
                self.assign_label(self.endpoint[p ^ 1], 2, p);
                self.allowedge[self.blossomendps[b][idx] / 2] = true;
                j += jstep;
                let idx2 = Self::wrap(j - endptrick as isize, len);
                p = self.blossomendps[b][idx2] ^ endptrick;
                self.allowedge[p / 2] = true;
                j += jstep;
            }
            // Relabel the base sub-blossom without stepping to its mate.
            let bv = self.blossomchilds[b][Self::wrap(j, len)];
            self.label[self.endpoint[p ^ 1]] = 2;
            self.label[bv] = 2;
            self.labelend[self.endpoint[p ^ 1]] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;
            let mut j2 = j + jstep;
            while self.blossomchilds[b][Self::wrap(j2, len)] != entrychild {
                let bv = self.blossomchilds[b][Self::wrap(j2, len)];
                if self.label[bv] == 1 {
                    j2 += jstep;
                    continue;
                }
                let mut leaves = Vec::new();
                self.blossom_leaves(bv, &mut leaves);
                let mut found = NONE;
                for v in leaves {
                    if self.label[v] != 0 {
                        found = v;
                        break;
                    }
                }
                if found != NONE {
                    debug_assert_eq!(self.label[found], 2);
                    debug_assert_eq!(self.inblossom[found], bv);
                    self.label[found] = 0;
                    self.label[self.endpoint[self.mate[self.blossombase[bv]]]] = 0;
                    let le = self.labelend[found];
                    self.assign_label(found, 2, le);
                }
                j2 += jstep;
            }
        }
        self.label[b] = 0;
        self.labelend[b] = NONE;
        self.blossomchilds[b].clear();
        self.blossomendps[b].clear();
        self.blossombase[b] = NONE;
        self.blossombestedges[b].clear();
        self.bestedge[b] = NONE;
        self.unusedblossoms.push(b);
    }

    fn wrap(j: isize, len: isize) -> usize {
        (((j % len) + len) % len) as usize
    }

    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b {
            t = self.blossomparent[t];
        }
        if t >= self.nvertex {
            self.augment_blossom(t, v);
        }
        let i = self.blossomchilds[b].iter().position(|&c| c == t).unwrap() as isize;
        let len = self.blossomchilds[b].len() as isize;
        let mut j = i;
        let (jstep, endptrick): (isize, usize) = if i & 1 != 0 {
            j -= len;
            (1, 0)
        } else {
            (-1, 1)
        };
        while j != 0 {
            j += jstep;
            let mut t2 = self.blossomchilds[b][Self::wrap(j, len)];
            let p = self.blossomendps[b][Self::wrap(j - endptrick as isize, len)] ^ endptrick;
            if t2 >= self.nvertex {
                self.augment_blossom(t2, self.endpoint[p]);
            }
            j += jstep;
            t2 = self.blossomchilds[b][Self::wrap(j, len)];
            if t2 >= self.nvertex {
                self.augment_blossom(t2, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }
        self.blossomchilds[b].rotate_left(Self::wrap(i, len));
        self.blossomendps[b].rotate_left(Self::wrap(i, len));
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        debug_assert_eq!(self.blossombase[b], v);
    }

    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (s, p) in [(v, 2 * k + 1), (w, 2 * k)] {
            let mut s = s;
            let mut p = p;
            loop {
                let bs = self.inblossom[s];
                debug_assert_eq!(self.label[bs], 1);
                debug_assert_eq!(self.labelend[bs], self.mate[self.blossombase[bs]]);
                if bs >= self.nvertex {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                debug_assert_eq!(self.label[bt], 2);
                debug_assert!(self.labelend[bt] != NONE);
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                debug_assert_eq!(self.blossombase[bt], t);
                if bt >= self.nvertex {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    fn run(&mut self) {
        if self.edges.is_empty() {
            return;
        }
        for _ in 0..self.nvertex {
            for l in self.label.iter_mut() {
                *l = 0;
            }
            for be in self.bestedge.iter_mut() {
                *be = NONE;
            }
            for b in self.nvertex..2 * self.nvertex {
                self.blossombestedges[b].clear();
            }
            for a in self.allowedge.iter_mut() {
                *a = false;
            }
            self.queue.clear();
            for v in 0..self.nvertex {
                if self.mate[v] == NONE && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, NONE);
                }
            }
            let mut augmented = false;
            loop {
                while let Some(v) = self.queue.pop() {
                    debug_assert_eq!(self.label[self.inblossom[v]], 1);
                    for i in 0..self.neighbend[v].len() {
                        let p = self.neighbend[v][i];
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
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
                                self.assign_label(w, 2, p ^ 1);
                            } else if self.label[self.inblossom[w]] == 1 {
                                let base = self.scan_blossom(v, w);
                                if base != NONE {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == 0 {
                                debug_assert_eq!(self.label[self.inblossom[w]], 2);
                                self.label[w] = 2;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == NONE || kslack < self.slack(self.bestedge[b]) {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == 0
                            && (self.bestedge[w] == NONE || kslack < self.slack(self.bestedge[w]))
                        {
                            self.bestedge[w] = k;
                        }
                    }
                    if augmented {
                        break;
                    }
                }
                if augmented {
                    break;
                }

                // No tight structure left; adjust duals.
                let mut deltatype = 1;
                let mut delta: i64 = (0..self.nvertex)
                    .map(|v| self.dualvar[v])
                    .min()
                    .unwrap()
                    .max(0);
                let mut deltaedge = NONE;
                let mut deltablossom = NONE;
                for v in 0..self.nvertex {
                    if self.label[self.inblossom[v]] == 0 && self.bestedge[v] != NONE {
                        let d = self.slack(self.bestedge[v]);
                        if d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                for b in 0..2 * self.nvertex {
                    if self.blossomparent[b] == NONE
                        && self.label[b] == 1
                        && self.bestedge[b] != NONE
                    {
                        let kslack = self.slack(self.bestedge[b]);
                        debug_assert_eq!(kslack % 2, 0);
                        let d = kslack / 2;
                        if d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                for b in self.nvertex..2 * self.nvertex {
                    if self.blossombase[b] != NONE
                        && self.blossomparent[b] == NONE
                        && self.label[b] == 2
                        && self.dualvar[b] < delta
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }

                for v in 0..self.nvertex {
                    match self.label[self.inblossom[v]] {
                        1 => self.dualvar[v] -= delta,
                        2 => self.dualvar[v] += delta,
                        _ => {}
                    }
                }
                for b in self.nvertex..2 * self.nvertex {
                    if self.blossombase[b] != NONE && self.blossomparent[b] == NONE {
                        match self.label[b] {
                            1 => self.dualvar[b] += delta,
                            2 => self.dualvar[b] -= delta,
                            _ => {}
                        }
                    }
                }

                match deltatype {
                    1 => break,
                    2 => {
                        self.allowedge[deltaedge] = true;
                        let (i, j, _) = self.edges[deltaedge];
                        let v = if self.label[self.inblossom[i]] == 0 {
                            j
                        } else {
                            i
                        };
                        debug_assert_eq!(self.label[self.inblossom[v]], 1);
                        self.queue.push(v);
                    }
                    3 => {
                        self.allowedge[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        debug_assert_eq!(self.label[self.inblossom[i]], 1);
                        self.queue.push(i);
                    }
                    _ => {
                        self.expand_blossom(deltablossom, false);
                    }
                }
            }
            if !augmented {
                break;
            }
            for b in self.nvertex..2 * self.nvertex {
                if self.blossomparent[b] == NONE
                    && self.blossombase[b] != NONE
                    && self.label[b] == 1
                    && self.dualvar[b] == 0
                {
                    self.expand_blossom(b, true);
                }
            }
        }
    }
}
