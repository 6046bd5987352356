//! Independent brute-force oracle, instance generators, and the μ-sweep
//! harness used by the property and acceptance tests.
//!
//! `oracle_bmatching` enumerates edge weights directly with a memoized
//! DP; it shares no code with the blossom kernels. The expansion-based
//! route (`expand_graph` + `oracle_via_expansion`) exercises the
//! G_b reduction and is cross-checked against the DP on small inputs.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{validate_bmatching, BMatching, CapacityMap, Graph};

/// Hard ceiling for the exhaustive oracle; it is a desk-scale tool.
const ORACLE_MAX_EDGES: usize = 64;
const ORACLE_MAX_STATES: usize = 40_000_000;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub cardinality: i64,
    pub witness: BMatching,
}

struct OracleDp<'a> {
    g: &'a Graph,
    /// last edge index incident to each vertex
    last_touch: Vec<usize>,
    memo: HashMap<(usize, Vec<i64>), i64>,
}

impl<'a> OracleDp<'a> {
    fn new(g: &'a Graph) -> OracleDp<'a> {
        let mut last_touch = vec![0usize; g.n()];
        for (eid, &(u, v)) in g.edges().iter().enumerate() {
            last_touch[u] = eid;
            last_touch[v] = eid;
        }
        OracleDp {
            g,
            last_touch,
            memo: HashMap::new(),
        }
    }

    fn canonical(&self, idx: usize, caps: &[i64]) -> Vec<i64> {
        // Capacities of vertices with no remaining incident edges are
        // irrelevant; zero them so states collapse.
        caps.iter()
            .enumerate()
            .map(|(v, &c)| {
                if self.g.degree(v) == 0 || self.last_touch[v] < idx {
                    0
                } else {
                    c
                }
            })
            .collect()
    }

    fn best(&mut self, idx: usize, caps: &mut Vec<i64>) -> Result<i64> {
        if idx == self.g.m() {
            return Ok(0);
        }
        let key = (idx, self.canonical(idx, caps));
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        if self.memo.len() > ORACLE_MAX_STATES {
            return Err(Error::KernelBudget("oracle state budget exceeded".into()));
        }
        let (u, v) = self.g.endpoints(idx);
        let maxx = caps[u].min(caps[v]);
        let mut best = 0;
        for x in 0..=maxx {
            caps[u] -= x;
            caps[v] -= x;
            let val = x + self.best(idx + 1, caps)?;
            caps[u] += x;
            caps[v] += x;
            best = best.max(val);
        }
        self.memo.insert(key, best);
        Ok(best)
    }
}

/// Maximum b-matching by exhaustive weight enumeration with memoization.
pub fn oracle_bmatching(g: &Graph, b: &CapacityMap) -> Result<OracleResult> {
    if g.m() > ORACLE_MAX_EDGES {
        return Err(Error::KernelBudget(format!(
            "oracle limited to {ORACLE_MAX_EDGES} edges, got {}",
            g.m()
        )));
    }
    let mut dp = OracleDp::new(g);
    let mut caps = b.values().to_vec();
    let total = dp.best(0, &mut caps)?;

    // Reconstruct a witness by committing the largest weight per edge
    // that preserves the optimum of the remaining suffix.
    let mut witness = BMatching::zero(g.m());
    let mut remaining = total;
    for eid in 0..g.m() {
        let (u, v) = g.endpoints(eid);
        let maxx = caps[u].min(caps[v]);
        for x in (0..=maxx).rev() {
            caps[u] -= x;
            caps[v] -= x;
            let tail = dp.best(eid + 1, &mut caps)?;
            if x + tail == remaining {
                witness.set(eid, x);
                remaining -= x;
                break;
            }
            caps[u] += x;
            caps[v] += x;
        }
    }
    debug_assert_eq!(remaining, 0);
    debug_assert_eq!(validate_bmatching(g, b, &witness), Ok(total));
    Ok(OracleResult {
        cardinality: total,
        witness,
    })
}

/// The expanded graph G_b: vertex v becomes b_v nonadjacent copies and
/// every edge becomes a complete bipartite bundle between the copies.
/// Returns the graph plus the copy-to-original vertex map.
pub fn expand_graph(g: &Graph, b: &CapacityMap) -> Result<(Graph, Vec<usize>)> {
    let mut owner = Vec::new();
    let mut first = vec![0usize; g.n()];
    for v in 0..g.n() {
        first[v] = owner.len();
        for _ in 0..b.get(v) {
            owner.push(v);
        }
    }
    let mut pairs = Vec::new();
    for &(u, v) in g.edges() {
        for i in 0..b.get(u) as usize {
            for j in 0..b.get(v) as usize {
                pairs.push((first[u] + i, first[v] + j));
            }
        }
    }
    let eg = Graph::build(owner.len(), &pairs)?;
    Ok((eg, owner))
}

/// Oracle through the expansion: maximum matching of G_b found by an
/// exhaustive branch-and-bound matcher, folded back to edge weights.
pub fn oracle_via_expansion(g: &Graph, b: &CapacityMap) -> Result<OracleResult> {
    let bt = crate::graph::truncate_capacities(g, b);
    let (eg, owner) = expand_graph(g, &bt)?;
    if eg.n() > 40 {
        return Err(Error::KernelBudget(
            "expansion oracle limited to 40 expanded vertices".into(),
        ));
    }
    let pairs = bb_max_matching(&eg);
    let mut witness = BMatching::zero(g.m());
    for (a, bb_) in &pairs {
        let eid = g.edge_id(owner[*a], owner[*bb_]).unwrap();
        witness.add(eid, 1);
    }
    let cardinality = witness.norm1();
    Ok(OracleResult {
        cardinality,
        witness,
    })
}

/// Exhaustive maximum matching by branch and bound on the lowest live
/// vertex. Exact on any graph; exponential, so callers keep it tiny.
fn bb_max_matching(g: &Graph) -> Vec<(usize, usize)> {
    fn go(
        g: &Graph,
        used: &mut Vec<bool>,
        from: usize,
        current: &mut Vec<(usize, usize)>,
        best: &mut Vec<(usize, usize)>,
    ) {
        let mut v = from;
        while v < g.n() && (used[v] || g.adjacency(v).iter().all(|&(u, _)| used[u])) {
            v += 1;
        }
        if v == g.n() {
            if current.len() > best.len() {
                *best = current.clone();
            }
            return;
        }
        // Upper bound: everything past v could pair up perfectly.
        let live = (v..g.n()).filter(|&u| !used[u]).count();
        if current.len() + live / 2 <= best.len() {
            return;
        }
        used[v] = true;
        for &(u, _) in g.adjacency(v) {
            if !used[u] {
                used[u] = true;
                current.push((v, u));
                go(g, used, v + 1, current, best);
                current.pop();
                used[u] = false;
            }
        }
        // v stays exposed.
        go(g, used, v + 1, current, best);
        used[v] = false;
    }
    let mut best = Vec::new();
    let mut current = Vec::new();
    let mut used = vec![false; g.n()];
    go(g, &mut used, 0, &mut current, &mut best);
    best
}

/// μ sweep: maximum cardinality for every capacity t of vertex w,
/// t = 0..=t_max, by repeated oracle calls.
pub fn sweep_mu(g: &Graph, b: &CapacityMap, w: usize, t_max: i64) -> Result<Vec<i64>> {
    let mut out = Vec::with_capacity(t_max as usize + 1);
    for t in 0..=t_max {
        let mut bt = b.clone();
        bt.set(w, t);
        out.push(oracle_bmatching(g, &bt)?.cardinality);
    }
    Ok(out)
}

/// Random connected distance-hereditary graph built from K2 by pendant
/// and twin operations (the classic pruning characterization, run in
/// reverse; this construction is background knowledge, not taken from
/// any single source). Operation mix keeps edge growth near-linear so
/// large instances stay tractable.
pub fn gen_distance_hereditary(n: usize, seed: u64) -> Graph {
    assert!(n >= 2, "need n >= 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj: Vec<Vec<usize>> = vec![vec![1], vec![0]];
    let mut pairs = vec![(0usize, 1usize)];
    while adj.len() < n {
        let v = adj.len();
        let template = rng.random_range(0..v);
        let op = rng.random_range(0..10);
        let mut nbrs: Vec<usize> = if op < 4 {
            // pendant vertex
            vec![template]
        } else {
            // twin: copy the template's neighborhood
            adj[template].clone()
        };
        if op >= 7 {
            // true twin: also adjacent to the template itself
            nbrs.push(template);
        }
        adj.push(Vec::new());
        for u in nbrs {
            adj[v].push(u);
            adj[u].push(v);
            pairs.push((u, v));
        }
    }
    Graph::build(n, &pairs).expect("generator emits simple edges")
}

/// Random graph of split-width at most k, assembled by inverse simple
/// decompositions: repeatedly replace a vertex by a connected piece of
/// order <= k-1 whose frontier joins to the old neighborhood. Pieces of
/// order exactly k are allowed only with a singleton frontier (the
/// marker then splits off as a pendant, leaving the piece prime).
pub fn gen_bounded_splitwidth(k: usize, target_n: usize, seed: u64) -> Graph {
    assert!(k >= 3, "need k >= 3");
    for attempt in 0..16 {
        let g = gen_bounded_splitwidth_once(k, target_n, seed.wrapping_add(attempt * 0x9e37));
        if target_n > 512 || g.n() < 4 {
            return g;
        }
        if let Ok(w) = crate::decomp::split_width(&g) {
            if w <= k {
                return g;
            }
        }
    }
    unreachable!("bounded-splitwidth construction cannot exceed k");
}

fn gen_bounded_splitwidth_once(k: usize, target_n: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_connected_piece(&mut rng, 4.min(k).max(2), k);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); start.0];
    for &(u, v) in &start.1 {
        adj[u].push(v);
        adj[v].push(u);
    }
    while adj.len() < target_n {
        if adj.len() < 2 {
            break;
        }
        let v = rng.random_range(0..adj.len());
        let old_nbrs = adj[v].clone();
        if old_nbrs.is_empty() {
            continue;
        }
        let full = k >= 4 && rng.random_range(0..4) == 0;
        let piece_order = if full {
            k
        } else {
            rng.random_range(2..=(k - 1).max(2))
        };
        let (pn, pedges) = random_connected_piece(&mut rng, piece_order.min(k), k);
        // Frontier of the new piece.
        let frontier: Vec<usize> = if full {
            vec![rng.random_range(0..pn)]
        } else {
            let mut f: Vec<usize> = (0..pn).filter(|_| rng.random_range(0..2) == 0).collect();
            if f.is_empty() {
                f.push(rng.random_range(0..pn));
            }
            f
        };
        // Piece vertex 0 reuses v's slot; the rest get fresh ids.
        let base = adj.len();
        let map = |p: usize| if p == 0 { v } else { base + p - 1 };
        for u in &old_nbrs {
            adj[*u].retain(|&x| x != v);
        }
        adj[v].clear();
        for _ in 1..pn {
            adj.push(Vec::new());
        }
        for &(a, b) in &pedges {
            let (a, b) = (map(a), map(b));
            adj[a].push(b);
            adj[b].push(a);
        }
        for &f in &frontier {
            for &u in &old_nbrs {
                let (a, b) = (map(f), u);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    let mut pairs = Vec::new();
    for (v, ns) in adj.iter().enumerate() {
        for &u in ns {
            if v < u {
                pairs.push((v, u));
            }
        }
    }
    Graph::build(adj.len(), &pairs).expect("generator emits simple edges")
}

fn random_connected_piece(
    rng: &mut ChaCha8Rng,
    order: usize,
    _k: usize,
) -> (usize, Vec<(usize, usize)>) {
    let n = order.max(2);
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.push((u, v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_range(0..2) == 0 && !edges.contains(&(u, v)) {
                edges.push((u, v));
            }
        }
    }
    (n, edges)
}

/// Random connected graph for property tests: a random spanning tree
/// plus extra edges.
pub fn gen_connected(n: usize, extra: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for v in 1..n {
        pairs.push((rng.random_range(0..v), v));
    }
    for _ in 0..extra {
        if n < 2 {
            break;
        }
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            pairs.push((u.min(v), u.max(v)));
        }
    }
    Graph::build(n, &pairs).unwrap()
}

/// Random capacities in 0..=max_cap.
pub fn gen_caps(n: usize, max_cap: i64, seed: u64) -> CapacityMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CapacityMap::new((0..n).map(|_| rng.random_range(0..=max_cap)).collect()).unwrap()
}
