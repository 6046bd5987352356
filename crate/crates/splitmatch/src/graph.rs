//! Simple undirected graphs, per-vertex capacities, and b-matchings.
//!
//! Vertices are dense ids `0..n`. Edge ids are assigned in input order
//! (first occurrence wins on duplicates) and are stable, so everything
//! downstream can key on them.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Maximum admissible total capacity. The dichotomic searches double
/// capacities transiently, so we keep one bit of headroom below i64::MAX.
pub const MAX_CAP_TOTAL: i64 = 1 << 62;

/// Simple undirected graph in adjacency-list form.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<(usize, usize)>>, // (neighbor, edge id)
    edge_index: HashMap<(usize, usize), usize>,
}

impl Graph {
    /// Build a graph from an edge list. Duplicate edges are dropped
    /// (first occurrence keeps the id); loops and out-of-range vertices
    /// are rejected.
    pub fn build(n: usize, edge_list: &[(usize, usize)]) -> Result<Graph> {
        let mut edges = Vec::new();
        let mut adjacency = vec![Vec::new(); n];
        let mut edge_index = HashMap::new();
        for &(u, v) in edge_list {
            if u >= n {
                return Err(Error::VertexRange { vertex: u, n });
            }
            if v >= n {
                return Err(Error::VertexRange { vertex: v, n });
            }
            if u == v {
                return Err(Error::Loop(u));
            }
            let key = (u.min(v), u.max(v));
            if edge_index.contains_key(&key) {
                continue;
            }
            let eid = edges.len();
            edge_index.insert(key, eid);
            edges.push(key);
            adjacency[u].push((v, eid));
            adjacency[v].push((u, eid));
        }
        Ok(Graph {
            n,
            edges,
            adjacency,
            edge_index,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Endpoints of edge `eid`, as `(min, max)`.
    pub fn endpoints(&self, eid: usize) -> (usize, usize) {
        self.edges[eid]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbors of `v` with the connecting edge ids.
    pub fn adjacency(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Edge id of `{u,v}`, if present.
    pub fn edge_id(&self, u: usize, v: usize) -> Option<usize> {
        self.edge_index.get(&(u.min(v), u.max(v))).copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_id(u, v).is_some()
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.connected_components().len() == 1
    }

    /// Connected components as sorted vertex lists.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &(u, _) in &self.adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced subgraph on `verts` plus the mapping local -> parent id.
    pub fn induced(&self, verts: &[usize]) -> (Graph, Vec<usize>) {
        let mut local = HashMap::new();
        for (i, &v) in verts.iter().enumerate() {
            local.insert(v, i);
        }
        let mut pairs = Vec::new();
        for &(u, v) in &self.edges {
            if let (Some(&a), Some(&b)) = (local.get(&u), local.get(&v)) {
                pairs.push((a, b));
            }
        }
        let g = Graph::build(verts.len(), &pairs).expect("induced subgraph of a valid graph");
        (g, verts.to_vec())
    }
}

/// Per-vertex nonnegative integer capacities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityMap {
    b: Vec<i64>,
}

impl CapacityMap {
    pub fn new(b: Vec<i64>) -> Result<CapacityMap> {
        let mut total: i64 = 0;
        for &c in &b {
            if c < 0 {
                return Err(Error::Internal(format!("negative capacity {c}")));
            }
            total = total.checked_add(c).ok_or(Error::CapacityOverflow)?;
        }
        if total >= MAX_CAP_TOTAL {
            return Err(Error::CapacityOverflow);
        }
        Ok(CapacityMap { b })
    }

    pub fn uniform(n: usize, c: i64) -> CapacityMap {
        CapacityMap::new(vec![c; n]).expect("uniform capacities in range")
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn get(&self, v: usize) -> i64 {
        self.b[v]
    }

    pub fn set(&mut self, v: usize, c: i64) {
        debug_assert!(c >= 0);
        self.b[v] = c;
    }

    pub fn values(&self) -> &[i64] {
        &self.b
    }

    /// `||b||_1`.
    pub fn norm1(&self) -> i64 {
        self.b.iter().sum()
    }
}

/// Per-edge nonnegative integer weights indexed by edge id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BMatching {
    x: Vec<i64>,
}

impl BMatching {
    pub fn zero(m: usize) -> BMatching {
        BMatching { x: vec![0; m] }
    }

    pub fn from_weights(x: Vec<i64>) -> BMatching {
        BMatching { x }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn get(&self, eid: usize) -> i64 {
        self.x[eid]
    }

    pub fn set(&mut self, eid: usize, w: i64) {
        self.x[eid] = w;
    }

    pub fn add(&mut self, eid: usize, w: i64) {
        self.x[eid] += w;
    }

    pub fn weights(&self) -> &[i64] {
        &self.x
    }

    /// Cardinality `||x||_1`.
    pub fn norm1(&self) -> i64 {
        self.x.iter().sum()
    }

    /// `deg_x(v)` with respect to `g`.
    pub fn degree(&self, g: &Graph, v: usize) -> i64 {
        g.adjacency(v).iter().map(|&(_, e)| self.x[e]).sum()
    }
}

/// First violation found when checking a b-matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NegativeWeight {
        edge: usize,
        weight: i64,
    },
    CapacityExceeded {
        vertex: usize,
        degree: i64,
        cap: i64,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NegativeWeight { edge, weight } => {
                write!(f, "negative weight {weight} on edge {edge}")
            }
            Violation::CapacityExceeded {
                vertex,
                degree,
                cap,
            } => write!(
                f,
                "capacity violation at vertex {vertex}: degree {degree} > {cap}"
            ),
        }
    }
}

/// Check `x` against `(g, b)`. Returns the cardinality on success,
/// otherwise the first violating edge or vertex.
pub fn validate_bmatching(
    g: &Graph,
    b: &CapacityMap,
    x: &BMatching,
) -> std::result::Result<i64, Violation> {
    for eid in 0..g.m() {
        let w = x.get(eid);
        if w < 0 {
            return Err(Violation::NegativeWeight {
                edge: eid,
                weight: w,
            });
        }
    }
    for v in 0..g.n() {
        let deg = x.degree(g, v);
        if deg > b.get(v) {
            return Err(Violation::CapacityExceeded {
                vertex: v,
                degree: deg,
                cap: b.get(v),
            });
        }
    }
    Ok(x.norm1())
}

/// Truncate each capacity to the sum of its neighbors' capacities.
///
/// Any b-matching has `deg_x(v) <= sum_{u in N(v)} b_u` already (each
/// incident weight is capped by the far endpoint), so the feasible set is
/// unchanged; this just bounds kernel expansion sizes.
pub fn truncate_capacities(g: &Graph, b: &CapacityMap) -> CapacityMap {
    let mut out = Vec::with_capacity(g.n());
    for v in 0..g.n() {
        let around: i64 = g
            .adjacency(v)
            .iter()
            .map(|&(u, _)| b.get(u))
            .fold(0i64, |acc, c| acc.saturating_add(c));
        out.push(b.get(v).min(around));
    }
    CapacityMap::new(out).expect("truncation cannot increase totals")
}
