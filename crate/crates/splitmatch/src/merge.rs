//! Merging two side solutions across a split (the node-capacitated star
//! flow). Marker-incident weights on both sides become capacities, the
//! shared edge is merged through the weight store, and a greedy pass
//! saturates frontier pairs in ascending vertex order. When one marker
//! is pendant its single (shared) edge is zeroed and the max-merge keeps
//! the other side's weights in place, in constant time.

use std::collections::HashMap;

use crate::decomp::{SideGraph, Split};
use crate::error::{Error, Result};
use crate::graph::{BMatching, Graph};
use crate::store::{CellId, WeightStore};

/// Outcome of one merge.
#[derive(Debug, Clone)]
pub struct MergeResult {
    pub x: BMatching,
    /// Marker degree moved across the split.
    pub d: i64,
    /// Greedy work units (frontier scans plus assignments).
    pub work: usize,
}

/// Row sets describing one split for the replay: frontier vertex, edge
/// id to the opposite marker, and the weight cell in that side context.
pub(crate) struct MergeRows<'a> {
    pub rows_a: &'a [(usize, usize, CellId)],
    pub rows_b: &'a [(usize, usize, CellId)],
    pub cross: &'a [((usize, usize), (usize, CellId))],
    /// Position of side A's marker (a B-frontier vertex id).
    pub marker_a_gid: usize,
    /// Position of side B's marker.
    pub marker_b_gid: usize,
    pub parent_cell: CellId,
    pub cell_a: CellId,
    pub cell_b: CellId,
}

/// Generic merge: collect capacities, merge the shared cell, greedily
/// saturate frontier pairs. Returns (d, work).
pub(crate) fn merge_generic(
    store: &mut WeightStore,
    rows: &MergeRows<'_>,
    expected_d: Option<i64>,
) -> Result<(i64, usize)> {
    let mut caps_a: Vec<(usize, i64)> = Vec::with_capacity(rows.rows_a.len());
    let mut caps_b: Vec<(usize, i64)> = Vec::with_capacity(rows.rows_b.len());
    let mut sum_a = 0i64;
    let mut sum_b = 0i64;
    for &(v, _, cell) in rows.rows_a {
        let w = store.read(cell);
        store.write(cell, 0);
        sum_a += w;
        caps_a.push((v, w));
    }
    for &(v, _, cell) in rows.rows_b {
        let w = store.read(cell);
        store.write(cell, 0);
        sum_b += w;
        caps_b.push((v, w));
    }
    if sum_a != sum_b {
        return Err(Error::MarkerDegree(format!(
            "side A moves {sum_a}, side B moves {sum_b}"
        )));
    }
    if let Some(exp) = expected_d {
        if sum_a != exp {
            return Err(Error::MarkerDegree(format!(
                "markers carry {sum_a}, solver imposed {exp}"
            )));
        }
    }
    store.merge(rows.cell_a, rows.cell_b)?;

    let cell_a_of: HashMap<usize, CellId> = rows.rows_a.iter().map(|&(v, _, c)| (v, c)).collect();
    let cell_b_of: HashMap<usize, CellId> = rows.rows_b.iter().map(|&(v, _, c)| (v, c)).collect();
    let cross_of: HashMap<(usize, usize), CellId> =
        rows.cross.iter().map(|&(k, (_, c))| (k, c)).collect();

    let mut work = rows.rows_a.len() + rows.rows_b.len();
    let (mut i, mut j) = (0usize, 0usize);
    let mut moved = 0i64;
    while i < caps_a.len() && j < caps_b.len() {
        if caps_a[i].1 == 0 {
            i += 1;
            continue;
        }
        if caps_b[j].1 == 0 {
            j += 1;
            continue;
        }
        let (va, ca) = caps_a[i];
        let (vb, cb) = caps_b[j];
        let take = ca.min(cb);
        let cell = if va == rows.marker_b_gid && vb == rows.marker_a_gid {
            rows.parent_cell
        } else if vb == rows.marker_a_gid {
            cell_a_of[&va]
        } else if va == rows.marker_b_gid {
            cell_b_of[&vb]
        } else {
            *cross_of.get(&(va, vb)).ok_or_else(|| {
                Error::Internal(format!("no recorded cross cell for ({va}, {vb})"))
            })?
        };
        store.write(cell, take);
        caps_a[i].1 -= take;
        caps_b[j].1 -= take;
        moved += take;
        work += 1;
    }
    debug_assert_eq!(moved, sum_a);
    debug_assert!(caps_a.iter().all(|&(_, c)| c == 0));
    debug_assert!(caps_b.iter().all(|&(_, c)| c == 0));
    Ok((sum_a, work))
}

/// Pendant merge: zero the pendant side's copy of the shared edge; the
/// max-merge then keeps the other side's weights where they already are.
pub(crate) fn merge_pendant(
    store: &mut WeightStore,
    cell_a: CellId,
    cell_b: CellId,
    zero_a: bool,
    expected_d: Option<i64>,
) -> Result<(i64, usize)> {
    let zcell = if zero_a { cell_a } else { cell_b };
    let d = store.read(zcell);
    store.write(zcell, 0);
    if let Some(exp) = expected_d {
        if d != exp {
            return Err(Error::MarkerDegree(format!(
                "pendant marker carries {d}, solver imposed {exp}"
            )));
        }
    }
    store.merge(cell_a, cell_b)?;
    Ok((d, 1))
}

/// Merge two side solutions of a split into a solution on the whole
/// graph. Side solutions must have equal marker degrees.
pub fn merge_across_split(
    g: &Graph,
    split: &Split,
    side_u: &SideGraph,
    x_u: &BMatching,
    side_w: &SideGraph,
    x_w: &BMatching,
) -> Result<MergeResult> {
    let d_u = x_u.degree(&side_u.graph, side_u.marker);
    let d_w = x_w.degree(&side_w.graph, side_w.marker);
    if d_u != d_w {
        return Err(Error::MarkerDegree(format!(
            "deg(w) = {d_u} on side U, deg(u) = {d_w} on side W"
        )));
    }
    let u_marker_gid = split.frontier_c[0];
    let w_marker_gid = split.frontier_d[0];
    let shared_eid = g
        .edge_id(u_marker_gid, w_marker_gid)
        .ok_or_else(|| Error::Internal("frontier pair is not an edge".into()))?;

    let mut store = WeightStore::new(g.m());
    let views = store.split(store.edge_cell(shared_eid))?;
    let (cell_a, cell_b) = (views.u_view, views.w_view);

    // Side U is context A (its marker stands for W), side W is B.
    let mut load = |side: &SideGraph, x: &BMatching, own_cell: CellId| {
        for eid_local in 0..side.graph.m() {
            let w = x.get(eid_local);
            if w == 0 {
                continue;
            }
            let (a, b) = side.graph.endpoints(eid_local);
            let eid = g
                .edge_id(side.to_parent[a], side.to_parent[b])
                .expect("side edges are parent edges");
            let cell = if eid == shared_eid {
                own_cell
            } else {
                store.edge_cell(eid)
            };
            store.write(cell, w);
        }
    };
    load(side_u, x_u, cell_a);
    load(side_w, x_w, cell_b);

    let rows_a: Vec<(usize, usize, CellId)> = split
        .frontier_c
        .iter()
        .map(|&c| {
            let eid = g.edge_id(c, w_marker_gid).unwrap();
            let cell = if eid == shared_eid {
                cell_a
            } else {
                store.edge_cell(eid)
            };
            (c, eid, cell)
        })
        .collect();
    let rows_b: Vec<(usize, usize, CellId)> = split
        .frontier_d
        .iter()
        .map(|&dv| {
            let eid = g.edge_id(u_marker_gid, dv).unwrap();
            let cell = if eid == shared_eid {
                cell_b
            } else {
                store.edge_cell(eid)
            };
            (dv, eid, cell)
        })
        .collect();
    let cross: Vec<((usize, usize), (usize, CellId))> = split
        .frontier_c
        .iter()
        .filter(|&&c| c != u_marker_gid)
        .flat_map(|&c| {
            split
                .frontier_d
                .iter()
                .filter(|&&dv| dv != w_marker_gid)
                .map(move |&dv| (c, dv))
        })
        .map(|(c, dv)| {
            let eid = g.edge_id(c, dv).unwrap();
            ((c, dv), (eid, store.edge_cell(eid)))
        })
        .collect();

    let rows = MergeRows {
        rows_a: &rows_a,
        rows_b: &rows_b,
        cross: &cross,
        marker_a_gid: w_marker_gid,
        marker_b_gid: u_marker_gid,
        parent_cell: store.edge_cell(shared_eid),
        cell_a,
        cell_b,
    };
    let (d, work) = merge_generic(&mut store, &rows, Some(d_u))?;
    let x = BMatching::from_weights(store.snapshot()?);
    debug_assert_eq!(x.norm1(), x_u.norm1() + x_w.norm1() - d);
    Ok(MergeResult { x, d, work })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{apply_simple_decomposition, find_split};
    use crate::graph::{validate_bmatching, CapacityMap};

    #[test]
    fn p4_merge_cardinality_two() {
        let g = Graph::build(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let split = Split {
            u_side: vec![0, 1],
            w_side: vec![2, 3],
            frontier_c: vec![1],
            frontier_d: vec![2],
        };
        let (su, sw) = apply_simple_decomposition(&g, &split);
        // x^U on 0-1-w: take edge {0,1}; x^W on u-2-3: take edge {2,3}.
        let mut xu = BMatching::zero(su.graph.m());
        let e01 = su.graph.edge_id(0, 1).unwrap();
        xu.set(e01, 1);
        let mut xw = BMatching::zero(sw.graph.m());
        let l2 = sw.to_parent.iter().position(|&v| v == 2).unwrap();
        let l3 = sw.to_parent.iter().position(|&v| v == 3).unwrap();
        xw.set(sw.graph.edge_id(l2, l3).unwrap(), 1);
        let r = merge_across_split(&g, &split, &su, &xu, &sw, &xw).unwrap();
        assert_eq!(r.d, 0);
        assert_eq!(r.x.norm1(), 2);
        let b = CapacityMap::uniform(4, 1);
        assert!(validate_bmatching(&g, &b, &r.x).is_ok());
    }

    #[test]
    fn degree_mismatch_rejected() {
        let g = Graph::build(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let split = Split {
            u_side: vec![0, 1],
            w_side: vec![2, 3],
            frontier_c: vec![1],
            frontier_d: vec![2],
        };
        let (su, sw) = apply_simple_decomposition(&g, &split);
        let mut xu = BMatching::zero(su.graph.m());
        // weight on the marker edge {1, w}
        let lw = su.marker;
        let l1 = su.to_parent.iter().position(|&v| v == 1).unwrap();
        xu.set(su.graph.edge_id(l1, lw).unwrap(), 1);
        let xw = BMatching::zero(sw.graph.m());
        assert!(matches!(
            merge_across_split(&g, &split, &su, &xu, &sw, &xw),
            Err(Error::MarkerDegree(_))
        ));
    }

    /// C = {a, bb} with caps (1,1), D = {p, q} with caps (2, 0): the
    /// ascending greedy sends both units to p.
    #[test]
    fn greedy_trace_matches_contract() {
        // K2,2 join between {0,1} and {2,3}: a complete bipartite graph
        // is one big split.
        let g = Graph::build(4, &[(0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        let split = find_split(&g).unwrap().unwrap();
        assert_eq!(split.frontier_c.len(), 2);
        let (su, sw) = apply_simple_decomposition(&g, &split);
        // Put 1 unit on each C-vertex's marker edge; 2 units on the
        // first D vertex's marker edge.
        let mut xu = BMatching::zero(su.graph.m());
        for (local, &gid) in su.to_parent.iter().enumerate() {
            if local != su.marker && split.frontier_c.contains(&gid) {
                xu.set(su.graph.edge_id(local, su.marker).unwrap(), 1);
            }
        }
        let mut xw = BMatching::zero(sw.graph.m());
        let dp = split.frontier_d[0];
        let lp = sw.to_parent.iter().position(|&v| v == dp).unwrap();
        xw.set(sw.graph.edge_id(lp, sw.marker).unwrap(), 2);
        let r = merge_across_split(&g, &split, &su, &xu, &sw, &xw).unwrap();
        assert_eq!(r.d, 2);
        assert_eq!(r.x.norm1(), 2);
        // All weight landed on real cross edges incident to p.
        let c0 = split.frontier_c[0];
        let c1 = split.frontier_c[1];
        assert_eq!(r.x.get(g.edge_id(c0, dp).unwrap()), 1);
        assert_eq!(r.x.get(g.edge_id(c1, dp).unwrap()), 1);
    }
}
