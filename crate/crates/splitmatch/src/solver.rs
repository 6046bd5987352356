//! The two-phase solver: bottom-up profile computation over the split
//! tree, then top-down reconstruction.
//!
//! Phase 1 walks components leaves-to-root. Each component is augmented
//! with gadget modules for its children, profiled against its parent
//! marker, and the subtree value accumulates as
//! μ(subtree) = μ(H) + Σ (μ(child subtree) − c2(child)).
//!
//! Phase 2 walks root-to-leaves: fix the parent marker's capacity to the
//! imposed demand, solve the augmented component with a maximum-cost
//! kernel (cost 2 on gadget-internal edges), normalize, contract modules
//! to read off child demands, and write the component weights into the
//! shared store. A final replay of all splits in reverse decomposition
//! order merges everything back into one matching of the input graph.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::decomp::{decompose_minimal, Component, SplitKind, VertKind};
use crate::error::{Error, Result};
use crate::gadget::{
    build_gadget_component, contract_module, normalize, AugmentedComponent, ComponentView,
};
use crate::graph::{validate_bmatching, BMatching, CapacityMap, Graph};
use crate::kernel::{solve_bmatching_kernel, solve_maxcost_bmatching_kernel, KernelBudget};
use crate::merge::{merge_generic, merge_pendant, MergeRows};
use crate::profile::{compute_profile, mu_from_profile, MuProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Decomposition for n >= small_cutoff, whole-graph kernel below.
    Auto,
    /// Whole-graph kernel (oracle mode).
    Kernel,
    /// Force the decomposition path.
    SplitDp,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub mode: SolveMode,
    pub budget: KernelBudget,
    /// Auto mode sends graphs below this order straight to the kernel.
    pub small_cutoff: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            mode: SolveMode::Auto,
            budget: KernelBudget::default(),
            small_cutoff: 4,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SolveStats {
    pub n: usize,
    pub m: usize,
    pub mode: String,
    pub connected_components: usize,
    pub split_components: usize,
    pub split_width: usize,
    pub phase1_kernel_calls: usize,
    pub phase2_kernel_calls: usize,
    pub merge_count: usize,
    pub merge_work: usize,
    pub decomp_ms: f64,
    pub phase1_ms: f64,
    pub phase2_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub cardinality: i64,
    pub matching: BMatching,
    pub stats: SolveStats,
}

pub fn solve_bmatching(g: &Graph, b: &CapacityMap) -> Result<SolveResult> {
    solve_bmatching_with(g, b, &SolveConfig::default())
}

pub fn solve_maximum_matching(g: &Graph) -> Result<SolveResult> {
    solve_bmatching_with(g, &CapacityMap::uniform(g.n(), 1), &SolveConfig::default())
}

pub fn solve_maximum_matching_with(g: &Graph, cfg: &SolveConfig) -> Result<SolveResult> {
    solve_bmatching_with(g, &CapacityMap::uniform(g.n(), 1), cfg)
}

pub fn solve_bmatching_with(g: &Graph, b: &CapacityMap, cfg: &SolveConfig) -> Result<SolveResult> {
    if b.len() != g.n() {
        return Err(Error::Internal("capacity map size mismatch".into()));
    }
    let t_start = Instant::now();
    let ccs = g.connected_components();
    let mut stats = SolveStats {
        n: g.n(),
        m: g.m(),
        connected_components: ccs.len(),
        ..SolveStats::default()
    };
    let mut matching = BMatching::zero(g.m());
    let mut modes_seen: Vec<&'static str> = Vec::new();

    for cc in &ccs {
        if cc.len() == 1 {
            continue;
        }
        let (sub, to_parent) = g.induced(cc);
        let sub_b =
            CapacityMap::new(cc.iter().map(|&v| b.get(v)).collect()).expect("subset of valid caps");
        let use_kernel = match cfg.mode {
            SolveMode::Kernel => true,
            SolveMode::SplitDp => false,
            SolveMode::Auto => sub.n() < cfg.small_cutoff,
        };
        let piece = if use_kernel {
            modes_seen.push("kernel");
            solve_connected_kernel(&sub, &sub_b, cfg, &mut stats)?
        } else {
            modes_seen.push("splitdp");
            solve_connected_splitdp(&sub, &sub_b, cfg, &mut stats)?
        };
        for eid in 0..sub.m() {
            let w = piece.get(eid);
            if w != 0 {
                let (a, bb) = sub.endpoints(eid);
                let parent_eid = g.edge_id(to_parent[a], to_parent[bb]).unwrap();
                matching.set(parent_eid, w);
            }
        }
    }

    modes_seen.dedup();
    stats.mode = match modes_seen.as_slice() {
        [] => "trivial".into(),
        [one] => (*one).into(),
        _ => "mixed".into(),
    };
    let cardinality = validate_bmatching(g, b, &matching)
        .map_err(|v| Error::Internal(format!("solver produced invalid matching: {v}")))?;
    stats.total_ms = ms_since(t_start);
    Ok(SolveResult {
        cardinality,
        matching,
        stats,
    })
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn solve_connected_kernel(
    g: &Graph,
    b: &CapacityMap,
    cfg: &SolveConfig,
    stats: &mut SolveStats,
) -> Result<BMatching> {
    let t = Instant::now();
    let r = solve_bmatching_kernel(g, b, &cfg.budget)?;
    stats.phase2_kernel_calls += 1;
    stats.phase2_ms += ms_since(t);
    Ok(r.x)
}

/// Per-component state carried from phase 1 into phase 2.
struct CompState {
    aug: AugmentedComponent,
    /// Profile of the augmented component w.r.t. its parent marker.
    h_profile: MuProfile,
}

fn comp_graph(comp: &Component) -> Graph {
    let pairs: Vec<(usize, usize)> = comp.edges.iter().map(|e| (e.a, e.b)).collect();
    Graph::build(comp.order(), &pairs).expect("component is a simple graph")
}

fn solve_connected_splitdp(
    g: &Graph,
    b: &CapacityMap,
    cfg: &SolveConfig,
    stats: &mut SolveStats,
) -> Result<BMatching> {
    let t_decomp = Instant::now();
    let mut tree = decompose_minimal(g)?;
    stats.decomp_ms += ms_since(t_decomp);
    stats.split_components += tree.components.len();
    stats.split_width = stats.split_width.max(tree.width());

    if tree.components.len() <= 1 {
        return solve_connected_kernel(g, b, cfg, stats);
    }
    let rooted = tree.rooted();

    // Phase 1: profiles, leaves to root.
    let t1 = Instant::now();
    let ne = tree.tree_edges.len();
    let mut edge_profile: Vec<Option<MuProfile>> = vec![None; ne];
    let mut comp_state: Vec<Option<CompState>> = (0..tree.components.len()).map(|_| None).collect();
    let mut mu_root: i64 = 0;
    for &ci in rooted.order.iter().rev() {
        let comp = &tree.components[ci];
        let local_graph = comp_graph(comp);
        let marker_local_of = |ei: usize| -> usize {
            let e = &tree.tree_edges[ei];
            if e.comp_a == ci {
                e.local_a
            } else {
                e.local_b
            }
        };
        let mut child_markers = Vec::new();
        let mut acc = 0i64;
        for &ei in &rooted.children[ci] {
            let p = edge_profile[ei]
                .ok_or_else(|| Error::Internal("child profile missing in phase 1".into()))?;
            child_markers.push((marker_local_of(ei), p));
            acc += p.mu0 - p.c2;
        }
        let parent_marker = if ci == tree.root {
            None
        } else {
            Some(marker_local_of(rooted.parent_edge[ci]))
        };
        let caps = CapacityMap::new(
            comp.verts
                .iter()
                .map(|v| match v.kind {
                    VertKind::Original => b.get(v.gid),
                    VertKind::Marker { .. } => 0,
                })
                .collect(),
        )?;
        let view = ComponentView {
            graph: local_graph,
            caps,
            child_markers,
            parent_marker,
        };
        let aug = build_gadget_component(&view)?;
        if aug.host.n() > 3 * comp.order() {
            return Err(Error::Internal(format!(
                "augmented component too large: {} > 3*{}",
                aug.host.n(),
                comp.order()
            )));
        }
        let out = compute_profile(&aug.host, &aug.caps, aug.w_host, &cfg.budget)?;
        stats.phase1_kernel_calls += out.kernel_calls;
        let subtree_mu0 = out.profile.mu0 + acc;
        if ci == tree.root {
            mu_root = subtree_mu0;
        } else {
            edge_profile[rooted.parent_edge[ci]] = Some(MuProfile {
                mu0: subtree_mu0,
                c1: out.profile.c1,
                c2: out.profile.c2,
            });
        }
        comp_state[ci] = Some(CompState {
            aug,
            h_profile: out.profile,
        });
    }
    stats.phase1_ms += ms_since(t1);

    // Phase 2: demands and component solutions, root to leaves.
    let t2 = Instant::now();
    let mut demands: Vec<i64> = vec![0; ne];
    for &ci in &rooted.order {
        let state = comp_state[ci].as_ref().unwrap();
        let aug = &state.aug;
        let demand = if ci == tree.root {
            0
        } else {
            demands[rooted.parent_edge[ci]]
        };
        let mut caps = aug.caps.clone();
        caps.set(aug.w_host, demand);
        let costs = aug.normalization_costs();
        let r = solve_maxcost_bmatching_kernel(&aug.host, &caps, &costs, &cfg.budget)?;
        stats.phase2_kernel_calls += 1;
        // Local optimality and demand saturation, exactly as the profile
        // predicts.
        let predicted = mu_from_profile(&state.h_profile, demand);
        if r.cardinality != predicted {
            return Err(Error::Internal(format!(
                "component {ci}: kernel found {} but profile predicts {predicted}",
                r.cardinality
            )));
        }
        if r.x.degree(&aug.host, aug.w_host) != demand {
            return Err(Error::Internal(format!(
                "component {ci}: parent marker not saturated at {demand}"
            )));
        }
        let mut x = r.x;
        let pre_card = x.norm1();
        let pre_cost: i64 = (0..aug.host.m()).map(|e| costs.get(e) * x.get(e)).sum();
        let report = normalize(aug, &mut x)?;
        let post_cost: i64 = (0..aug.host.m()).map(|e| costs.get(e) * x.get(e)).sum();
        if x.norm1() != pre_card || post_cost != pre_cost {
            return Err(Error::Internal(
                "normalization changed cardinality or cost".into(),
            ));
        }
        if report.max_passes() > 1 || report.rule3_applications > 0 {
            return Err(Error::Internal(
                "normalization needed more than one corrective pass".into(),
            ));
        }
        // Child demands.
        let comp = &tree.components[ci];
        let mut module_of_local: HashMap<usize, usize> = HashMap::new();
        for (mi, m) in aug.modules.iter().enumerate() {
            module_of_local.insert(m.marker_local, mi);
        }
        for &ei in &rooted.children[ci] {
            let e = &tree.tree_edges[ei];
            let marker_local = if e.comp_a == ci { e.local_a } else { e.local_b };
            let mi = module_of_local[&marker_local];
            let con = contract_module(aug, &x, mi)?;
            demands[ei] = con.child_demand;
        }
        // Fold module members back onto component edges and commit the
        // weights to the shared store.
        let members = |local: usize| -> Vec<usize> {
            match module_of_local.get(&local) {
                Some(&mi) => {
                    let m = &aug.modules[mi];
                    vec![m.u1, m.u2, m.u3]
                }
                None => vec![local],
            }
        };
        for ce in &comp.edges {
            let mut w = 0i64;
            for &x1 in &members(ce.a) {
                for &y1 in &members(ce.b) {
                    if let Some(he) = aug.host.edge_id(x1, y1) {
                        w += x.get(he);
                    }
                }
            }
            if w != 0 {
                tree.store.write(ce.cell, w);
            }
        }
    }
    stats.phase2_ms += ms_since(t2);

    // Merge replay in reverse decomposition order.
    let t3 = Instant::now();
    for ei in (0..ne).rev() {
        let e = &tree.tree_edges[ei];
        let expected = Some(demands[ei]);
        let (_, work) = match &e.kind {
            SplitKind::Pendant { zero_a } => {
                merge_pendant(&mut tree.store, e.cell_a, e.cell_b, *zero_a, expected)?
            }
            SplitKind::Generic {
                rows_a,
                rows_b,
                cross,
            } => {
                let rows = MergeRows {
                    rows_a,
                    rows_b,
                    cross,
                    marker_a_gid: e.marker_a_gid,
                    marker_b_gid: e.marker_b_gid,
                    parent_cell: e.parent_cell,
                    cell_a: e.cell_a,
                    cell_b: e.cell_b,
                };
                merge_generic(&mut tree.store, &rows, expected)?
            }
        };
        stats.merge_count += 1;
        stats.merge_work += work;
    }
    stats.phase2_ms += ms_since(t3);

    let x = BMatching::from_weights(tree.store.snapshot()?);
    let card = validate_bmatching(g, b, &x)
        .map_err(|v| Error::Internal(format!("split solver produced invalid matching: {v}")))?;
    if card != mu_root {
        return Err(Error::Internal(format!(
            "phase 2 produced {card} but phase 1 computed {mu_root}"
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;

    fn cycle(n: usize) -> Graph {
        Graph::build(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>()).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j));
            }
        }
        Graph::build(n, &pairs).unwrap()
    }

    #[test]
    fn p4_unit_caps() {
        let g = Graph::build(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let r = solve_maximum_matching(&g).unwrap();
        assert_eq!(r.cardinality, 2);
        assert_eq!(r.stats.mode, "splitdp");
    }

    #[test]
    fn c5_prime_goes_to_kernel() {
        let r = solve_maximum_matching(&cycle(5)).unwrap();
        assert_eq!(r.cardinality, 2);
    }

    #[test]
    fn k4_capacity_two() {
        let g = complete(4);
        let b = CapacityMap::uniform(4, 2);
        let r = solve_bmatching(&g, &b).unwrap();
        assert_eq!(r.cardinality, 4);
        assert_eq!(testkit::oracle_bmatching(&g, &b).unwrap().cardinality, 4);
    }

    #[test]
    fn star_k15_matches_one() {
        let g = Graph::build(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]).unwrap();
        let r = solve_maximum_matching(&g).unwrap();
        assert_eq!(r.cardinality, 1);
    }

    #[test]
    fn disconnected_sums_components() {
        let g = Graph::build(9, &[(0, 1), (1, 2), (3, 4), (4, 5), (5, 6), (6, 3)]).unwrap();
        let r = solve_maximum_matching(&g).unwrap();
        assert_eq!(r.cardinality, 1 + 2);
        assert_eq!(r.stats.connected_components, 4);
    }

    #[test]
    fn splitdp_matches_oracle_randomized() {
        let cfg = SolveConfig {
            mode: SolveMode::SplitDp,
            ..SolveConfig::default()
        };
        for seed in 0..120u64 {
            let n = 4 + (seed as usize % 7);
            let g = testkit::gen_connected(n, n / 2 + 2, seed * 31 + 1);
            let b = testkit::gen_caps(n, 3, seed * 17 + 5);
            let want = testkit::oracle_bmatching(&g, &b).unwrap().cardinality;
            let got = solve_bmatching_with(&g, &b, &cfg).unwrap();
            assert_eq!(got.cardinality, want, "seed {seed} n {n}");
        }
    }

    #[test]
    fn dh_matches_kernel_medium() {
        for seed in [3u64, 9, 27] {
            let g = testkit::gen_distance_hereditary(120, seed);
            let split = solve_maximum_matching(&g).unwrap();
            let kern = crate::kernel::max_matching(&g);
            assert_eq!(split.cardinality, kern.cardinality, "seed {seed}");
        }
    }

    #[test]
    fn oversized_capacities_fail_cleanly() {
        // A capacity spike beyond the expansion budget must surface as
        // a kernel-budget error, never a wrong answer.
        let g = Graph::build(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let mut b = CapacityMap::uniform(4, 200_000);
        b.set(0, 200_000);
        let err = solve_bmatching(&g, &b).unwrap_err();
        assert!(matches!(err, crate::error::Error::KernelBudget(_)), "{err}");
    }

    #[test]
    fn modes_agree() {
        let g = testkit::gen_distance_hereditary(40, 5);
        let b = testkit::gen_caps(40, 2, 77);
        let kernel = solve_bmatching_with(
            &g,
            &b,
            &SolveConfig {
                mode: SolveMode::Kernel,
                ..SolveConfig::default()
            },
        )
        .unwrap();
        let dp = solve_bmatching_with(
            &g,
            &b,
            &SolveConfig {
                mode: SolveMode::SplitDp,
                ..SolveConfig::default()
            },
        )
        .unwrap();
        assert_eq!(kernel.cardinality, dp.cardinality);
    }
}
