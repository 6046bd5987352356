//! Property tests: every module invariant from the contract, driven by
//! seeded random instances plus proptest for the purely structural laws.

use proptest::prelude::*;

use splitmatch::decomp::{
    apply_simple_decomposition, decompose_minimal, find_split, split_width, verify_decomposition,
    verify_split,
};
use splitmatch::gadget::{build_gadget_component, contract_module, normalize, ComponentView};
use splitmatch::graph::{truncate_capacities, validate_bmatching, BMatching, CapacityMap, Graph};
use splitmatch::kernel::{
    max_matching, solve_bmatching_kernel, solve_maxcost_bmatching_kernel, CostMap, KernelBudget,
};
use splitmatch::profile::{compute_profile, mu_from_profile};
use splitmatch::solver::{solve_bmatching_with, SolveConfig, SolveMode};
use splitmatch::store::WeightStore;
use splitmatch::testkit::{
    gen_bounded_splitwidth, gen_caps, gen_connected, gen_distance_hereditary, oracle_bmatching,
    oracle_via_expansion, sweep_mu,
};

fn budget() -> KernelBudget {
    KernelBudget::default()
}

proptest! {
    #[test]
    fn adjacency_sums_to_twice_m(seed in 0u64..5000, n in 2usize..12) {
        let g = gen_connected(n, n, seed);
        let total: usize = (0..g.n()).map(|v| g.degree(v)).sum();
        prop_assert_eq!(total, 2 * g.m());
    }

    #[test]
    fn truncation_is_idempotent(seed in 0u64..5000, n in 2usize..12, cap in 0i64..50) {
        let g = gen_connected(n, n / 2, seed);
        let b = gen_caps(n, cap.max(1), seed ^ 0x77);
        let once = truncate_capacities(&g, &b);
        let twice = truncate_capacities(&g, &once);
        prop_assert_eq!(once.values(), twice.values());
    }

    #[test]
    fn store_round_trip_preserves_weights(ws in proptest::collection::vec(0i64..100, 1..12)) {
        let mut s = WeightStore::new(ws.len());
        for (e, &w) in ws.iter().enumerate() {
            s.write(s.edge_cell(e), w);
        }
        let views = s.split(s.edge_cell(0)).unwrap();
        s.merge(views.u_view, views.w_view).unwrap();
        prop_assert_eq!(s.snapshot().unwrap(), ws);
    }
}

#[test]
fn truncation_preserves_oracle_cardinality() {
    let mut checked = 0;
    for seed in 0..260u64 {
        let n = 2 + (seed as usize % 9);
        let g = gen_connected(n, n / 2 + 1, seed * 3 + 1);
        let b = gen_caps(n, 3, seed * 5 + 2);
        let t = truncate_capacities(&g, &b);
        let a = oracle_bmatching(&g, &b).unwrap().cardinality;
        let c = oracle_bmatching(&g, &t).unwrap().cardinality;
        assert_eq!(a, c, "seed {seed}");
        checked += 1;
    }
    assert!(checked >= 200);
}

#[test]
fn find_split_agrees_with_exhaustive_enumeration() {
    fn has_split_exhaustive(g: &Graph) -> bool {
        let n = g.n();
        for mask in 1u32..(1u32 << n) - 1 {
            let side: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            if side.len() >= 2 && n - side.len() >= 2 && verify_split(g, &side).is_some() {
                return true;
            }
        }
        false
    }
    let mut checked = 0;
    for seed in 0..520u64 {
        let n = 4 + (seed as usize % 7);
        let g = gen_connected(n, (seed as usize % 8) + 1, seed * 7 + 3);
        let found = find_split(&g).unwrap();
        if let Some(ref s) = found {
            assert!(verify_split(&g, &s.u_side).is_some(), "seed {seed}");
        }
        assert_eq!(found.is_some(), has_split_exhaustive(&g), "seed {seed}");
        checked += 1;
    }
    assert!(checked >= 500);
}

#[test]
fn decompositions_always_verify() {
    for seed in 0..150u64 {
        let n = 4 + (seed as usize % 9);
        let g = gen_connected(n, (seed as usize % 10) + 1, seed * 11 + 5);
        let tree = decompose_minimal(&g).unwrap();
        verify_decomposition(&g, &tree).unwrap();
        // Minimality: order-4+ components are prime.
        for comp in &tree.components {
            if comp.order() >= 4 {
                let pairs: Vec<(usize, usize)> = comp.edges.iter().map(|e| (e.a, e.b)).collect();
                let cg = Graph::build(comp.order(), &pairs).unwrap();
                assert!(find_split(&cg).unwrap().is_none());
            }
        }
    }
}

#[test]
fn dh_decompositions_are_all_triangles_and_paths() {
    for seed in 0..25u64 {
        let g = gen_distance_hereditary(60, seed);
        let tree = decompose_minimal(&g).unwrap();
        assert!(tree.components.iter().all(|c| c.order() <= 3));
        assert_eq!(split_width(&g).unwrap(), 2);
    }
}

#[test]
fn bounded_width_generator_respects_k() {
    for (k, seed) in [(3usize, 1u64), (4, 2), (5, 3), (5, 9), (6, 4), (8, 5)] {
        let g = gen_bounded_splitwidth(k, 40, seed);
        assert!(split_width(&g).unwrap() <= k, "k {k} seed {seed}");
    }
}

#[test]
fn kernel_matches_oracle_thousand_instances() {
    let mut checked = 0;
    for seed in 0..1040u64 {
        let n = 2 + (seed as usize % 7);
        let g = gen_connected(n, seed as usize % 9, seed * 13 + 7);
        let b = gen_caps(n, 3, seed * 3 + 11);
        let kr = solve_bmatching_kernel(&g, &b, &budget()).unwrap();
        let or = oracle_bmatching(&g, &b).unwrap();
        assert_eq!(kr.cardinality, or.cardinality, "seed {seed}");
        assert!(validate_bmatching(&g, &b, &kr.x).is_ok());
        checked += 1;
    }
    assert!(checked >= 1000);
}

/// All maximum-cardinality b-matchings by exhaustive weight enumeration;
/// returns (max cardinality, max cost among maximum-cardinality ones).
fn enumerate_best(g: &Graph, b: &CapacityMap, c: &CostMap) -> (i64, i64) {
    fn go(
        g: &Graph,
        c: &CostMap,
        eid: usize,
        caps: &mut Vec<i64>,
        card: i64,
        cost: i64,
        best: &mut (i64, i64),
    ) {
        if eid == g.m() {
            if card > best.0 || (card == best.0 && cost > best.1) {
                *best = (card, cost);
            }
            return;
        }
        let (u, v) = g.endpoints(eid);
        let maxx = caps[u].min(caps[v]);
        for x in 0..=maxx {
            caps[u] -= x;
            caps[v] -= x;
            go(g, c, eid + 1, caps, card + x, cost + c.get(eid) * x, best);
            caps[u] += x;
            caps[v] += x;
        }
    }
    let mut best = (-1, -1);
    let mut caps = b.values().to_vec();
    go(g, c, 0, &mut caps, 0, 0, &mut best);
    best
}

#[test]
fn maxcost_kernel_is_exact() {
    let mut checked = 0;
    for seed in 0..520u64 {
        let n = 2 + (seed as usize % 5); // n <= 6
        let g = gen_connected(n, seed as usize % 5, seed * 17 + 1);
        let b = gen_caps(n, 2, seed * 7 + 13);
        let mut costs = CostMap::uniform(g.m(), 1);
        for e in 0..g.m() {
            if (seed + e as u64) % 3 == 0 {
                costs.set(e, 2);
            }
        }
        let plain = solve_bmatching_kernel(&g, &b, &budget()).unwrap();
        let costed = solve_maxcost_bmatching_kernel(&g, &b, &costs, &budget()).unwrap();
        assert_eq!(plain.cardinality, costed.cardinality, "seed {seed}");
        let (best_card, best_cost) = enumerate_best(&g, &b, &costs);
        assert_eq!(costed.cardinality, best_card, "seed {seed}");
        assert_eq!(costed.cost, best_cost, "seed {seed}");
        assert!(validate_bmatching(&g, &b, &costed.x).is_ok());
        checked += 1;
    }
    assert!(checked >= 500);
}

/// Exhaustive alternating-path search: true if an augmenting path for
/// the 0/1 matching exists. Exact (tries all simple alternating paths).
fn has_augmenting_path(g: &Graph, x: &BMatching) -> bool {
    fn dfs(
        g: &Graph,
        x: &BMatching,
        v: usize,
        need_matched: bool,
        visited: &mut Vec<bool>,
        exposed: &[bool],
    ) -> bool {
        for &(u, eid) in g.adjacency(v) {
            if visited[u] {
                continue;
            }
            let matched_edge = x.get(eid) > 0;
            if matched_edge != need_matched {
                continue;
            }
            if !need_matched && exposed[u] {
                return true;
            }
            visited[u] = true;
            if dfs(g, x, u, !need_matched, visited, exposed) {
                visited[u] = false;
                return true;
            }
            visited[u] = false;
        }
        false
    }
    let exposed: Vec<bool> = (0..g.n()).map(|v| x.degree(g, v) == 0).collect();
    for s in 0..g.n() {
        if !exposed[s] {
            continue;
        }
        let mut visited = vec![false; g.n()];
        visited[s] = true;
        if dfs(g, x, s, false, &mut visited, &exposed) {
            return true;
        }
    }
    false
}

#[test]
fn blossom_leaves_no_augmenting_path() {
    for seed in 0..200u64 {
        let n = 3 + (seed as usize % 8);
        let g = gen_connected(n, seed as usize % 10, seed * 19 + 3);
        let r = max_matching(&g);
        assert!(!has_augmenting_path(&g, &r.x), "seed {seed}");
    }
}

#[test]
fn mu_profile_laws_and_faithfulness() {
    for seed in 0..120u64 {
        let n = 2 + (seed as usize % 6); // n <= 7
        let g = gen_connected(n, seed as usize % 6, seed * 23 + 9);
        let b = gen_caps(n, 3, seed * 29 + 4);
        let w = (seed as usize * 7) % n;
        let t_max = b.norm1() + 2;
        let sweep = sweep_mu(&g, &b, w, t_max).unwrap();
        for t in 0..sweep.len() - 1 {
            let delta = sweep[t + 1] - sweep[t];
            assert!((0..=1).contains(&delta), "gap law, seed {seed}");
        }
        for t in 0..sweep.len().saturating_sub(2) {
            if sweep[t + 2] == sweep[t] {
                assert!(
                    sweep[t..].iter().all(|&v| v == sweep[t]),
                    "plateau law, seed {seed}"
                );
            }
        }
        for t in 0..sweep.len().saturating_sub(3) {
            if sweep[t + 1] == sweep[t] {
                assert_eq!(sweep[t + 3], sweep[t + 2], "odd-step law, seed {seed}");
            }
        }
        let out = compute_profile(&g, &b, w, &budget()).unwrap();
        for (t, &mu) in sweep.iter().enumerate() {
            assert_eq!(
                mu_from_profile(&out.profile, t as i64),
                mu,
                "profile faithfulness, seed {seed} t {t}"
            );
        }
        // Instrumented call-count bound.
        let s: i64 = g.adjacency(w).iter().map(|&(u, _)| b.get(u)).sum();
        let bound = 4 * (64 - (s + 2).leading_zeros() as usize) + 8;
        assert!(out.kernel_calls <= bound, "call bound, seed {seed}");
    }
}

#[test]
fn gadget_normalize_and_contract_properties() {
    let mut done = 0;
    for seed in 0..400u64 {
        let n = 2 + (seed as usize % 4);
        let g = gen_connected(n, seed as usize % 4, seed * 31 + 17);
        let mut child_markers = Vec::new();
        for v in 0..n {
            if (seed >> v) & 1 == 1 && child_markers.len() < 2 {
                child_markers.push((
                    v,
                    splitmatch::profile::MuProfile {
                        mu0: 0,
                        c1: ((seed / 3) % 3) as i64,
                        c2: ((seed / 7) % 3) as i64,
                    },
                ));
            }
        }
        if child_markers.is_empty() {
            continue;
        }
        let caps = gen_caps(n, 2, seed * 37 + 23);
        let view = ComponentView {
            graph: g,
            caps,
            child_markers,
            parent_marker: None,
        };
        let aug = build_gadget_component(&view).unwrap();
        let costs = aug.normalization_costs();
        let r = solve_maxcost_bmatching_kernel(&aug.host, &aug.caps, &costs, &budget()).unwrap();
        let mut x = r.x;
        let pre_cost: i64 = (0..aug.host.m()).map(|e| costs.get(e) * x.get(e)).sum();
        let report = normalize(&aug, &mut x).unwrap();
        let post_cost: i64 = (0..aug.host.m()).map(|e| costs.get(e) * x.get(e)).sum();
        assert_eq!(x.norm1(), r.cardinality, "seed {seed}");
        assert_eq!(pre_cost, post_cost, "seed {seed}");
        assert!(report.max_passes() <= 1, "seed {seed}");
        assert_eq!(report.rule3_applications, 0, "seed {seed}");
        for (mi, m) in aug.modules.iter().enumerate() {
            let d1 = x.degree(&aug.host, m.u1);
            let d2 = x.degree(&aug.host, m.u2);
            let d3 = x.degree(&aug.host, m.u3);
            assert_eq!(d2, d3, "symmetry, seed {seed}");
            if d1 < m.c1 {
                assert_eq!(d2, x.get(m.internal_eid), "saturation, seed {seed}");
            }
            let con = contract_module(&aug, &x, mi).unwrap();
            let c1p = d1;
            let c2p = d2 - x.get(m.internal_eid);
            assert_eq!(con.child_demand, c1p + 2 * c2p);
            assert!(c1p <= m.c1 && c2p <= m.c2, "shape, seed {seed}");
            if c2p > 0 {
                assert_eq!(c1p, m.c1, "shape, seed {seed}");
            }
            // Reconstruction identity against the child profile.
            let child = splitmatch::profile::MuProfile {
                mu0: 0,
                c1: m.c1,
                c2: m.c2,
            };
            assert_eq!(
                mu_from_profile(&child, con.child_demand),
                c1p + c2p,
                "profile identity, seed {seed}"
            );
        }
        done += 1;
    }
    assert!(done >= 200, "only {done} gadget instances exercised");
}

#[test]
fn oracle_self_consistency_expansion_vs_enumeration() {
    for seed in 0..160u64 {
        let n = 2 + (seed as usize % 7); // n <= 8
        let g = gen_connected(n, seed as usize % 6, seed * 41 + 29);
        let b = gen_caps(n, 2, seed * 43 + 31);
        let dp = oracle_bmatching(&g, &b).unwrap();
        let ex = oracle_via_expansion(&g, &b).unwrap();
        assert_eq!(dp.cardinality, ex.cardinality, "seed {seed}");
        assert!(validate_bmatching(&g, &b, &dp.witness).is_ok());
        assert!(validate_bmatching(&g, &b, &ex.witness).is_ok());
    }
}

#[test]
fn splitdp_matches_kernel_on_bounded_width_family() {
    // Mid-size instances with genuine non-degenerate splits.
    for (k, n, seed) in [
        (4usize, 60usize, 1u64),
        (5, 90, 2),
        (6, 120, 3),
        (8, 150, 4),
        (5, 200, 5),
    ] {
        let g = gen_bounded_splitwidth(k, n, seed);
        let b = gen_caps(g.n(), 2, seed * 71 + 19);
        let dp = solve_bmatching_with(
            &g,
            &b,
            &SolveConfig {
                mode: SolveMode::SplitDp,
                ..SolveConfig::default()
            },
        )
        .unwrap();
        let kern = solve_bmatching_kernel(&g, &b, &budget()).unwrap();
        assert_eq!(dp.cardinality, kern.cardinality, "k {k} n {n} seed {seed}");
        assert!(validate_bmatching(&g, &b, &dp.matching).is_ok());
        assert!(dp.stats.split_width <= k);
    }
}

#[test]
fn solver_merge_work_stays_linear() {
    // Aggregate greedy merge work <= alpha * (n + m), alpha = 16.
    for seed in 0..40u64 {
        let g = gen_distance_hereditary(300, seed);
        let cfg = SolveConfig {
            mode: SolveMode::SplitDp,
            ..SolveConfig::default()
        };
        let b = CapacityMap::uniform(g.n(), 1);
        let r = solve_bmatching_with(&g, &b, &cfg).unwrap();
        assert!(
            r.stats.merge_work <= 16 * (g.n() + g.m()),
            "seed {seed}: work {} vs bound {}",
            r.stats.merge_work,
            16 * (g.n() + g.m())
        );
    }
}

#[test]
fn solver_kernel_call_budget() {
    // Phase-1 kernel calls <= beta * sc(G) * ceil(log2(||b||_1 + 2)),
    // beta = 12.
    for seed in 0..30u64 {
        let n = 6 + (seed as usize % 40);
        let g = gen_connected(n, n / 2, seed * 47 + 1);
        let b = gen_caps(n, 3, seed * 53 + 2);
        let cfg = SolveConfig {
            mode: SolveMode::SplitDp,
            ..SolveConfig::default()
        };
        let r = solve_bmatching_with(&g, &b, &cfg).unwrap();
        if r.stats.split_components == 0 {
            continue;
        }
        let log = 64 - (b.norm1() + 2).leading_zeros() as usize;
        assert!(
            r.stats.phase1_kernel_calls <= 12 * r.stats.split_components * log,
            "seed {seed}"
        );
    }
}

#[test]
fn reduction_identity_on_simple_decompositions() {
    // ||x|| = ||x^W|| + mu^U(0) - c2^U on random split graphs; the
    // full acceptance run does 200+, this is the quick version.
    let mut done = 0;
    for seed in 0..400u64 {
        if done >= 60 {
            break;
        }
        let n = 4 + (seed as usize % 5);
        let g = gen_connected(n, seed as usize % 4, seed * 59 + 3);
        let split = match find_split(&g).unwrap() {
            Some(s) => s,
            None => continue,
        };
        let b = gen_caps(n, 3, seed * 61 + 5);
        let (su, sw) = apply_simple_decomposition(&g, &split);
        let bu = CapacityMap::new(su.to_parent.iter().map(|&v| b.get(v)).collect()).unwrap();
        let pu = compute_profile(&su.graph, &bu, su.marker, &budget()).unwrap();
        let bw = CapacityMap::new(sw.to_parent.iter().map(|&v| b.get(v)).collect()).unwrap();
        let view = ComponentView {
            graph: sw.graph.clone(),
            caps: bw,
            child_markers: vec![(sw.marker, pu.profile)],
            parent_marker: None,
        };
        let aug = build_gadget_component(&view).unwrap();
        let xw = solve_bmatching_kernel(&aug.host, &aug.caps, &budget()).unwrap();
        let full = oracle_bmatching(&g, &b).unwrap();
        assert_eq!(
            full.cardinality,
            xw.cardinality + pu.profile.mu0 - pu.profile.c2,
            "seed {seed}"
        );
        done += 1;
    }
    assert!(done >= 50);
}
