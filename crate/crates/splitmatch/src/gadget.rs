//! Gadget modules: replace a child marker vertex by a three-vertex
//! module (u1 with capacity c1; adjacent u2, u3 with capacity c2 each)
//! joined to the marker's old neighborhood. The module encodes the
//! child subtree's μ-profile. `normalize` establishes the saturation and
//! symmetry properties on a maximum-cost solution; `contract_module`
//! folds a module back into its marker and reads off the child demand.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{BMatching, CapacityMap, Graph};
use crate::kernel::CostMap;
use crate::profile::MuProfile;

/// A component to augment: a small local graph whose child markers get
/// modules and whose optional parent marker stays a plain vertex.
#[derive(Debug, Clone)]
pub struct ComponentView {
    pub graph: Graph,
    /// Capacities for non-marker vertices (marker entries ignored).
    pub caps: CapacityMap,
    /// Local ids of child markers, each with the child's profile.
    pub child_markers: Vec<(usize, MuProfile)>,
    /// Local id of the parent marker; None adds an isolated dummy.
    pub parent_marker: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct GadgetModule {
    /// Local id of the replaced marker in the component.
    pub marker_local: usize,
    /// Host-graph ids; u1 reuses the marker's slot.
    pub u1: usize,
    pub u2: usize,
    pub u3: usize,
    pub c1: i64,
    pub c2: i64,
    /// Host eid of the internal {u2, u3} edge.
    pub internal_eid: usize,
}

/// The auxiliary pair (H_i, b^{H_i}).
#[derive(Debug, Clone)]
pub struct AugmentedComponent {
    pub host: Graph,
    pub caps: CapacityMap,
    pub modules: Vec<GadgetModule>,
    /// Distinguished vertex (parent marker or dummy) in the host.
    pub w_host: usize,
    pub dummy_w: bool,
    /// Host id -> component-local id for non-module vertices.
    pub host_to_local: Vec<Option<usize>>,
    /// Component-local id -> host id (markers map to their u1 slot).
    pub local_to_host: Vec<usize>,
}

impl AugmentedComponent {
    /// Cost map for the normalization: 1 everywhere, 2 on each internal
    /// gadget edge. Never exposed to users.
    pub fn normalization_costs(&self) -> CostMap {
        let mut c = CostMap::uniform(self.host.m(), 1);
        for m in &self.modules {
            c.set(m.internal_eid, 2);
        }
        c
    }
}

/// Build H by replacing every child marker with its module. Vertex
/// count stays within 3x the component order (the dummy, if added,
/// still fits because the root keeps at least one non-marker vertex).
pub fn build_gadget_component(view: &ComponentView) -> Result<AugmentedComponent> {
    let q = view.graph.n();
    let is_child: BTreeMap<usize, MuProfile> = view.child_markers.iter().copied().collect();
    if let Some(w) = view.parent_marker {
        if is_child.contains_key(&w) {
            return Err(Error::Internal("parent marker listed as child".into()));
        }
    }
    // u1 keeps the marker's slot; u2/u3 appended in ascending marker id.
    let mut next = q;
    let mut modules = Vec::new();
    let mut mod_of_local: BTreeMap<usize, usize> = BTreeMap::new();
    for (&marker, &profile) in is_child.iter() {
        if marker >= q {
            return Err(Error::MissingProfile(marker));
        }
        mod_of_local.insert(marker, modules.len());
        modules.push(GadgetModule {
            marker_local: marker,
            u1: marker,
            u2: next,
            u3: next + 1,
            c1: profile.c1,
            c2: profile.c2,
            internal_eid: usize::MAX,
        });
        next += 2;
    }
    let dummy_w = view.parent_marker.is_none();
    let w_host = match view.parent_marker {
        Some(w) => w,
        None => {
            let w = next;
            next += 1;
            w
        }
    };
    let host_n = next;

    let members = |local: usize| -> Vec<usize> {
        match mod_of_local.get(&local) {
            Some(&mi) => {
                let m = &modules[mi];
                vec![m.u1, m.u2, m.u3]
            }
            None => vec![local],
        }
    };
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for eid in 0..view.graph.m() {
        let (a, b) = view.graph.endpoints(eid);
        for &x in &members(a) {
            for &y in &members(b) {
                pairs.push((x, y));
            }
        }
    }
    let mut internal_pairs = Vec::new();
    for m in &modules {
        internal_pairs.push((m.u2, m.u3));
        pairs.push((m.u2, m.u3));
    }
    let host = Graph::build(host_n, &pairs)?;
    for (mi, &(u2, u3)) in internal_pairs.iter().enumerate() {
        modules[mi].internal_eid = host.edge_id(u2, u3).unwrap();
    }

    let mut caps = vec![0i64; host_n];
    for local in 0..q {
        match mod_of_local.get(&local) {
            Some(&mi) => {
                let m = &modules[mi];
                caps[m.u1] = m.c1;
                caps[m.u2] = m.c2;
                caps[m.u3] = m.c2;
            }
            None => {
                if Some(local) != view.parent_marker {
                    caps[local] = view.caps.get(local);
                }
            }
        }
    }

    let mut host_to_local = vec![None; host_n];
    let mut local_to_host = vec![0usize; q];
    for local in 0..q {
        host_to_local[local] = Some(local);
        local_to_host[local] = local;
    }
    let aug = AugmentedComponent {
        caps: CapacityMap::new(caps)?,
        modules,
        w_host,
        dummy_w,
        host_to_local,
        local_to_host,
        host,
    };
    debug_assert!(aug.host.n() <= 3 * q + usize::from(dummy_w));
    Ok(aug)
}

/// What normalization did.
#[derive(Debug, Clone, Default)]
pub struct NormalizeReport {
    /// Corrective passes needed per module (0 = already normal).
    pub corrective_passes: Vec<usize>,
    pub rule3_applications: usize,
}

impl NormalizeReport {
    pub fn max_passes(&self) -> usize {
        self.corrective_passes.iter().copied().max().unwrap_or(0)
    }
}

fn frontier_of(aug: &AugmentedComponent, m: &GadgetModule) -> Vec<usize> {
    // Neighbors of u1 are exactly the module's frontier.
    let mut d: Vec<usize> = aug.host.adjacency(m.u1).iter().map(|&(v, _)| v).collect();
    d.sort_unstable();
    d
}

fn module_degrees(aug: &AugmentedComponent, x: &BMatching, m: &GadgetModule) -> (i64, i64, i64) {
    (
        x.degree(&aug.host, m.u1),
        x.degree(&aug.host, m.u2),
        x.degree(&aug.host, m.u3),
    )
}

fn module_is_normal(aug: &AugmentedComponent, x: &BMatching, m: &GadgetModule) -> bool {
    let (d1, d2, d3) = module_degrees(aug, x, m);
    d2 == d3 && (d1 >= m.c1 || d2 == x.get(m.internal_eid))
}

/// Establish saturation and symmetry for every module, preserving
/// cardinality and cost. The input must be a maximum-cardinality,
/// maximum-cost solution under [`AugmentedComponent::normalization_costs`];
/// then one corrective pass per module suffices and rule 3 never fires.
pub fn normalize(aug: &AugmentedComponent, x: &mut BMatching) -> Result<NormalizeReport> {
    let mut report = NormalizeReport {
        corrective_passes: vec![0; aug.modules.len()],
        rule3_applications: 0,
    };
    for (mi, m) in aug.modules.iter().enumerate() {
        let frontier = frontier_of(aug, m);
        let mut passes = 0;
        while !module_is_normal(aug, x, m) {
            passes += 1;
            if passes > 2 {
                return Err(Error::NotCostMaximal { module: mi, passes });
            }
            apply_rules(aug, x, m, &frontier, &mut report);
        }
        report.corrective_passes[mi] = passes;
    }
    Ok(report)
}

fn apply_rules(
    aug: &AugmentedComponent,
    x: &mut BMatching,
    m: &GadgetModule,
    frontier: &[usize],
    report: &mut NormalizeReport,
) {
    let host = &aug.host;
    // Rule 1: top up u1 from u2/u3 frontier weight.
    for &side in &[m.u2, m.u3] {
        for &v in frontier {
            let d1 = x.degree(host, m.u1);
            if d1 >= m.c1 {
                break;
            }
            let e_side = host.edge_id(side, v).unwrap();
            let e_u1 = host.edge_id(m.u1, v).unwrap();
            let shift = (m.c1 - d1).min(x.get(e_side));
            if shift > 0 {
                x.add(e_u1, shift);
                x.add(e_side, -shift);
            }
        }
    }
    // Rule 2: rebalance u2/u3 down to a gap of at most 1.
    loop {
        let d2 = x.degree(host, m.u2);
        let d3 = x.degree(host, m.u3);
        let (hi, lo, gap) = if d2 > d3 {
            (m.u2, m.u3, d2 - d3)
        } else {
            (m.u3, m.u2, d3 - d2)
        };
        if gap <= 1 {
            break;
        }
        let mut moved = false;
        for &v in frontier {
            let e_hi = host.edge_id(hi, v).unwrap();
            let e_lo = host.edge_id(lo, v).unwrap();
            let surplus = x.get(e_hi) - x.get(e_lo);
            if surplus > 0 {
                let shift = (gap / 2).min(x.get(e_hi));
                x.add(e_hi, -shift);
                x.add(e_lo, shift);
                moved = true;
                break;
            }
        }
        if !moved {
            break;
        }
    }
    // Rule 3: a residual gap of one costs a frontier unit rerouted onto
    // the internal edge. Never reached from a maximum-cost solution.
    let d2 = x.degree(host, m.u2);
    let d3 = x.degree(host, m.u3);
    if (d2 - d3).abs() == 1 {
        let hi = if d2 > d3 { m.u2 } else { m.u3 };
        let lo = if d2 > d3 { m.u3 } else { m.u2 };
        for &v in frontier {
            let e_hi = host.edge_id(hi, v).unwrap();
            let e_lo = host.edge_id(lo, v).unwrap();
            if x.get(e_hi) > x.get(e_lo) {
                x.add(e_hi, -1);
                x.add(m.internal_eid, 1);
                report.rule3_applications += 1;
                break;
            }
        }
    }
}

/// One module folded back into its marker.
#[derive(Debug, Clone)]
pub struct ModuleContraction {
    /// Capacity the child subtree must absorb: deg(u1) plus twice the
    /// frontier degree of u2. The internal edge weight is excluded; it
    /// is the cardinality the contraction gives up.
    pub child_demand: i64,
    /// Folded weight per frontier host vertex (component-level weights
    /// of the marker's edges).
    pub folded: Vec<(usize, i64)>,
    /// Weight that was on the internal edge (the cardinality drop).
    pub internal: i64,
}

/// Fold one module back into its marker. Requires a normalized solution.
pub fn contract_module(
    aug: &AugmentedComponent,
    x: &BMatching,
    module_idx: usize,
) -> Result<ModuleContraction> {
    let m = &aug.modules[module_idx];
    if !module_is_normal(aug, x, m) {
        return Err(Error::NotNormalized(format!(
            "module {module_idx} violates saturation/symmetry"
        )));
    }
    let host = &aug.host;
    let internal = x.get(m.internal_eid);
    let d1 = x.degree(host, m.u1);
    let d2_frontier = x.degree(host, m.u2) - internal;
    let child_demand = d1 + 2 * d2_frontier;
    // Shape: demand = c1' + 2 c2' with c1' <= c1, c2' <= c2, and
    // c2' > 0 only when u1 is saturated.
    debug_assert!(d1 <= m.c1 && d2_frontier <= m.c2);
    debug_assert!(d2_frontier == 0 || d1 == m.c1);
    let mut folded = Vec::new();
    for &v in &frontier_of(aug, m) {
        let w = x.get(host.edge_id(m.u1, v).unwrap())
            + x.get(host.edge_id(m.u2, v).unwrap())
            + x.get(host.edge_id(m.u3, v).unwrap());
        if w != 0 {
            folded.push((v, w));
        }
    }
    Ok(ModuleContraction {
        child_demand,
        folded,
        internal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_bmatching;
    use crate::kernel::{solve_maxcost_bmatching_kernel, KernelBudget};

    /// P4's W-side component: marker u (local 0) - 2 (local 1) - 3
    /// (local 2), child profile (1,0,0).
    fn p4_w_side() -> ComponentView {
        ComponentView {
            graph: Graph::build(3, &[(0, 1), (1, 2)]).unwrap(),
            caps: CapacityMap::uniform(3, 1),
            child_markers: vec![(
                0,
                MuProfile {
                    mu0: 1,
                    c1: 0,
                    c2: 0,
                },
            )],
            parent_marker: None,
        }
    }

    #[test]
    fn build_p4_component() {
        let aug = build_gadget_component(&p4_w_side()).unwrap();
        let m = &aug.modules[0];
        assert_eq!((m.c1, m.c2), (0, 0));
        assert_eq!(aug.caps.get(m.u1), 0);
        assert_eq!(aug.caps.get(m.u2), 0);
        assert_eq!(aug.caps.get(m.u3), 0);
        // u1,u2,u3 joined to exactly {local 1}; u2-u3 internal edge.
        for u in [m.u1, m.u2, m.u3] {
            assert!(aug.host.has_edge(u, 1));
            assert!(!aug.host.has_edge(u, 2));
        }
        assert!(aug.host.has_edge(m.u2, m.u3));
        assert!(!aug.host.has_edge(m.u1, m.u2));
        assert!(!aug.host.has_edge(m.u1, m.u3));
        // dummy parent marker is isolated
        assert!(aug.dummy_w);
        assert_eq!(aug.host.degree(aug.w_host), 0);
    }

    #[test]
    fn build_profile_111_caps() {
        let mut view = p4_w_side();
        view.child_markers[0].1 = MuProfile {
            mu0: 1,
            c1: 1,
            c2: 1,
        };
        let aug = build_gadget_component(&view).unwrap();
        let m = &aug.modules[0];
        assert_eq!(
            (aug.caps.get(m.u1), aug.caps.get(m.u2), aug.caps.get(m.u3)),
            (1, 1, 1)
        );
    }

    #[test]
    fn build_no_markers_is_identity_shape() {
        let view = ComponentView {
            graph: Graph::build(3, &[(0, 1), (1, 2)]).unwrap(),
            caps: CapacityMap::uniform(3, 1),
            child_markers: vec![],
            parent_marker: Some(2),
        };
        let aug = build_gadget_component(&view).unwrap();
        assert_eq!(aug.host.n(), 3);
        assert_eq!(aug.host.m(), 2);
        assert!(!aug.dummy_w);
        assert_eq!(aug.w_host, 2);
    }

    #[test]
    fn size_bounds_hold() {
        let mut view = p4_w_side();
        view.child_markers = vec![
            (
                0,
                MuProfile {
                    mu0: 0,
                    c1: 2,
                    c2: 1,
                },
            ),
            (
                2,
                MuProfile {
                    mu0: 1,
                    c1: 0,
                    c2: 3,
                },
            ),
        ];
        let aug = build_gadget_component(&view).unwrap();
        let q = view.graph.n();
        assert!(aug.host.n() <= 3 * q);
        assert!(aug.host.m() <= 9 * view.graph.m() + q);
    }

    /// Module caps (1,1,1) joined to one frontier vertex v' (cap 2) and
    /// a second vertex v'' (cap 1) adjacent to v'.
    fn module_fixture() -> AugmentedComponent {
        // local: 0 = marker, 1 = v', 2 = v''; edges marker-v', v'-v''.
        let view = ComponentView {
            graph: Graph::build(3, &[(0, 1), (1, 2)]).unwrap(),
            caps: CapacityMap::new(vec![0, 2, 1]).unwrap(),
            child_markers: vec![(
                0,
                MuProfile {
                    mu0: 0,
                    c1: 1,
                    c2: 1,
                },
            )],
            parent_marker: None,
        };
        build_gadget_component(&view).unwrap()
    }

    #[test]
    fn rule1_moves_unit_to_u1() {
        let aug = module_fixture();
        let m = aug.modules[0];
        let mut x = BMatching::zero(aug.host.m());
        x.set(aug.host.edge_id(m.u2, 1).unwrap(), 1);
        x.set(m.internal_eid, 0);
        let card = x.norm1();
        normalize(&aug, &mut x).unwrap();
        assert_eq!(x.norm1(), card);
        assert_eq!(x.get(aug.host.edge_id(m.u1, 1).unwrap()), 1);
        assert_eq!(x.get(aug.host.edge_id(m.u2, 1).unwrap()), 0);
    }

    #[test]
    fn rule2_rebalances_sides() {
        // Two frontier vertices so u2 can carry 2 units.
        let view = ComponentView {
            graph: Graph::build(3, &[(0, 1), (0, 2)]).unwrap(),
            caps: CapacityMap::new(vec![0, 1, 1]).unwrap(),
            child_markers: vec![(
                0,
                MuProfile {
                    mu0: 0,
                    c1: 0,
                    c2: 2,
                },
            )],
            parent_marker: None,
        };
        let aug = build_gadget_component(&view).unwrap();
        let m = aug.modules[0];
        let mut x = BMatching::zero(aug.host.m());
        x.set(aug.host.edge_id(m.u2, 1).unwrap(), 1);
        x.set(aug.host.edge_id(m.u2, 2).unwrap(), 1);
        normalize(&aug, &mut x).unwrap();
        let d2 = x.degree(&aug.host, m.u2);
        let d3 = x.degree(&aug.host, m.u3);
        assert_eq!(d2, d3);
        assert_eq!(d2 + d3, 2);
    }

    #[test]
    fn normalize_fixpoint_unchanged() {
        let aug = module_fixture();
        let m = aug.modules[0];
        let mut x = BMatching::zero(aug.host.m());
        x.set(aug.host.edge_id(m.u1, 1).unwrap(), 1);
        x.set(m.internal_eid, 1);
        x.set(aug.host.edge_id(1, 2).unwrap(), 1);
        let before = x.clone();
        let report = normalize(&aug, &mut x).unwrap();
        assert_eq!(x, before);
        assert_eq!(report.max_passes(), 0);
    }

    #[test]
    fn normalized_kernel_solutions_contract() {
        let aug = module_fixture();
        let m = aug.modules[0];
        let costs = aug.normalization_costs();
        let r =
            solve_maxcost_bmatching_kernel(&aug.host, &aug.caps, &costs, &KernelBudget::default())
                .unwrap();
        let mut x = r.x.clone();
        let report = normalize(&aug, &mut x).unwrap();
        assert!(report.max_passes() <= 1);
        assert_eq!(report.rule3_applications, 0);
        assert_eq!(x.norm1(), r.cardinality);
        assert!(validate_bmatching(&aug.host, &aug.caps, &x).is_ok());
        let con = contract_module(&aug, &x, 0).unwrap();
        // Shape of the demand.
        let d1 = x.degree(&aug.host, m.u1);
        let c2p = x.degree(&aug.host, m.u2) - x.get(m.internal_eid);
        assert_eq!(con.child_demand, d1 + 2 * c2p);
    }

    #[test]
    fn contract_zero_module() {
        let aug = build_gadget_component(&p4_w_side()).unwrap();
        let x = BMatching::zero(aug.host.m());
        let con = contract_module(&aug, &x, 0).unwrap();
        assert_eq!(con.child_demand, 0);
        assert_eq!(con.internal, 0);
        assert!(con.folded.is_empty());
    }

    #[test]
    fn contract_fold_arithmetic() {
        // caps (1,1,1), frontier v' (cap 2) and v'' (cap 1), both joined
        // to the module: x = {u1-v':1, u2-v':1, u3-v'':1}.
        let view = ComponentView {
            graph: Graph::build(3, &[(0, 1), (0, 2)]).unwrap(),
            caps: CapacityMap::new(vec![0, 2, 1]).unwrap(),
            child_markers: vec![(
                0,
                MuProfile {
                    mu0: 0,
                    c1: 1,
                    c2: 1,
                },
            )],
            parent_marker: None,
        };
        let aug = build_gadget_component(&view).unwrap();
        let m = aug.modules[0];
        let mut x = BMatching::zero(aug.host.m());
        x.set(aug.host.edge_id(m.u1, 1).unwrap(), 1);
        x.set(aug.host.edge_id(m.u2, 1).unwrap(), 1);
        x.set(aug.host.edge_id(m.u3, 2).unwrap(), 1);
        let con = contract_module(&aug, &x, 0).unwrap();
        assert_eq!(con.child_demand, 1 + 2 * 1);
        assert_eq!(con.folded, vec![(1, 2), (2, 1)]);
        assert_eq!(con.internal, 0);
    }

    #[test]
    fn contract_internal_edge_excluded() {
        // x = {u1-v':1, u2u3:1}: frontier part of u2 is zero, so the
        // child demand is 1 and the drop is 1.
        let aug = module_fixture();
        let m = aug.modules[0];
        let mut x = BMatching::zero(aug.host.m());
        x.set(aug.host.edge_id(m.u1, 1).unwrap(), 1);
        x.set(m.internal_eid, 1);
        let con = contract_module(&aug, &x, 0).unwrap();
        assert_eq!(con.child_demand, 1);
        assert_eq!(con.internal, 1);
        assert_eq!(con.folded, vec![(1, 1)]);
    }

    #[test]
    fn contract_rejects_unnormalized() {
        let aug = module_fixture();
        let m = aug.modules[0];
        let mut x = BMatching::zero(aug.host.m());
        // asymmetric: u2 carries frontier weight, u3 nothing, u1 empty
        x.set(aug.host.edge_id(m.u2, 1).unwrap(), 1);
        assert!(matches!(
            contract_module(&aug, &x, 0),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn missing_profile_rejected() {
        let view = ComponentView {
            graph: Graph::build(3, &[(0, 1), (1, 2)]).unwrap(),
            caps: CapacityMap::uniform(3, 1),
            child_markers: vec![(
                7,
                MuProfile {
                    mu0: 0,
                    c1: 0,
                    c2: 0,
                },
            )],
            parent_marker: None,
        };
        assert!(matches!(
            build_gadget_component(&view),
            Err(Error::MissingProfile(7))
        ));
    }
}
