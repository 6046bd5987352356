//! μ-profiles: the maximum b-matching cardinality as a function of one
//! distinguished vertex's capacity.
//!
//! μ(t) rises with slope 1 up to c1, then 1 per two units up to
//! c1 + 2c2, then stays flat. `compute_profile` recovers the triple
//! (μ(0), c1, c2) with O(log ||b||_1) kernel calls: doubling past each
//! breakpoint, then dichotomic search.

use std::collections::HashMap;

use crate::error::Result;
use crate::graph::{CapacityMap, Graph};
use crate::kernel::{solve_bmatching_kernel, KernelBudget};

/// The triple (μ(0), c1, c2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MuProfile {
    pub mu0: i64,
    pub c1: i64,
    pub c2: i64,
}

/// Evaluate the closed form at t.
pub fn mu_from_profile(p: &MuProfile, t: i64) -> i64 {
    debug_assert!(t >= 0);
    if t <= p.c1 {
        p.mu0 + t
    } else if t <= p.c1 + 2 * p.c2 {
        p.mu0 + p.c1 + (t - p.c1) / 2
    } else {
        p.mu0 + p.c1 + p.c2
    }
}

/// μ(t): kernel solve with the capacity of w set to t. The entry of `b`
/// at w is ignored.
pub fn mu_at(g: &Graph, b: &CapacityMap, w: usize, t: i64, budget: &KernelBudget) -> Result<i64> {
    debug_assert!(t >= 0);
    let mut bt = b.clone();
    bt.set(w, t);
    Ok(solve_bmatching_kernel(g, &bt, budget)?.cardinality)
}

/// Profile plus the number of kernel invocations it took.
#[derive(Debug, Clone, Copy)]
pub struct ProfileOutcome {
    pub profile: MuProfile,
    pub kernel_calls: usize,
}

struct Prober<'a> {
    g: &'a Graph,
    b: CapacityMap,
    w: usize,
    budget: &'a KernelBudget,
    cache: HashMap<i64, i64>,
    calls: usize,
}

impl<'a> Prober<'a> {
    fn mu(&mut self, t: i64) -> Result<i64> {
        if let Some(&v) = self.cache.get(&t) {
            return Ok(v);
        }
        self.b.set(self.w, t);
        let v = solve_bmatching_kernel(self.g, &self.b, self.budget)?.cardinality;
        self.calls += 1;
        self.cache.insert(t, v);
        Ok(v)
    }
}

/// Compute (μ(0), c1, c2) for (g, b) and distinguished vertex w.
///
/// Kernel call count is bounded by 4·ceil(log2(S+2)) + 8 where S is the
/// capacity sum over N(w); the doubling/dichotomy never probes past S.
pub fn compute_profile(
    g: &Graph,
    b: &CapacityMap,
    w: usize,
    budget: &KernelBudget,
) -> Result<ProfileOutcome> {
    let mut prober = Prober {
        g,
        b: b.clone(),
        w,
        budget,
        cache: HashMap::new(),
        calls: 0,
    };
    let mu0 = prober.mu(0)?;
    // Trivial upper bound: μ is constant past the neighborhood capacity.
    let cap_sum: i64 = g.adjacency(w).iter().map(|&(u, _)| b.get(u)).sum();
    if g.degree(w) == 0 || cap_sum == 0 {
        return Ok(ProfileOutcome {
            profile: MuProfile { mu0, c1: 0, c2: 0 },
            kernel_calls: prober.calls,
        });
    }

    // c1 = largest t <= cap_sum with μ(t) = μ(0) + t (slope-1 prefix).
    let c1 = search_largest(&mut prober, cap_sum, |p, t| Ok(p.mu(t)? == mu0 + t))?;

    // c2 = largest i with μ(c1 + 2i) = μ(c1) + i (half-slope stretch).
    let mu_c1 = mu0 + c1;
    let i_max = (cap_sum - c1) / 2;
    let c2 = if i_max <= 0 {
        0
    } else {
        search_largest(
            &mut prober,
            i_max,
            |p, i| Ok(p.mu(c1 + 2 * i)? == mu_c1 + i),
        )?
    };

    Ok(ProfileOutcome {
        profile: MuProfile { mu0, c1, c2 },
        kernel_calls: prober.calls,
    })
}

/// Largest t in [0, hi_cap] satisfying a monotone predicate (true on a
/// prefix, false after). Doubling overshoot, then dichotomy.
fn search_largest<F>(prober: &mut Prober<'_>, hi_cap: i64, pred: F) -> Result<i64>
where
    F: Fn(&mut Prober<'_>, i64) -> Result<bool>,
{
    debug_assert!(hi_cap >= 1);
    let mut probe = 1i64;
    loop {
        if probe >= hi_cap {
            probe = hi_cap;
            break;
        }
        if !pred(prober, probe)? {
            break;
        }
        probe *= 2;
    }
    if pred(prober, probe)? {
        return Ok(probe);
    }
    // Invariant: pred(lo) true, pred(hi) false.
    let mut lo = if probe == 1 { 0 } else { probe / 2 };
    let mut hi = probe;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(prober, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
