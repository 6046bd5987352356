//! Unit-cost b-Matching (and Maximum Matching as the b = 1 case) on
//! graphs of bounded split-width.
//!
//! The solver decomposes the input along splits (complete-join edge
//! cuts), runs a bottom-up dynamic program that summarizes each subtree
//! as a three-number piecewise-linear profile, replaces subtree markers
//! by three-vertex gadget modules, and reconstructs an optimal matching
//! top-down, merging side solutions with a node-capacitated greedy flow.
//! Every step can be cross-checked against the brute-force oracle in
//! [`testkit`] at desk scale.

pub mod decomp;
pub mod error;
pub mod gadget;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod merge;
pub mod profile;
pub mod solver;
pub mod store;
pub mod testkit;

pub use error::{Error, Result};
pub use graph::{
    truncate_capacities, validate_bmatching, BMatching, CapacityMap, Graph, Violation,
};
pub use kernel::{
    max_matching, solve_bmatching_kernel, solve_maxcost_bmatching_kernel, CostMap, KernelBudget,
    KernelResult,
};
pub use profile::{compute_profile, mu_at, mu_from_profile, MuProfile};
pub use solver::{solve_bmatching, solve_maximum_matching, SolveConfig, SolveMode, SolveResult};
