//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Loop edge `{v,v}` in graph input.
    #[error("loop: edge ({0}, {0}) is a self-loop")]
    Loop(usize),

    /// Vertex id outside `0..n`.
    #[error("vertex-range: vertex {vertex} out of range for n = {n}")]
    VertexRange { vertex: usize, n: usize },

    /// Operation requires a connected graph.
    #[error("disconnected input graph")]
    Disconnected,

    /// Total capacity too large for the 64-bit arithmetic contract.
    #[error("capacity overflow: ||b||_1 must be < 2^62")]
    CapacityOverflow,

    /// Expansion would exceed the configured kernel budget.
    #[error("kernel-budget: {0}")]
    KernelBudget(String),

    /// Weight store misuse (double split, mismatched views, dead cell).
    #[error("weight store: {0}")]
    Store(String),

    /// Marker degrees disagree across a split merge.
    #[error("marker-degree: {0}")]
    MarkerDegree(String),

    /// Normalization did not converge; input was not maximum-cost.
    #[error("not-cost-maximal: module {module} still violating after {passes} passes")]
    NotCostMaximal { module: usize, passes: usize },

    /// A child marker has no profile attached.
    #[error("missing profile for child marker {0}")]
    MissingProfile(usize),

    /// Contraction called on an un-normalized solution.
    #[error("contract on un-normalized matching: {0}")]
    NotNormalized(String),

    /// Text format parse error.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A SplitTree failed verification.
    #[error("invalid decomposition: {0}")]
    BadDecomposition(String),

    /// Internal invariant violated; indicates a solver bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
