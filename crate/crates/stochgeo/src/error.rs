//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Rejection sampling gave up; the configured density is unusable.
    #[error("rejection sampling exhausted {attempts} attempts for one point; density looks malformed")]
    SamplingFailure { attempts: u64 },

    /// Motif order outside the table-driven isomorphism range.
    #[error("motif order {kappa} unsupported; isomorphism tables cover orders 1..=5")]
    MotifOrder { kappa: usize },

    /// A graph component is too large for exact per-component search.
    #[error("component of order {order} exceeds cap {cap}; experiment violates the subcritical assumption")]
    SupercriticalComponent { order: usize, cap: usize },

    /// Non-integral value pushed into an integer-lattice distribution.
    #[error("value {value} is not integral; distribution kind is integer-lattice")]
    KindMismatch { value: f64 },

    /// Zero-variance sample where a spread is required.
    #[error("degenerate distribution: zero variance")]
    DegenerateDistribution,

    /// Interval width incompatible with the detected lattice span.
    #[error("interval width {b} is not an integer multiple of the span {span}")]
    SpanDivisibility { b: f64, span: f64 },

    /// Exact PMF arithmetic would exceed the configured support budget.
    #[error("PMF support budget exceeded: {atoms} atoms > {budget}")]
    SizeBudget { atoms: usize, budget: usize },

    /// Fewer points than requested neighbour order; the distance is infinite.
    #[error("{kappa}-nearest-neighbour distance undefined: sample has only {n} points")]
    InfiniteDistance { n: usize, kappa: usize },

    /// Experiment or harness configuration is unusable.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Run would exceed the configured site-or-point operation budget.
    #[error("resource cap exceeded: run needs ~{required} site-or-point operations, cap is {cap}")]
    ResourceCap { required: u128, cap: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed experiment document: {0}")]
    Document(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
