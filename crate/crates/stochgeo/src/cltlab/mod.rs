//! Empirical distributions, exact PMF arithmetic, span detection, the
//! normal-approximation discrepancy statistic, a synthetic decomposition
//! harness and concentration bounds.

mod bounds;
mod decomp;
mod dist;
mod pmf;
mod report;
mod span;

pub use bounds::{bounded_difference_bound, chernoff_bound, Tail};
pub use decomp::{decomposition_check, DecompositionSizeReport, DecompositionSpec};
pub use dist::{DistKind, EmpiricalDistribution};
pub use pmf::{convolution_power, convolve, exact_binomial_pmf, ExactPmf, PMF_SUPPORT_BUDGET};
pub use report::{
    kolmogorov_to_normal, local_clt_discrepancy, normal_cdf, normal_pdf, GridPoint, Law,
    LocalCltReport,
};
pub use span::{
    characteristic_modulus, default_span_candidates, divides, estimate_span,
    estimate_span_with_candidates, real_gcd_span, SpanEstimate, SpanMethod, EPS_SPAN,
};
