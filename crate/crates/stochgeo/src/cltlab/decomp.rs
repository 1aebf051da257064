//! Synthetic decomposition harness.
//!
//! Builds, exactly, the law of `Z_n = Y_n + S_n (+1 with probability
//! eps_n)` where `S_n` is the n-fold sum of an i.i.d. summand law `V` and
//! `Y_n` is an arbitrary independent integer law supplied per ladder size.
//! The `+1`-with-probability-`eps_n` defect is one concrete coupling whose
//! mismatch probability and mean gap both vanish at rate `o(n^{-1/2})`
//! when `eps_n sqrt(n) -> 0`. For each ladder size the harness evaluates
//! the interval discrepancy of `Z_n` at scale `m_n = sqrt(n)`, checks
//! `Var V <= sigma2_hat`, and measures the normality of the centred,
//! `sqrt(n)`-scaled `Y_n` against `N(0, sigma2_hat - Var V)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::pmf::{convolution_power, convolve, ExactPmf};
use super::report::{kolmogorov_to_normal, local_clt_discrepancy, Law, LocalCltReport};
use super::span::divides;

/// Inputs: the summand law, one `Y` law and one defect probability per
/// ladder size, and the interval width `b`.
#[derive(Debug, Clone)]
pub struct DecompositionSpec {
    pub v_law: ExactPmf,
    pub ladder: Vec<u64>,
    pub y_laws: Vec<ExactPmf>,
    pub defect_eps: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionSizeReport {
    pub n: u64,
    pub clt: LocalCltReport,
    pub var_v: f64,
    /// `Var V <= sigma2_hat` (the variance side-condition)
    pub variance_bound_holds: bool,
    /// Kolmogorov distance of the scaled centred `Y_n` to its normal limit
    pub ks_y_to_normal: f64,
    /// exact span of the assembled law of `Z_n`
    pub z_span: f64,
}

pub fn decomposition_check(spec: &DecompositionSpec) -> Result<Vec<DecompositionSizeReport>> {
    if spec.ladder.is_empty()
        || spec.ladder.len() != spec.y_laws.len()
        || spec.ladder.len() != spec.defect_eps.len()
    {
        return Err(Error::Configuration(
            "ladder, y_laws and defect_eps must have equal non-zero length".into(),
        ));
    }
    if spec.ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Configuration("ladder must be strictly increasing".into()));
    }
    let h_v = spec.v_law.span();
    if h_v.is_infinite() {
        return Err(Error::Configuration(
            "summand law V is degenerate (infinite span); no finite interval width is admissible"
                .into(),
        ));
    }
    if !divides(h_v, spec.b) {
        return Err(Error::SpanDivisibility {
            b: spec.b,
            span: h_v,
        });
    }
    let var_v = spec.v_law.variance();

    let mut out = Vec::with_capacity(spec.ladder.len());
    for (i, &n) in spec.ladder.iter().enumerate() {
        let eps = spec.defect_eps[i];
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::Configuration(format!("defect eps = {eps} outside [0, 1)")));
        }
        let s_law = convolution_power(&spec.v_law, n)?;
        let z_exact = convolve(&spec.y_laws[i], &s_law)?;
        let z_law = if eps > 0.0 {
            convolve(&z_exact, &ExactPmf::bernoulli(eps)?)?
        } else {
            z_exact
        };
        let z_span = z_law.span();

        let m_n = (n as f64).sqrt();
        let clt = local_clt_discrepancy(&Law::from_exact(&z_law), m_n, spec.b)?;
        let variance_bound_holds = var_v <= clt.sigma2_hat + 1e-12;

        // variances below float noise collapse to the degenerate target
        let sigma2_y = (clt.sigma2_hat - var_v).max(0.0);
        let sd_y = if sigma2_y > 1e-12 { sigma2_y.sqrt() } else { 0.0 };
        let y = &spec.y_laws[i];
        let mu_y = y.mean();
        let points: Vec<(f64, f64)> = y
            .atoms()
            .map(|(v, w)| ((v as f64 - mu_y) / m_n, w))
            .collect();
        let ks_y_to_normal = kolmogorov_to_normal(&points, 0.0, sd_y);

        out.push(DecompositionSizeReport {
            n,
            clt,
            var_v,
            variance_bound_holds,
            ks_y_to_normal,
            z_span,
        });
    }
    Ok(out)
}
