//! The interval discrepancy statistic against a fitted normal law.
//!
//! For a functional `Z` replicated at one system size, the statistic is
//!
//! ```text
//! sup_u | m_n * P[Z in [u, u+b)]  -  b/sigma * phi((u - mu)/(m_n sigma)) |
//! ```
//!
//! evaluated over a lattice-aligned grid of window starts `u`, with `mu`
//! and `sigma` plugged in from the data (`sigma` is normalised by the
//! scale `m_n`, so for a classical sum of `n` terms and `m_n = sqrt(n)` it
//! estimates the per-summand deviation). Empirical laws carry Monte Carlo
//! and plug-in error envelopes; exact laws carry none.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::dist::{DistKind, EmpiricalDistribution};
use super::pmf::ExactPmf;
use super::span::divides;

/// Windows cover at least `mu +- GRID_SIGMAS * sigma_raw` plus every atom.
const GRID_SIGMAS: f64 = 6.0;

/// `sup |phi'|`, the modulus-of-continuity constant for the normal pdf.
const PHI_PRIME_MAX: f64 = 0.24197072451914337; // (2 pi e)^(-1/2)

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// A law reduced to atoms on a base lattice, the common input shape for
/// the discrepancy statistic. `value = origin + idx * base`.
#[derive(Debug, Clone)]
pub struct Law {
    entries: Vec<LawEntry>,
    origin: f64,
    base: f64,
    mean: f64,
    variance: f64,
    n_samples: Option<u64>,
}

#[derive(Debug, Clone)]
struct LawEntry {
    idx: i64,
    prob: f64,
    count: u64,
}

impl Law {
    /// View of an empirical distribution. Integer-lattice data sits on the
    /// lattice of its detected span; binned data on the bin lattice.
    pub fn from_empirical(dist: &EmpiricalDistribution) -> Result<Self> {
        if dist.is_empty() {
            return Err(Error::Parameter("empty distribution".into()));
        }
        let n = dist.n_samples();
        let nf = n as f64;
        match dist.kind() {
            DistKind::IntegerLattice => {
                let min = dist.atoms().next().unwrap().0;
                let mut g: u64 = 0;
                for (v, _) in dist.atoms() {
                    g = gcd(g, v.abs_diff(min));
                }
                let span = g.max(1);
                let entries = dist
                    .atoms()
                    .map(|(v, c)| LawEntry {
                        idx: (v - min) / span as i64,
                        prob: c as f64 / nf,
                        count: c,
                    })
                    .collect();
                Ok(Law {
                    entries,
                    origin: min as f64,
                    base: span as f64,
                    mean: dist.mean(),
                    variance: dist.sample_variance(),
                    n_samples: Some(n),
                })
            }
            DistKind::RealBinned { bin_width } => {
                let entries = dist
                    .atoms()
                    .map(|(k, c)| LawEntry {
                        idx: k,
                        prob: c as f64 / nf,
                        count: c,
                    })
                    .collect();
                Ok(Law {
                    entries,
                    origin: 0.0,
                    base: *bin_width,
                    mean: dist.mean(),
                    variance: dist.sample_variance(),
                    n_samples: Some(n),
                })
            }
        }
    }

    /// View of an exact law, on the lattice of its exact span.
    pub fn from_exact(pmf: &ExactPmf) -> Self {
        let min = pmf.min_value();
        let span = pmf.span();
        let step = if span.is_finite() { span as i64 } else { 1 };
        let entries = pmf
            .atoms()
            .map(|(v, w)| LawEntry {
                idx: (v - min) / step,
                prob: w,
                count: 0,
            })
            .collect();
        Law {
            entries,
            origin: min as f64,
            base: step as f64,
            mean: pmf.mean(),
            variance: pmf.variance(),
            n_samples: None,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Base lattice step (detected span or bin width).
    pub fn base_step(&self) -> f64 {
        self.base
    }

    fn value_at(&self, idx: i64) -> f64 {
        self.origin + idx as f64 * self.base
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// One evaluated window `[u, u+b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub u: f64,
    /// replicate count inside the window (0 for exact laws)
    pub count: u64,
    /// probability mass inside the window
    pub mass: f64,
    /// fitted normal prediction of the window mass
    pub prediction: f64,
    /// `m_n * |mass - prediction|`
    pub discrepancy: f64,
}

/// Summary of the interval discrepancy statistic at one system size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCltReport {
    /// plug-in mean of the raw functional values
    pub mu_hat: f64,
    /// plug-in variance normalised by `m_n^2`
    pub sigma2_hat: f64,
    pub m_n: f64,
    /// interval width actually used (an exact multiple of the base step)
    pub b: f64,
    pub sup_discrepancy: f64,
    /// window start attaining the sup
    pub sup_arg_u: f64,
    /// envelope for the Monte Carlo noise of the sup (0 for exact laws):
    /// max single-window standard error times sqrt(2 ln(2 N_windows))
    pub mc_error: f64,
    /// first-order effect of plugging in estimated moments (0 for exact)
    pub plug_in_error: f64,
    /// bound on the drift of the normal term between adjacent grid points
    pub continuity_bound: f64,
    pub kolmogorov_distance: f64,
    pub n_samples: Option<u64>,
    pub grid: Vec<GridPoint>,
}

impl LocalCltReport {
    /// Total error budget accompanying `sup_discrepancy`.
    pub fn error_budget(&self) -> f64 {
        self.mc_error + self.plug_in_error
    }
}

/// Evaluate the discrepancy statistic with plug-in moments.
pub fn local_clt_discrepancy(law: &Law, m_n: f64, b: f64) -> Result<LocalCltReport> {
    local_clt_discrepancy_with_moments(law, m_n, b, law.mean(), law.variance())
}

/// Same statistic with explicit raw moments (used to verify that plug-in
/// estimates change nothing beyond float round-off on exact laws).
pub fn local_clt_discrepancy_with_moments(
    law: &Law,
    m_n: f64,
    b: f64,
    mean: f64,
    variance: f64,
) -> Result<LocalCltReport> {
    if !(m_n > 0.0) || !m_n.is_finite() {
        return Err(Error::Parameter(format!("scale m_n = {m_n} must be positive")));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Parameter(format!("interval width b = {b} must be positive")));
    }
    if !(variance > 0.0) {
        return Err(Error::DegenerateDistribution);
    }
    if !divides(law.base, b) {
        return Err(Error::SpanDivisibility { b, span: law.base });
    }
    let b_steps = (b / law.base).round() as i64;
    let bc = b_steps as f64 * law.base;

    let sigma_raw = (variance).sqrt();
    let sigma_norm = sigma_raw / m_n;
    let n_samples = law.n_samples;
    let nf = n_samples.map(|n| n as f64);

    let first_val = law.value_at(law.entries.first().unwrap().idx);
    let last_val = law.value_at(law.entries.last().unwrap().idx);
    let lo_val = (mean - GRID_SIGMAS * sigma_raw).min(first_val);
    let hi_val = (mean + GRID_SIGMAS * sigma_raw).max(last_val);
    let k_lo = ((lo_val - law.origin) / bc).floor() as i64;
    let k_hi = ((hi_val - law.origin) / bc).floor() as i64;
    let windows = (k_hi - k_lo + 1) as usize;

    let mut grid = Vec::with_capacity(windows);
    let mut sup = 0.0f64;
    let mut sup_arg = law.origin + k_lo as f64 * bc;
    let mut max_se = 0.0f64;
    let mut entry_ptr = 0usize;
    for k in k_lo..=k_hi {
        let idx_hi = (k + 1) * b_steps;
        let mut mass = 0.0f64;
        let mut count = 0u64;
        while entry_ptr < law.entries.len() && law.entries[entry_ptr].idx < idx_hi {
            let e = &law.entries[entry_ptr];
            debug_assert!(e.idx >= k * b_steps, "window tiling must not skip atoms");
            mass += e.prob;
            count += e.count;
            entry_ptr += 1;
        }
        let u = law.origin + (k * b_steps) as f64 * law.base;
        let z = (u - mean) / sigma_raw;
        let prediction = bc / (m_n * sigma_norm) * normal_pdf(z);
        let d = m_n * (mass - prediction).abs();
        if d > sup {
            sup = d;
            sup_arg = u;
        }
        if let Some(nf) = nf {
            max_se = max_se.max((mass * (1.0 - mass) / nf).sqrt());
        }
        grid.push(GridPoint {
            u,
            count,
            mass,
            prediction,
            discrepancy: d,
        });
    }

    let mc_error = m_n * max_se * (2.0 * (2.0 * windows as f64).ln()).sqrt();
    let plug_in_error = match nf {
        Some(nf) => bc / sigma_norm * (PHI_PRIME_MAX + 0.45 / std::f64::consts::SQRT_2) / nf.sqrt(),
        None => 0.0,
    };
    let continuity_bound = PHI_PRIME_MAX * bc * law.base / (sigma_norm * sigma_raw);

    let kolmogorov_distance = kolmogorov_of_law(law, mean, sigma_raw);

    Ok(LocalCltReport {
        mu_hat: mean,
        sigma2_hat: variance / (m_n * m_n),
        m_n,
        b: bc,
        sup_discrepancy: sup,
        sup_arg_u: sup_arg,
        mc_error,
        plug_in_error,
        continuity_bound,
        kolmogorov_distance,
        n_samples,
        grid,
    })
}

fn kolmogorov_of_law(law: &Law, mean: f64, sigma_raw: f64) -> f64 {
    let points: Vec<(f64, f64)> = law
        .entries
        .iter()
        .map(|e| (law.value_at(e.idx), e.prob))
        .collect();
    kolmogorov_to_normal(&points, mean, sigma_raw)
}

/// Kolmogorov distance between a discrete law (sorted `(value, prob)`
/// pairs) and `N(mean, sd^2)`; `sd = 0` is the point mass at `mean`.
/// Compared at both sides of every jump, with the target's own left limit
/// when it is degenerate.
pub fn kolmogorov_to_normal(points: &[(f64, f64)], mean: f64, sd: f64) -> f64 {
    let mut cdf = 0.0f64;
    let mut ks = 0.0f64;
    for &(x, p) in points {
        let (target_left, target_right) = if sd > 0.0 {
            let t = normal_cdf((x - mean) / sd);
            (t, t)
        } else {
            (
                if x > mean { 1.0 } else { 0.0 },
                if x >= mean { 1.0 } else { 0.0 },
            )
        };
        ks = ks.max((cdf - target_left).abs());
        cdf += p;
        ks = ks.max((cdf - target_right).abs());
    }
    ks
}
