//! Exact probability mass functions on the integers.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Combined support budget for exact convolutions.
pub const PMF_SUPPORT_BUDGET: usize = 1_000_000;

/// Relative mass below which far-tail atoms are dropped when tabulating a
/// binomial law; the total trimmed mass stays below 1e-13.
const TRIM_MASS: f64 = 1e-13;

/// Exact integer-lattice law: strictly positive weights summing to one (up
/// to float rounding and documented tail trimming).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPmf {
    atoms: BTreeMap<i64, f64>,
}

impl ExactPmf {
    pub fn from_atoms(pairs: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        let mut atoms = BTreeMap::new();
        for (v, w) in pairs {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Parameter("weights must be finite and >= 0".into()));
            }
            if w > 0.0 {
                *atoms.entry(v).or_insert(0.0) += w;
            }
        }
        if atoms.is_empty() {
            return Err(Error::Parameter("a PMF needs at least one positive atom".into()));
        }
        let total: f64 = atoms.values().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Parameter(format!("weights sum to {total}, expected 1")));
        }
        for w in atoms.values_mut() {
            *w /= total;
        }
        Ok(ExactPmf { atoms })
    }

    pub fn point_mass(v: i64) -> Self {
        ExactPmf {
            atoms: BTreeMap::from([(v, 1.0)]),
        }
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("p = {p} outside [0, 1]")));
        }
        if p == 0.0 {
            return Ok(ExactPmf::point_mass(0));
        }
        if p == 1.0 {
            return Ok(ExactPmf::point_mass(1));
        }
        Ok(ExactPmf {
            atoms: BTreeMap::from([(0, 1.0 - p), (1, p)]),
        })
    }

    pub fn atoms(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.atoms.iter().map(|(&v, &w)| (v, w))
    }

    pub fn weight(&self, v: i64) -> f64 {
        self.atoms.get(&v).copied().unwrap_or(0.0)
    }

    pub fn support_len(&self) -> usize {
        self.atoms.len()
    }

    pub fn min_value(&self) -> i64 {
        *self.atoms.keys().next().unwrap()
    }

    pub fn max_value(&self) -> i64 {
        *self.atoms.keys().next_back().unwrap()
    }

    /// Total mass, compensated summation.
    pub fn mass(&self) -> f64 {
        kahan_sum(self.atoms.values().copied())
    }

    pub fn mean(&self) -> f64 {
        kahan_sum(self.atoms.iter().map(|(&v, &w)| v as f64 * w))
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        kahan_sum(self.atoms.iter().map(|(&v, &w)| {
            let d = v as f64 - mu;
            d * d * w
        }))
    }

    /// Lattice span: gcd of the support differences; +infinity for a
    /// degenerate (single-atom) law.
    pub fn span(&self) -> f64 {
        let mut it = self.atoms.keys();
        let first = *it.next().unwrap();
        let mut g: u64 = 0;
        for &v in it {
            g = gcd(g, v.abs_diff(first));
        }
        if g == 0 {
            f64::INFINITY
        } else {
            g as f64
        }
    }

    pub fn shifted(&self, by: i64) -> Self {
        ExactPmf {
            atoms: self.atoms.iter().map(|(&v, &w)| (v + by, w)).collect(),
        }
    }

    /// Upper tail `P[X >= x]`.
    pub fn upper_tail(&self, x: f64) -> f64 {
        kahan_sum(
            self.atoms
                .iter()
                .filter(|(&v, _)| v as f64 >= x)
                .map(|(_, &w)| w),
        )
    }

    /// Lower tail `P[X <= x]`.
    pub fn lower_tail(&self, x: f64) -> f64 {
        kahan_sum(
            self.atoms
                .iter()
                .filter(|(&v, _)| v as f64 <= x)
                .map(|(_, &w)| w),
        )
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Exact binomial(n, p) law via the stable log-space ratio recurrence
/// `log w_{k+1} = log w_k + log((n-k)/(k+1)) + log(p/(1-p))`, run outward
/// from the mode and renormalised, so log drift never accumulates across
/// the bulk of the distribution.
pub fn exact_binomial_pmf(n: u64, p: f64) -> Result<ExactPmf> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p} outside [0, 1]")));
    }
    if n > 1_000_000 {
        return Err(Error::Parameter("binomial tabulation capped at n = 10^6".into()));
    }
    if p == 0.0 {
        return Ok(ExactPmf::point_mass(0));
    }
    if p == 1.0 {
        return Ok(ExactPmf::point_mass(n as i64));
    }
    let lp = p.ln();
    let lq = (-p).ln_1p();
    let ratio = |k: u64| ((n - k) as f64).ln() - ((k + 1) as f64).ln() + lp - lq;
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as u64;
    // levels relative to the mode; the cut keeps the trimmed mass of the
    // normalised law below TRIM_MASS
    let keep = (TRIM_MASS / (n + 1) as f64).ln();
    let mut atoms = BTreeMap::new();
    atoms.insert(mode as i64, 1.0f64);
    let mut lw = 0.0f64;
    for k in mode..n {
        lw += ratio(k);
        if lw < keep {
            break;
        }
        atoms.insert((k + 1) as i64, lw.exp());
    }
    lw = 0.0;
    for k in (0..mode).rev() {
        lw -= ratio(k);
        if lw < keep {
            break;
        }
        atoms.insert(k as i64, lw.exp());
    }
    let total = kahan_sum(atoms.values().copied());
    for w in atoms.values_mut() {
        *w /= total;
    }
    Ok(ExactPmf { atoms })
}

/// Exact convolution; the support is the Minkowski sum of the supports.
pub fn convolve(a: &ExactPmf, b: &ExactPmf) -> Result<ExactPmf> {
    if a.support_len() + b.support_len() > PMF_SUPPORT_BUDGET {
        return Err(Error::SizeBudget {
            atoms: a.support_len() + b.support_len(),
            budget: PMF_SUPPORT_BUDGET,
        });
    }
    let out_span = (a.max_value() - a.min_value()) as u128 + (b.max_value() - b.min_value()) as u128;
    if out_span >= PMF_SUPPORT_BUDGET as u128 {
        return Err(Error::SizeBudget {
            atoms: out_span as usize,
            budget: PMF_SUPPORT_BUDGET,
        });
    }
    // dense accumulation over the output range keeps the inner loop tight
    let lo = a.min_value() + b.min_value();
    let len = out_span as usize + 1;
    let mut dense = vec![0.0f64; len];
    for (va, wa) in a.atoms() {
        for (vb, wb) in b.atoms() {
            dense[(va + vb - lo) as usize] += wa * wb;
        }
    }
    let atoms: BTreeMap<i64, f64> = dense
        .into_iter()
        .enumerate()
        .filter(|&(_, w)| w > 0.0)
        .map(|(i, w)| (lo + i as i64, w))
        .collect();
    Ok(ExactPmf { atoms })
}

/// n-fold convolution power by binary exponentiation. A two-point law on
/// {0, 1} is routed through the binomial tabulation, which is both faster
/// and bit-identical with `exact_binomial_pmf`.
pub fn convolution_power(v: &ExactPmf, n: u64) -> Result<ExactPmf> {
    if n == 0 {
        return Ok(ExactPmf::point_mass(0));
    }
    if v.support_len() <= 2 && v.min_value() == 0 && v.max_value() <= 1 {
        return exact_binomial_pmf(n, v.weight(1));
    }
    let mut result: Option<ExactPmf> = None;
    let mut base = v.clone();
    let mut k = n;
    loop {
        if k & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => convolve(&r, &base)?,
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = convolve(&base, &base)?;
    }
    Ok(result.unwrap())
}
