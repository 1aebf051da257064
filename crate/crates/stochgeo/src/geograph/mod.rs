//! Binomial point processes and geometric (Gilbert) graphs.
//!
//! Points are sampled i.i.d. from a bounded density with compact support,
//! a graph connects every pair at Euclidean distance at most `r`, and the
//! module counts induced subgraphs, components of a given shape, total
//! components and the independence number.

mod graph;
mod motif;

pub use graph::{build_graph, GeoGraph};
pub use motif::{
    count_components, count_components_isomorphic, count_induced_subgraphs, independence_number,
    MotifSpec,
};

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attempts allowed per point before rejection sampling reports a
/// malformed density.
pub const MAX_REJECTION_ATTEMPTS: u64 = 10_000;

/// A bounded probability density with compact support.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DensitySpec {
    /// Uniform on the unit cube `[0,1]^d`.
    UniformUnitCube { d: usize },
    /// Uniform on the centred ball of the given radius.
    UniformBall { d: usize, radius: f64 },
    /// Product of identical Beta(alpha, beta) marginals on `[0,1]^d`;
    /// `alpha, beta >= 1` keep the density bounded.
    ProductBeta { d: usize, alpha: f64, beta: f64 },
    /// Piecewise-constant density on `[0,1]^d` given by per-cell masses on
    /// a uniform grid (row-major, `cells_per_axis^d` entries).
    CustomGrid {
        d: usize,
        cells_per_axis: usize,
        masses: Vec<f64>,
    },
}

impl DensitySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DensitySpec::UniformUnitCube { d } => {
                if *d == 0 {
                    return Err(Error::Parameter("dimension must be >= 1".into()));
                }
            }
            DensitySpec::UniformBall { d, radius } => {
                if *d == 0 || !(*radius > 0.0) {
                    return Err(Error::Parameter("ball density needs d >= 1, radius > 0".into()));
                }
            }
            DensitySpec::ProductBeta { d, alpha, beta } => {
                if *d == 0 || !(*alpha >= 1.0) || !(*beta >= 1.0) {
                    return Err(Error::Parameter(
                        "product-beta needs d >= 1 and alpha, beta >= 1 (bounded density)".into(),
                    ));
                }
            }
            DensitySpec::CustomGrid {
                d,
                cells_per_axis,
                masses,
            } => {
                if *d == 0 || *cells_per_axis == 0 {
                    return Err(Error::Parameter("custom grid needs d, cells_per_axis >= 1".into()));
                }
                if masses.len() != cells_per_axis.pow(*d as u32) {
                    return Err(Error::Parameter(
                        "custom grid needs cells_per_axis^d masses".into(),
                    ));
                }
                if masses.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
                    return Err(Error::Parameter("grid masses must be finite and >= 0".into()));
                }
                if masses.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::Parameter("grid masses must not all vanish".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            DensitySpec::UniformUnitCube { d }
            | DensitySpec::UniformBall { d, .. }
            | DensitySpec::ProductBeta { d, .. }
            | DensitySpec::CustomGrid { d, .. } => *d,
        }
    }

    /// Axis-aligned bounding box of the support.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        match self {
            DensitySpec::UniformBall { radius, .. } => {
                (vec![-radius; d], vec![*radius; d])
            }
            _ => (vec![0.0; d], vec![1.0; d]),
        }
    }

    /// Normalised density value at `x` (zero outside the support).
    pub fn density_at(&self, x: &[f64]) -> f64 {
        match self {
            DensitySpec::UniformUnitCube { d } => {
                if x.iter().take(*d).all(|&c| (0.0..=1.0).contains(&c)) {
                    1.0
                } else {
                    0.0
                }
            }
            DensitySpec::UniformBall { d, radius } => {
                let r2: f64 = x.iter().take(*d).map(|&c| c * c).sum();
                if r2 <= radius * radius {
                    1.0 / (unit_ball_volume(*d) * radius.powi(*d as i32))
                } else {
                    0.0
                }
            }
            DensitySpec::ProductBeta { d, alpha, beta } => {
                let mut f = 1.0;
                for &c in x.iter().take(*d) {
                    if !(0.0..=1.0).contains(&c) {
                        return 0.0;
                    }
                    f *= c.powf(alpha - 1.0) * (1.0 - c).powf(beta - 1.0) / beta_fn(*alpha, *beta);
                }
                f
            }
            DensitySpec::CustomGrid {
                d,
                cells_per_axis,
                masses,
            } => {
                let m = *cells_per_axis;
                let total: f64 = masses.iter().sum();
                let cell_vol = (1.0 / m as f64).powi(*d as i32);
                let mut idx = 0usize;
                for &c in x.iter().take(*d) {
                    if !(0.0..=1.0).contains(&c) {
                        return 0.0;
                    }
                    let cell = ((c * m as f64) as usize).min(m - 1);
                    idx = idx * m + cell;
                }
                masses[idx] / total / cell_vol
            }
        }
    }

    /// Supremum of the density.
    pub fn f_max(&self) -> f64 {
        match self {
            DensitySpec::UniformUnitCube { .. } => 1.0,
            DensitySpec::UniformBall { d, radius } => {
                1.0 / (unit_ball_volume(*d) * radius.powi(*d as i32))
            }
            DensitySpec::ProductBeta { d, alpha, beta } => {
                let peak = if alpha + beta > 2.0 {
                    let mode = (alpha - 1.0) / (alpha + beta - 2.0);
                    mode.powf(alpha - 1.0) * (1.0 - mode).powf(beta - 1.0) / beta_fn(*alpha, *beta)
                } else {
                    1.0
                };
                peak.powi(*d as i32)
            }
            DensitySpec::CustomGrid {
                d,
                cells_per_axis,
                masses,
            } => {
                let total: f64 = masses.iter().sum();
                let cell_vol = (1.0 / *cells_per_axis as f64).powi(*d as i32);
                masses.iter().cloned().fold(0.0, f64::max) / total / cell_vol
            }
        }
    }
}

/// Volume of the d-dimensional unit ball.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

fn beta_fn(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Lanczos log-gamma, enough precision for density normalisation.
fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = G[0];
        let t = x + 7.5;
        for (i, &g) in G.iter().enumerate().skip(1) {
            a += g / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

/// `n` points in `R^d`, flat row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    pub coords: Vec<f64>,
    pub d: usize,
}

impl PointSample {
    pub fn new(coords: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || coords.len() % d != 0 {
            return Err(Error::Parameter("coords length must be a multiple of d >= 1".into()));
        }
        Ok(PointSample { coords, d })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    /// Tight axis-aligned bounding box of the points (zero-size for n = 0).
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.d;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in self.coords.chunks_exact(d) {
            for j in 0..d {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        if self.is_empty() {
            lo = vec![0.0; d];
            hi = vec![0.0; d];
        }
        (lo, hi)
    }
}

/// Draw `n` i.i.d. points from the density. Grid densities are sampled by
/// rejection against their supremum; the attempt budget guards against a
/// malformed density.
pub fn sample_points<R: Rng>(n: usize, density: &DensitySpec, rng: &mut R) -> Result<PointSample> {
    density.validate()?;
    let d = density.dim();
    let mut coords = Vec::with_capacity(n * d);
    match density {
        DensitySpec::UniformUnitCube { .. } => {
            for _ in 0..n * d {
                coords.push(rng.random::<f64>());
            }
        }
        DensitySpec::UniformBall { radius, .. } => {
            for _ in 0..n {
                // isotropic direction from a Gaussian vector, radius from
                // the volume-uniform radial law
                let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let norm = g.iter().map(|&c| c * c).sum::<f64>().sqrt();
                let u: f64 = rng.random();
                let r = radius * u.powf(1.0 / d as f64);
                if norm == 0.0 {
                    coords.extend(std::iter::repeat(0.0).take(d));
                } else {
                    coords.extend(g.iter().map(|&c| c / norm * r));
                }
            }
        }
        DensitySpec::ProductBeta { alpha, beta, .. } => {
            let dist = Beta::new(*alpha, *beta)
                .map_err(|e| Error::Parameter(format!("beta parameters: {e}")))?;
            for _ in 0..n * d {
                coords.push(dist.sample(rng));
            }
        }
        DensitySpec::CustomGrid { .. } => {
            let f_max = density.f_max();
            let mut x = vec![0.0; d];
            for _ in 0..n {
                let mut accepted = false;
                for _ in 0..MAX_REJECTION_ATTEMPTS {
                    for c in x.iter_mut() {
                        *c = rng.random::<f64>();
                    }
                    let u: f64 = rng.random();
                    if u * f_max <= density.density_at(&x) {
                        coords.extend_from_slice(&x);
                        accepted = true;
                        break;
                    }
                }
                if !accepted {
                    return Err(Error::SamplingFailure {
                        attempts: MAX_REJECTION_ATTEMPTS,
                    });
                }
            }
        }
    }
    PointSample::new(coords, d)
}

/// Rule mapping the sample size `n` to the connection radius `r_n`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum RadiusSchedule {
    /// `r_n = (rho / n)^(1/d)`, so that `n r_n^d = rho` exactly.
    RhoThermodynamic { rho: f64 },
    /// `r_n = beta * n^(-gamma)`; the mean degree vanishes when
    /// `gamma > 1/d`.
    Sparse { beta: f64, gamma: f64 },
    /// `r_n = n^(-1/d)`, so `|r_n^{-d} - n| = 0`.
    Strong,
}

impl RadiusSchedule {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            RadiusSchedule::RhoThermodynamic { rho } => {
                if !(*rho > 0.0) || !rho.is_finite() {
                    return Err(Error::Parameter("rho must be positive and finite".into()));
                }
            }
            RadiusSchedule::Sparse { beta, gamma } => {
                if !(*beta > 0.0) || !(*gamma > 1.0 / d as f64) {
                    return Err(Error::Parameter(format!(
                        "sparse schedule needs beta > 0 and gamma > 1/d = {}",
                        1.0 / d as f64
                    )));
                }
            }
            RadiusSchedule::Strong => {}
        }
        Ok(())
    }

    pub fn radius(&self, n: u64, d: usize) -> f64 {
        let nf = n as f64;
        match self {
            RadiusSchedule::RhoThermodynamic { rho } => (rho / nf).powf(1.0 / d as f64),
            RadiusSchedule::Sparse { beta, gamma } => beta * nf.powf(-gamma),
            RadiusSchedule::Strong => nf.powf(-1.0 / d as f64),
        }
    }

    /// `n r_n^d`, the mean-degree scale.
    pub fn intensity(&self, n: u64, d: usize) -> f64 {
        let nf = n as f64;
        nf * self.radius(n, d).powi(d as i32)
    }
}

/// Scale `tau_n = sqrt( n (n r_n^d)^(kappa-1) )` governing the variance of
/// order-`kappa` subgraph counts.
pub fn tau_n(n: u64, schedule: &RadiusSchedule, d: usize, kappa: usize) -> f64 {
    let nf = n as f64;
    (nf * schedule.intensity(n, d).powi(kappa as i32 - 1)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;

    #[test]
    fn empty_sample() {
        let density = DensitySpec::UniformUnitCube { d: 2 };
        let s = sample_points(0, &density, &mut replicate_rng(1, 0, 0)).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn uniform_cube_axis_means() {
        let density = DensitySpec::UniformUnitCube { d: 2 };
        let n = 10_000;
        let s = sample_points(n, &density, &mut replicate_rng(5, 0, 0)).unwrap();
        for axis in 0..2 {
            let mean: f64 =
                (0..n).map(|i| s.point(i)[axis]).sum::<f64>() / n as f64;
            // Var of a U[0,1] mean over n draws is 1/(12 n).
            let se = (1.0 / (12.0 * n as f64)).sqrt();
            assert!((mean - 0.5).abs() < 4.0 * se, "axis {axis} mean {mean}");
        }
    }

    #[test]
    fn ball_sample_stays_inside() {
        let density = DensitySpec::UniformBall { d: 3, radius: 2.0 };
        let s = sample_points(2000, &density, &mut replicate_rng(6, 0, 0)).unwrap();
        for i in 0..s.len() {
            let r2: f64 = s.point(i).iter().map(|&c| c * c).sum();
            assert!(r2 <= 4.0 + 1e-12);
        }
    }

    #[test]
    fn custom_grid_chi_square_fit() {
        // 4x4 grid with uneven masses; chi-square GOF at significance 1e-3.
        let masses: Vec<f64> = (0..16).map(|i| 1.0 + (i % 4) as f64).collect();
        let density = DensitySpec::CustomGrid {
            d: 2,
            cells_per_axis: 4,
            masses: masses.clone(),
        };
        let n = 10_000;
        let s = sample_points(n, &density, &mut replicate_rng(7, 0, 0)).unwrap();
        let mut observed = vec![0u64; 16];
        for i in 0..n {
            let p = s.point(i);
            let cx = ((p[0] * 4.0) as usize).min(3);
            let cy = ((p[1] * 4.0) as usize).min(3);
            observed[cx * 4 + cy] += 1;
        }
        let total: f64 = masses.iter().sum();
        let chi2: f64 = (0..16)
            .map(|c| {
                let expect = n as f64 * masses[c] / total;
                let diff = observed[c] as f64 - expect;
                diff * diff / expect
            })
            .sum();
        // chi-square 0.999 quantile, 15 degrees of freedom
        assert!(chi2 < 37.697298218, "chi2 = {chi2}");
    }

    #[test]
    fn malformed_grid_rejected() {
        let density = DensitySpec::CustomGrid {
            d: 1,
            cells_per_axis: 2,
            masses: vec![0.0, 0.0],
        };
        assert!(sample_points(10, &density, &mut replicate_rng(1, 0, 0)).is_err());
    }

    #[test]
    fn schedule_arithmetic() {
        let thermo = RadiusSchedule::RhoThermodynamic { rho: 1.0 };
        assert!((tau_n(1000, &thermo, 2, 2) - 1000f64.sqrt()).abs() < 1e-12);
        assert!((thermo.intensity(12345, 3) - 1.0).abs() < 1e-12);

        // kappa = 2: tau^2 = n * (n r_n^d)
        let sparse = RadiusSchedule::Sparse { beta: 1.0, gamma: 0.6 };
        let t2 = tau_n(10_000, &sparse, 1, 2).powi(2);
        let expect = 10_000f64 * (10_000f64 * 10_000f64.powf(-0.6));
        assert!((t2 - expect).abs() / expect < 1e-12);
        assert!(t2 > 1.0);
        assert!(tau_n(100_000, &sparse, 1, 2) > tau_n(10_000, &sparse, 1, 2));

        let strong = RadiusSchedule::Strong;
        assert!((strong.radius(500, 2).powi(-2) - 500.0).abs() < 1e-9);
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-12);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn beta_density_integrates_to_its_mass() {
        // crude Riemann check of the normalisation helper
        let density = DensitySpec::ProductBeta { d: 1, alpha: 2.0, beta: 3.0 };
        let steps = 20_000;
        let sum: f64 = (0..steps)
            .map(|i| density.density_at(&[(i as f64 + 0.5) / steps as f64]) / steps as f64)
            .sum();
        assert!((sum - 1.0).abs() < 1e-6, "integral {sum}");
    }
}
