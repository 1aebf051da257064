//! Marked-point functionals in the continuum: covered volume of a union of
//! balls, accepted-particle counts for sequential deposition, and
//! power-weighted nearest-neighbour distance sums.
//!
//! Each functional is evaluated at scale `r_n`: locations are rescaled by
//! `1/r_n` (equivalently, distances are compared against `r_n`), so a fixed
//! interaction range of 1 in rescaled coordinates drives all three models.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geograph::PointSample;
use crate::grid::{dist_sq, CellGrid};

/// Points with one optional real mark per point (ball radii for coverage,
/// arrival times for deposition; absent for nearest-neighbour sums). Marks
/// are drawn independently of locations.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedPointSample {
    pub base: PointSample,
    pub marks: Option<Vec<f64>>,
}

impl MarkedPointSample {
    pub fn unmarked(base: PointSample) -> Self {
        MarkedPointSample { base, marks: None }
    }

    /// Attach nonnegative radius marks.
    pub fn with_radii(base: PointSample, radii: Vec<f64>) -> Result<Self> {
        if radii.len() != base.len() {
            return Err(Error::Parameter("one radius mark per point required".into()));
        }
        if radii.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(Error::Parameter("radius marks must be finite and >= 0".into()));
        }
        Ok(MarkedPointSample {
            base,
            marks: Some(radii),
        })
    }

    /// Attach arrival-time marks in `[0, 1]`. Ties are legal; they are
    /// re-broken by point index during deposition.
    pub fn with_times(base: PointSample, times: Vec<f64>) -> Result<Self> {
        if times.len() != base.len() {
            return Err(Error::Parameter("one time mark per point required".into()));
        }
        if times.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::Parameter("time marks must lie in [0, 1]".into()));
        }
        Ok(MarkedPointSample {
            base,
            marks: Some(times),
        })
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    fn marks_required(&self) -> Result<&[f64]> {
        self.marks
            .as_deref()
            .ok_or_else(|| Error::Parameter("operation requires mark values".into()))
    }
}

/// How the covered volume is measured.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Integrator {
    /// Deterministic voxel count with spacing `h`; the reported bound counts
    /// voxels whose cube can straddle the union boundary.
    Grid { h: f64 },
    /// `samples` uniform draws over the bounding window, seeded for
    /// reproducibility. The reported bound is five binomial standard errors.
    MonteCarlo { samples: u64, seed: u64 },
}

/// Volume value plus a two-sided error bound for the chosen integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub error_bound: f64,
}

/// Lebesgue volume of the union of balls `B(x_i / r_n; t_i)` where `t_i`
/// are the radius marks.
pub fn germ_grain_volume(
    sample: &MarkedPointSample,
    r_n: f64,
    integrator: &Integrator,
) -> Result<VolumeEstimate> {
    if !(r_n > 0.0) || !r_n.is_finite() {
        return Err(Error::Parameter(format!("scale r_n = {r_n} must be positive")));
    }
    let radii = sample.marks_required()?;
    if sample.is_empty() {
        return Ok(VolumeEstimate {
            value: 0.0,
            error_bound: 0.0,
        });
    }
    let d = sample.base.d;
    let n = sample.len();

    // rescaled centres and the tight window around the union
    let mut centres = Vec::with_capacity(n * d);
    for p in sample.base.coords.chunks_exact(d) {
        centres.extend(p.iter().map(|&c| c / r_n));
    }
    let max_t = radii.iter().cloned().fold(0.0, f64::max);
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (i, c) in centres.chunks_exact(d).enumerate() {
        for j in 0..d {
            lo[j] = lo[j].min(c[j] - radii[i]);
            hi[j] = hi[j].max(c[j] + radii[i]);
        }
    }

    match *integrator {
        Integrator::Grid { h } => {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::Parameter(format!("grid spacing h = {h} must be positive")));
            }
            grid_volume(&centres, radii, d, &lo, &hi, h)
        }
        Integrator::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::Parameter("monte-carlo integrator needs samples >= 1".into()));
            }
            mc_volume(&centres, radii, d, &lo, &hi, max_t, samples, seed)
        }
    }
}

/// Voxel integrator. For every ball, rows of voxels are classified by
/// solving for the chord of the ball in the last axis, so the cost per ball
/// is proportional to its surface rows rather than its volume. A voxel
/// counts as covered when its centre lies in some ball; a voxel can be
/// misclassified only when its cube straddles the union boundary, in which
/// case its centre is within `h*sqrt(d)/2` of some sphere, and those voxels
/// are tallied into the error bound.
fn grid_volume(
    centres: &[f64],
    radii: &[f64],
    d: usize,
    lo: &[f64],
    hi: &[f64],
    h: f64,
) -> Result<VolumeEstimate> {
    let dims: Vec<usize> = (0..d)
        .map(|j| (((hi[j] - lo[j]) / h).ceil() as usize).max(1))
        .collect();
    let total: usize = dims.iter().product();
    if total > 1 << 31 {
        return Err(Error::Parameter(format!(
            "voxel grid of {total} cells is too large; increase h"
        )));
    }
    let words = (total + 63) / 64;
    let mut covered = vec![0u64; words];
    let mut boundary = vec![0u64; words];
    let delta = h * (d as f64).sqrt() / 2.0;

    // center of voxel k along axis j is lo[j] + (k + 0.5) h
    let centre_at = |j: usize, k: usize| lo[j] + (k as f64 + 0.5) * h;
    let range_for = |j: usize, a: f64, b: f64| -> (usize, usize) {
        let kmin = ((a - lo[j]) / h - 0.5).ceil().max(0.0) as usize;
        let kmax = (((b - lo[j]) / h - 0.5).floor() as i64).min(dims[j] as i64 - 1);
        (kmin, kmax.max(-1) as usize)
    };

    let last = d - 1;
    let row_len = dims[last];
    for (ball, c) in centres.chunks_exact(d).enumerate() {
        let t = radii[ball];
        let t_out = t + delta;
        let t_in = t - delta;

        // iterate over voxel rows: all axes but the last
        let mut row_idx = vec![0usize; last];
        let mut row_lo = vec![0usize; last];
        let mut row_hi = vec![0usize; last];
        let mut degenerate = false;
        for j in 0..last {
            let (a, b) = range_for(j, c[j] - t_out, c[j] + t_out);
            if b == usize::MAX || a > b {
                degenerate = true;
                break;
            }
            row_lo[j] = a;
            row_hi[j] = b;
            row_idx[j] = a;
        }
        if degenerate && last > 0 {
            continue;
        }

        loop {
            let mut rho2 = 0.0;
            for j in 0..last {
                let dc = centre_at(j, row_idx[j]) - c[j];
                rho2 += dc * dc;
            }
            if rho2 <= t_out * t_out {
                // flat index of the first voxel of this row
                let mut base = 0usize;
                for j in 0..last {
                    base = base * dims[j] + row_idx[j];
                }
                base *= row_len;

                let w_out = (t_out * t_out - rho2).sqrt();
                let (o_lo, o_hi) = range_for(last, c[last] - w_out, c[last] + w_out);
                if o_hi != usize::MAX && o_lo <= o_hi {
                    if t * t >= rho2 {
                        let w_cov = (t * t - rho2).sqrt();
                        let (k_lo, k_hi) = range_for(last, c[last] - w_cov, c[last] + w_cov);
                        if k_hi != usize::MAX && k_lo <= k_hi {
                            set_bit_range(&mut covered, base + k_lo, base + k_hi);
                        }
                    }
                    // ring voxels: inside the outer chord, outside the inner chord
                    let w_in2 = t_in * t_in - rho2;
                    if t_in > 0.0 && w_in2 > 0.0 {
                        let w_in = w_in2.sqrt();
                        // strictly-inside voxels have centres within w_in
                        let (i_lo, i_hi) = range_for(last, c[last] - w_in, c[last] + w_in);
                        if i_hi != usize::MAX && i_lo <= i_hi {
                            if o_lo < i_lo {
                                set_bit_range(&mut boundary, base + o_lo, base + i_lo - 1);
                            }
                            if i_hi < o_hi {
                                set_bit_range(&mut boundary, base + i_hi + 1, base + o_hi);
                            }
                        } else {
                            set_bit_range(&mut boundary, base + o_lo, base + o_hi);
                        }
                    } else {
                        set_bit_range(&mut boundary, base + o_lo, base + o_hi);
                    }
                }
            }
            // odometer over the row axes
            if last == 0 {
                break;
            }
            let mut j = last;
            loop {
                if j == 0 {
                    break;
                }
                j -= 1;
                row_idx[j] += 1;
                if row_idx[j] <= row_hi[j] {
                    break;
                }
                row_idx[j] = row_lo[j];
                if j == 0 {
                    j = usize::MAX;
                    break;
                }
            }
            if j == usize::MAX {
                break;
            }
        }
    }

    let h_d = h.powi(d as i32);
    let value = popcount(&covered) as f64 * h_d;
    let error_bound = popcount(&boundary) as f64 * h_d;
    Ok(VolumeEstimate { value, error_bound })
}

fn set_bit_range(bits: &mut [u64], from: usize, to: usize) {
    let (wf, wt) = (from / 64, to / 64);
    if wf == wt {
        let mask = (u64::MAX >> (63 - (to - from))) << (from % 64);
        bits[wf] |= mask;
        return;
    }
    bits[wf] |= u64::MAX << (from % 64);
    for w in bits.iter_mut().take(wt).skip(wf + 1) {
        *w = u64::MAX;
    }
    bits[wt] |= u64::MAX >> (63 - to % 64);
}

fn popcount(bits: &[u64]) -> u64 {
    bits.iter().map(|w| w.count_ones() as u64).sum()
}

#[allow(clippy::too_many_arguments)]
fn mc_volume(
    centres: &[f64],
    radii: &[f64],
    d: usize,
    lo: &[f64],
    hi: &[f64],
    max_t: f64,
    samples: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    let box_vol: f64 = (0..d).map(|j| hi[j] - lo[j]).product();
    if box_vol == 0.0 {
        return Ok(VolumeEstimate {
            value: 0.0,
            error_bound: 0.0,
        });
    }
    let grid = CellGrid::build(centres, d, lo, hi, max_t.max(1e-9));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    let mut x = vec![0.0; d];
    for _ in 0..samples {
        for (j, c) in x.iter_mut().enumerate() {
            *c = lo[j] + (hi[j] - lo[j]) * rng.random::<f64>();
        }
        let mut inside = false;
        grid.visit_neighbourhood(&x, |i| {
            if !inside {
                let c = &centres[i as usize * d..(i as usize + 1) * d];
                let t = radii[i as usize];
                if dist_sq(&x, c) <= t * t {
                    inside = true;
                }
            }
        });
        if inside {
            hits += 1;
        }
    }
    let frac = hits as f64 / samples as f64;
    let se = box_vol * (frac * (1.0 - frac) / samples as f64).sqrt();
    Ok(VolumeEstimate {
        value: box_vol * frac,
        error_bound: 5.0 * se,
    })
}

/// Number of accepted particles when points arrive in mark order and a
/// particle is accepted iff no previously accepted particle lies within
/// `r_n`. Equal marks are ordered by point index.
pub fn rsa_accepted_count(sample: &MarkedPointSample, r_n: f64) -> Result<u64> {
    Ok(rsa_accepted_set(sample, r_n)?.len() as u64)
}

/// Indices of the accepted particles, in arrival order.
pub fn rsa_accepted_set(sample: &MarkedPointSample, r_n: f64) -> Result<Vec<u32>> {
    if !(r_n > 0.0) || !r_n.is_finite() {
        return Err(Error::Parameter(format!("radius {r_n} must be positive")));
    }
    let times = sample.marks_required()?;
    let n = sample.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| {
        times[a as usize]
            .total_cmp(&times[b as usize])
            .then(a.cmp(&b))
    });
    let (lo, hi) = sample.base.bounding_box();
    let mut accepted = CellGrid::new(&lo, &hi, r_n);
    let r2 = r_n * r_n;
    let mut out = Vec::new();
    for &i in &order {
        let p = sample.base.point(i as usize);
        let mut blocked = false;
        accepted.visit_neighbourhood(p, |j| {
            if !blocked && dist_sq(p, sample.base.point(j as usize)) <= r2 {
                blocked = true;
            }
        });
        if !blocked {
            accepted.insert(p, i);
            out.push(i);
        }
    }
    Ok(out)
}

/// `r_n^{-alpha}` times the sum over points of the `kappa`-th nearest
/// neighbour distance raised to `alpha`. Errors when `n <= kappa`, where
/// the distance is infinite by convention.
pub fn knn_sum(sample: &MarkedPointSample, kappa: usize, alpha: f64, r_n: f64) -> Result<f64> {
    if kappa == 0 {
        return Err(Error::Parameter("kappa must be >= 1".into()));
    }
    if !(alpha > 0.0) || !(r_n > 0.0) {
        return Err(Error::Parameter("alpha and r_n must be positive".into()));
    }
    let n = sample.len();
    if n <= kappa {
        return Err(Error::InfiniteDistance { n, kappa });
    }
    let dists = knn_distances(&sample.base, kappa);
    let sum: f64 = dists.iter().map(|&d2| d2.sqrt().powf(alpha)).sum();
    Ok(r_n.powf(-alpha) * sum)
}

/// Squared `kappa`-th nearest neighbour distance for every point, found by
/// expanding-ring search over a cell grid sized to the mean point spacing.
pub fn knn_distances(sample: &PointSample, kappa: usize) -> Vec<f64> {
    let n = sample.len();
    let d = sample.d;
    let (lo, hi) = sample.bounding_box();
    let extent: f64 = (0..d).map(|j| hi[j] - lo[j]).product();
    let cell_w = if extent > 0.0 {
        (extent / n as f64).powf(1.0 / d as f64)
    } else {
        1.0
    };
    let grid = CellGrid::build(&sample.coords, d, &lo, &hi, cell_w.max(1e-300));

    let mut out = Vec::with_capacity(n);
    // max-heap of the best kappa squared distances seen so far
    let mut heap: Vec<f64> = Vec::with_capacity(kappa + 1);
    for i in 0..n {
        heap.clear();
        let p = sample.point(i);
        let mut ring = 0i64;
        loop {
            let in_grid = grid.visit_ring(p, ring, |j| {
                if j as usize != i {
                    let d2 = dist_sq(p, sample.point(j as usize));
                    if heap.len() < kappa {
                        heap.push(d2);
                        heap.sort_by(f64::total_cmp);
                    } else if d2 < heap[kappa - 1] {
                        heap[kappa - 1] = d2;
                        heap.sort_by(f64::total_cmp);
                    }
                }
            });
            // unscanned points are farther than ring * cell width
            let guarantee = grid.ring_guarantee(ring);
            if heap.len() == kappa && heap[kappa - 1] <= guarantee * guarantee {
                break;
            }
            if !in_grid && ring > 0 {
                break;
            }
            ring += 1;
        }
        out.push(heap[kappa - 1]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geograph::{sample_points, DensitySpec};
    use crate::rng::replicate_rng;
    use rand::Rng;
    use std::f64::consts::PI;

    fn marked(points: Vec<f64>, d: usize, radii: Vec<f64>) -> MarkedPointSample {
        MarkedPointSample::with_radii(PointSample::new(points, d).unwrap(), radii).unwrap()
    }

    #[test]
    fn single_disk_area() {
        for t in [0.4, 1.0, 1.7] {
            let s = marked(vec![0.3, -0.2], 2, vec![t]);
            let est = germ_grain_volume(&s, 1.0, &Integrator::Grid { h: t / 64.0 }).unwrap();
            let exact = PI * t * t;
            assert!(
                (est.value - exact).abs() <= est.error_bound,
                "t={t}: {} vs {exact} (bound {})",
                est.value,
                est.error_bound
            );
            assert!(est.error_bound < 0.15 * exact);
        }
    }

    #[test]
    fn disjoint_disks_add() {
        let s = marked(vec![0.0, 0.0, 10.0, 0.0], 2, vec![1.0, 0.5]);
        let est = germ_grain_volume(&s, 1.0, &Integrator::Grid { h: 1.0 / 96.0 }).unwrap();
        let exact = PI * (1.0 + 0.25);
        assert!((est.value - exact).abs() <= est.error_bound);
    }

    #[test]
    fn two_unit_disks_lens_overlap() {
        // centres at distance 1: union area = 2 pi - (2 acos(1/2) - sqrt(3)/2)
        let s = marked(vec![0.0, 0.0, 1.0, 0.0], 2, vec![1.0, 1.0]);
        let lens = 2.0 * (0.5f64).acos() - 0.5 * 3.0f64.sqrt();
        let exact = 2.0 * PI - lens;
        assert!((exact - 5.054815608571).abs() < 1e-9);
        let est = germ_grain_volume(&s, 1.0, &Integrator::Grid { h: 1.0 / 128.0 }).unwrap();
        assert!(
            (est.value - exact).abs() <= est.error_bound,
            "{} vs {exact} +- {}",
            est.value,
            est.error_bound
        );
    }

    #[test]
    fn rescaling_centres() {
        // r_n rescales locations but not radius marks
        let s = marked(vec![0.0, 0.0, 0.05, 0.0], 2, vec![1.0, 1.0]);
        let est = germ_grain_volume(&s, 0.05, &Integrator::Grid { h: 1.0 / 128.0 }).unwrap();
        let lens = 2.0 * (0.5f64).acos() - 0.5 * 3.0f64.sqrt();
        let exact = 2.0 * PI - lens;
        assert!((est.value - exact).abs() <= est.error_bound);
    }

    #[test]
    fn empty_sample_zero_volume() {
        let s = marked(Vec::new(), 2, Vec::new());
        let est = germ_grain_volume(&s, 1.0, &Integrator::Grid { h: 0.1 }).unwrap();
        assert_eq!(est.value, 0.0);
        let bad = germ_grain_volume(&marked(vec![0.0, 0.0], 2, vec![1.0]), 1.0, &Integrator::Grid { h: -0.5 });
        assert!(bad.is_err());
    }

    #[test]
    fn volume_monotone_in_radius_and_points() {
        let mut rng = replicate_rng(61, 0, 0);
        for trial in 0..20 {
            let n = 3 + trial % 4;
            let pts: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>() * 3.0).collect();
            let radii: Vec<f64> = (0..n).map(|_| 0.3 + rng.random::<f64>()).collect();
            let h = 0.02;
            let base = germ_grain_volume(&marked(pts.clone(), 2, radii.clone()), 1.0, &Integrator::Grid { h }).unwrap();

            let mut grown = radii.clone();
            grown[trial % n] += 0.4;
            let bigger = germ_grain_volume(&marked(pts.clone(), 2, grown), 1.0, &Integrator::Grid { h }).unwrap();
            assert!(bigger.value >= base.value);

            let mut more_pts = pts.clone();
            more_pts.extend([1.5, 1.5]);
            let mut more_r = radii.clone();
            more_r.push(0.5);
            let added = germ_grain_volume(&marked(more_pts, 2, more_r), 1.0, &Integrator::Grid { h }).unwrap();
            assert!(added.value >= base.value - base.error_bound - added.error_bound);

            // upper bound by the sum of ball volumes
            let cap: f64 = radii.iter().map(|t| PI * t * t).sum();
            assert!(base.value - base.error_bound <= cap + 1e-9);
        }
    }

    #[test]
    fn grid_and_monte_carlo_agree() {
        let mut rng = replicate_rng(62, 0, 0);
        for trial in 0..100u64 {
            let n = 2 + (trial % 5) as usize;
            let d = if trial % 3 == 0 { 3 } else { 2 };
            let pts: Vec<f64> = (0..d * n).map(|_| rng.random::<f64>() * 2.0).collect();
            let radii: Vec<f64> = (0..n).map(|_| 0.2 + 0.8 * rng.random::<f64>()).collect();
            let s = marked(pts, d, radii);
            let g = germ_grain_volume(&s, 1.0, &Integrator::Grid { h: 0.03 }).unwrap();
            let m = germ_grain_volume(
                &s,
                1.0,
                &Integrator::MonteCarlo { samples: 40_000, seed: 1000 + trial },
            )
            .unwrap();
            assert!(
                (g.value - m.value).abs() <= g.error_bound + m.error_bound,
                "trial {trial}: grid {} +- {}, mc {} +- {}",
                g.value,
                g.error_bound,
                m.value,
                m.error_bound
            );
        }
    }

    #[test]
    fn rsa_basic_chains() {
        // a single particle is always accepted
        let one = MarkedPointSample::with_times(PointSample::new(vec![0.2], 1).unwrap(), vec![0.5]).unwrap();
        assert_eq!(rsa_accepted_count(&one, 1.0).unwrap(), 1);

        // two points within range: the later one is rejected
        let two = MarkedPointSample::with_times(
            PointSample::new(vec![0.0, 0.0, 0.4, 0.0], 2).unwrap(),
            vec![0.1, 0.9],
        )
        .unwrap();
        assert_eq!(rsa_accepted_count(&two, 1.0).unwrap(), 1);

        // chain 0, 0.5, 2 arriving in order with r = 1: 0 accepted, 0.5
        // blocked by 0, 2 accepted
        let chain = MarkedPointSample::with_times(
            PointSample::new(vec![0.0, 0.5, 2.0], 1).unwrap(),
            vec![0.1, 0.2, 0.3],
        )
        .unwrap();
        assert_eq!(rsa_accepted_count(&chain, 1.0).unwrap(), 2);
        assert_eq!(rsa_accepted_set(&chain, 1.0).unwrap(), vec![0, 2]);
    }

    #[test]
    fn rsa_all_far_accepts_all_and_all_near_accepts_one() {
        let mut rng = replicate_rng(63, 0, 0);
        let n = 40;
        let far: Vec<f64> = (0..n).flat_map(|i| vec![i as f64 * 5.0, 0.0]).collect();
        let times: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let s = MarkedPointSample::with_times(PointSample::new(far, 2).unwrap(), times.clone()).unwrap();
        assert_eq!(rsa_accepted_count(&s, 1.0).unwrap(), n as u64);

        let near: Vec<f64> = (0..n).flat_map(|i| vec![i as f64 * 1e-4, 0.0]).collect();
        let s = MarkedPointSample::with_times(PointSample::new(near, 2).unwrap(), times).unwrap();
        assert_eq!(rsa_accepted_count(&s, 1.0).unwrap(), 1);
    }

    #[test]
    fn rsa_invariant_under_relabelling() {
        let mut rng = replicate_rng(64, 0, 0);
        let n = 60;
        let pts: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>()).collect();
        let times: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let sample =
            MarkedPointSample::with_times(PointSample::new(pts.clone(), 2).unwrap(), times.clone())
                .unwrap();
        let count = rsa_accepted_count(&sample, 0.08).unwrap();
        let set: std::collections::BTreeSet<Vec<u64>> = rsa_accepted_set(&sample, 0.08)
            .unwrap()
            .iter()
            .map(|&i| sample.base.point(i as usize).iter().map(|c| c.to_bits()).collect())
            .collect();

        // permute labels; accepted configuration must be identical
        let perm: Vec<usize> = (0..n).rev().collect();
        let pts2: Vec<f64> = perm.iter().flat_map(|&i| vec![pts[2 * i], pts[2 * i + 1]]).collect();
        let times2: Vec<f64> = perm.iter().map(|&i| times[i]).collect();
        let sample2 =
            MarkedPointSample::with_times(PointSample::new(pts2, 2).unwrap(), times2).unwrap();
        assert_eq!(rsa_accepted_count(&sample2, 0.08).unwrap(), count);
        let set2: std::collections::BTreeSet<Vec<u64>> = rsa_accepted_set(&sample2, 0.08)
            .unwrap()
            .iter()
            .map(|&i| sample2.base.point(i as usize).iter().map(|c| c.to_bits()).collect())
            .collect();
        assert_eq!(set, set2);
    }

    #[test]
    fn knn_tiny_cases() {
        // two points at distance D, kappa=1, alpha=1: sum = 2 D
        let s = MarkedPointSample::unmarked(PointSample::new(vec![0.0, 0.0, 0.0, 0.7], 2).unwrap());
        let v = knn_sum(&s, 1, 1.0, 1.0).unwrap();
        assert!((v - 1.4).abs() < 1e-12);

        // three collinear points spaced s: each nearest distance is s
        let s3 = MarkedPointSample::unmarked(PointSample::new(vec![0.0, 0.25, 0.5], 1).unwrap());
        let v3 = knn_sum(&s3, 1, 1.0, 1.0).unwrap();
        assert!((v3 - 0.75).abs() < 1e-12);

        // n <= kappa is an error
        assert!(matches!(
            knn_sum(&s3, 3, 1.0, 1.0),
            Err(Error::InfiniteDistance { n: 3, kappa: 3 })
        ));
    }

    #[test]
    fn knn_matches_all_pairs_oracle() {
        for d in 1..=3usize {
            let density = DensitySpec::UniformUnitCube { d };
            let s = sample_points(200, &density, &mut replicate_rng(65, d as u32, 0)).unwrap();
            for kappa in [1usize, 2, 5] {
                let fast = knn_distances(&s, kappa);
                for i in 0..s.len() {
                    let mut all: Vec<f64> = (0..s.len())
                        .filter(|&j| j != i)
                        .map(|j| dist_sq(s.point(i), s.point(j)))
                        .collect();
                    all.sort_by(f64::total_cmp);
                    let want = all[kappa - 1];
                    assert!(
                        (fast[i] - want).abs() <= 1e-12 * want.max(1.0),
                        "d={d} kappa={kappa} i={i}"
                    );
                }
            }
        }
    }

    #[test]
    fn knn_sum_oracle_and_scale_covariance() {
        let density = DensitySpec::UniformUnitCube { d: 2 };
        let s = sample_points(200, &density, &mut replicate_rng(66, 0, 0)).unwrap();
        let sample = MarkedPointSample::unmarked(s.clone());
        let (kappa, alpha) = (2usize, 1.5f64);
        let fast = knn_sum(&sample, kappa, alpha, 1.0).unwrap();
        let mut oracle = 0.0;
        for i in 0..s.len() {
            let mut all: Vec<f64> = (0..s.len())
                .filter(|&j| j != i)
                .map(|j| dist_sq(s.point(i), s.point(j)).sqrt())
                .collect();
            all.sort_by(f64::total_cmp);
            oracle += all[kappa - 1].powf(alpha);
        }
        assert!((fast - oracle).abs() <= 1e-12 * oracle);

        // scaling coordinates and r_n together leaves the value unchanged
        for c in [0.2, 3.5] {
            let scaled = PointSample::new(s.coords.iter().map(|&x| c * x).collect(), 2).unwrap();
            let v = knn_sum(&MarkedPointSample::unmarked(scaled), kappa, alpha, c).unwrap();
            assert!((v - fast).abs() <= 1e-11 * fast.abs());
        }
    }
}
