//! Site percolation on finite lattice boxes.
//!
//! A configuration opens each site of a box independently with probability
//! `p`; two open sites are adjacent when they sit at unit Euclidean distance
//! (the 2d face-neighbour rule). The functionals of interest are the number
//! of open clusters and the order of the largest open cluster.

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;

use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

/// Axis-aligned box of lattice sites `{lo[j], .., hi[j]}` per axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBox {
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl LatticeBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Parameter(
                "box endpoints must be non-empty vectors of equal dimension".into(),
            ));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Parameter("box requires lo[j] <= hi[j]".into()));
        }
        Ok(LatticeBox { lo, hi })
    }

    /// Box anchored at the origin with the given side lengths (in sites).
    pub fn anchored(sides: &[i64]) -> Result<Self> {
        if sides.iter().any(|&s| s < 1) {
            return Err(Error::Parameter("side lengths must be >= 1".into()));
        }
        LatticeBox::new(vec![0; sides.len()], sides.iter().map(|s| s - 1).collect())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Side lengths in sites, per axis.
    pub fn sides(&self) -> Vec<i64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a + 1)
            .collect()
    }

    /// Number of sites in the box.
    pub fn site_count(&self) -> u64 {
        self.sides().iter().map(|&s| s as u64).product()
    }

    /// min side / max side, in (0, 1]. A ladder of boxes is cube-like when
    /// this ratio stays bounded away from zero along the ladder.
    pub fn cube_like_ratio(&self) -> f64 {
        let sides = self.sides();
        let min = *sides.iter().min().unwrap() as f64;
        let max = *sides.iter().max().unwrap() as f64;
        min / max
    }

    /// Number of sites outside the box at unit Euclidean distance from it:
    /// one face neighbour per boundary face, no corners. For side lengths
    /// `s_1..s_d` this is `sum_j 2 * prod_{k != j} s_k`.
    pub fn boundary_count(&self) -> u64 {
        let sides = self.sides();
        let mut total = 0u64;
        for j in 0..sides.len() {
            let mut face = 2u64;
            for (k, &s) in sides.iter().enumerate() {
                if k != j {
                    face *= s as u64;
                }
            }
            total += face;
        }
        total
    }

    /// Row-major site index of a coordinate (last axis varies fastest).
    pub fn index_of(&self, coord: &[i64]) -> usize {
        let sides = self.sides();
        let mut idx = 0usize;
        for j in 0..self.dim() {
            idx = idx * sides[j] as usize + (coord[j] - self.lo[j]) as usize;
        }
        idx
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn coord_of(&self, mut idx: usize) -> Vec<i64> {
        let sides = self.sides();
        let mut coord = vec![0i64; self.dim()];
        for j in (0..self.dim()).rev() {
            let s = sides[j] as usize;
            coord[j] = self.lo[j] + (idx % s) as i64;
            idx /= s;
        }
        coord
    }

    pub fn contains(&self, coord: &[i64]) -> bool {
        coord
            .iter()
            .enumerate()
            .all(|(j, &c)| c >= self.lo[j] && c <= self.hi[j])
    }

    /// Row-major index strides per axis.
    fn strides(&self) -> Vec<usize> {
        let sides = self.sides();
        let mut strides = vec![1usize; self.dim()];
        for j in (0..self.dim().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * sides[j + 1] as usize;
        }
        strides
    }
}

/// An open/closed assignment over the sites of a box.
#[derive(Debug, Clone)]
pub struct SiteConfiguration {
    pub bbox: LatticeBox,
    pub open: Vec<bool>,
    pub p: f64,
}

impl SiteConfiguration {
    /// Build from an explicit mask (row-major over the box sites).
    pub fn from_mask(bbox: LatticeBox, open: Vec<bool>, p: f64) -> Result<Self> {
        if open.len() as u64 != bbox.site_count() {
            return Err(Error::Parameter("mask length must equal site count".into()));
        }
        Ok(SiteConfiguration { bbox, open, p })
    }

    pub fn open_count(&self) -> u64 {
        self.open.iter().filter(|&&o| o).count() as u64
    }
}

/// Open each site independently with probability `p`. Deterministic given
/// the RNG state, the box and `p`.
pub fn sample_configuration<R: Rng>(bbox: &LatticeBox, p: f64, rng: &mut R) -> Result<SiteConfiguration> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p} outside [0, 1]")));
    }
    let n = bbox.site_count() as usize;
    let bern = Bernoulli::new(p).expect("p validated");
    let open: Vec<bool> = (0..n).map(|_| bern.sample(rng)).collect();
    Ok(SiteConfiguration {
        bbox: bbox.clone(),
        open,
        p,
    })
}

/// Cluster count and largest-cluster order of a configuration, in one pass.
pub fn cluster_stats(config: &SiteConfiguration) -> (u64, u64) {
    let n = config.open.len();
    let strides = config.bbox.strides();
    let sides = config.bbox.sides();
    let d = config.bbox.dim();

    let mut uf = UnionFind::new(n);
    // Union each open site with its open +axis neighbours. Index arithmetic
    // is valid because a +axis neighbour inside the box differs by exactly
    // one stride in row-major order.
    let mut coord_digits = vec![0i64; d];
    for idx in 0..n {
        if config.open[idx] {
            for j in 0..d {
                if coord_digits[j] + 1 < sides[j] {
                    let nb = idx + strides[j];
                    if config.open[nb] {
                        uf.union(idx as u32, nb as u32);
                    }
                }
            }
        }
        // Odometer increment of the row-major digit vector.
        for j in (0..d).rev() {
            coord_digits[j] += 1;
            if coord_digits[j] < sides[j] {
                break;
            }
            coord_digits[j] = 0;
        }
    }

    let mut clusters = 0u64;
    let mut largest = 0u64;
    for idx in 0..n {
        if config.open[idx] && uf.is_root(idx as u32) {
            clusters += 1;
            largest = largest.max(uf.set_size(idx as u32) as u64);
        }
    }
    (clusters, largest)
}

/// Number of open clusters (connected components of open sites under the
/// unit-distance adjacency).
pub fn count_clusters(config: &SiteConfiguration) -> u64 {
    cluster_stats(config).0
}

/// Order of the largest open cluster; 0 when no site is open.
pub fn largest_cluster(config: &SiteConfiguration) -> u64 {
    cluster_stats(config).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use rand::Rng;
    use std::collections::{HashSet, VecDeque};

    /// Flood-fill oracle: BFS over coordinates, independent of the
    /// union-find engine and of the stride arithmetic.
    fn flood_fill_stats(config: &SiteConfiguration) -> (u64, u64) {
        let b = &config.bbox;
        let n = config.open.len();
        let mut seen = vec![false; n];
        let mut clusters = 0u64;
        let mut largest = 0u64;
        for start in 0..n {
            if !config.open[start] || seen[start] {
                continue;
            }
            clusters += 1;
            let mut size = 0u64;
            let mut queue = VecDeque::new();
            queue.push_back(start);
            seen[start] = true;
            while let Some(idx) = queue.pop_front() {
                size += 1;
                let coord = b.coord_of(idx);
                for j in 0..b.dim() {
                    for delta in [-1i64, 1] {
                        let mut nb = coord.clone();
                        nb[j] += delta;
                        if b.contains(&nb) {
                            let nidx = b.index_of(&nb);
                            if config.open[nidx] && !seen[nidx] {
                                seen[nidx] = true;
                                queue.push_back(nidx);
                            }
                        }
                    }
                }
            }
            largest = largest.max(size);
        }
        (clusters, largest)
    }

    /// Enumeration oracle for the exterior unit-neighbour count.
    fn boundary_enumeration(b: &LatticeBox) -> u64 {
        let mut outside = HashSet::new();
        for idx in 0..b.site_count() as usize {
            let coord = b.coord_of(idx);
            for j in 0..b.dim() {
                for delta in [-1i64, 1] {
                    let mut nb = coord.clone();
                    nb[j] += delta;
                    if !b.contains(&nb) {
                        outside.insert(nb);
                    }
                }
            }
        }
        outside.len() as u64
    }

    fn random_mask_config(b: &LatticeBox, fill: f64, rng: &mut impl Rng) -> SiteConfiguration {
        let open = (0..b.site_count()).map(|_| rng.random::<f64>() < fill).collect();
        SiteConfiguration::from_mask(b.clone(), open, fill).unwrap()
    }

    #[test]
    fn degenerate_probabilities() {
        let b = LatticeBox::anchored(&[4, 4]).unwrap();
        let mut rng = replicate_rng(7, 0, 0);
        let closed = sample_configuration(&b, 0.0, &mut rng).unwrap();
        assert_eq!(closed.open_count(), 0);
        assert_eq!(cluster_stats(&closed), (0, 0));
        let open = sample_configuration(&b, 1.0, &mut rng).unwrap();
        assert_eq!(open.open_count(), 16);
        assert_eq!(cluster_stats(&open), (1, 16));
    }

    #[test]
    fn sampling_is_deterministic() {
        let b = LatticeBox::anchored(&[3, 3]).unwrap();
        let a = sample_configuration(&b, 0.5, &mut replicate_rng(11, 2, 5)).unwrap();
        let c = sample_configuration(&b, 0.5, &mut replicate_rng(11, 2, 5)).unwrap();
        assert_eq!(a.open, c.open);
    }

    #[test]
    fn diagonal_sites_are_not_adjacent() {
        let b = LatticeBox::anchored(&[2, 2]).unwrap();
        let mut open = vec![false; 4];
        open[b.index_of(&[0, 0])] = true;
        open[b.index_of(&[1, 1])] = true;
        let cfg = SiteConfiguration::from_mask(b, open, 0.5).unwrap();
        assert_eq!(count_clusters(&cfg), 2);
        assert_eq!(largest_cluster(&cfg), 1);
    }

    #[test]
    fn single_open_site() {
        let b = LatticeBox::anchored(&[5]).unwrap();
        let mut open = vec![false; 5];
        open[2] = true;
        let cfg = SiteConfiguration::from_mask(b, open, 0.1).unwrap();
        assert_eq!(largest_cluster(&cfg), 1);
        assert_eq!(count_clusters(&cfg), 1);
    }

    #[test]
    fn boundary_count_formula() {
        let b = LatticeBox::anchored(&[1, 1]).unwrap();
        assert_eq!(b.boundary_count(), 4);
        let b = LatticeBox::anchored(&[2, 3]).unwrap();
        assert_eq!(b.boundary_count(), 10);
        for n in 1..=10 {
            let b = LatticeBox::anchored(&[n, n]).unwrap();
            assert_eq!(b.boundary_count(), 4 * n as u64);
            assert_eq!(b.boundary_count(), boundary_enumeration(&b));
        }
        // Oracle across dimensions and aspect ratios.
        for sides in [vec![7], vec![4, 9], vec![2, 3, 5], vec![1, 6, 2]] {
            let b = LatticeBox::anchored(&sides).unwrap();
            assert_eq!(b.boundary_count(), boundary_enumeration(&b));
        }
    }

    #[test]
    fn matches_flood_fill_oracle_on_random_masks() {
        let boxes = [
            LatticeBox::anchored(&[16]).unwrap(),
            LatticeBox::anchored(&[16, 16]).unwrap(),
            LatticeBox::anchored(&[5, 5, 5]).unwrap(),
            LatticeBox::new(vec![-3, 2], vec![6, 4]).unwrap(),
        ];
        let mut rng = replicate_rng(3, 0, 0);
        for b in &boxes {
            for trial in 0..250 {
                let fill = (trial % 10) as f64 / 10.0 + 0.05;
                let cfg = random_mask_config(b, fill.min(0.95), &mut rng);
                assert_eq!(cluster_stats(&cfg), flood_fill_stats(&cfg));
            }
        }
    }

    #[test]
    fn largest_cluster_random_5x5_oracle() {
        let b = LatticeBox::anchored(&[5, 5]).unwrap();
        let mut rng = replicate_rng(19, 0, 0);
        for _ in 0..1000 {
            let cfg = random_mask_config(&b, rng.random::<f64>(), &mut rng);
            let (lam, big) = cluster_stats(&cfg);
            let (lam_o, big_o) = flood_fill_stats(&cfg);
            assert_eq!(lam, lam_o);
            assert_eq!(big, big_o);
            let open = cfg.open_count();
            assert!(big <= open && lam <= open);
            assert_eq!(lam == 0, big == 0);
        }
    }

    #[test]
    fn opening_one_site_adds_at_most_one_cluster() {
        let b = LatticeBox::anchored(&[6, 6]).unwrap();
        let mut rng = replicate_rng(23, 0, 0);
        for _ in 0..200 {
            let mut cfg = random_mask_config(&b, 0.5, &mut rng);
            let (lam0, big0) = cluster_stats(&cfg);
            let closed: Vec<usize> =
                (0..cfg.open.len()).filter(|&i| !cfg.open[i]).collect();
            if closed.is_empty() {
                continue;
            }
            let pick = closed[rng.random_range(0..closed.len())];
            cfg.open[pick] = true;
            let (lam1, big1) = cluster_stats(&cfg);
            assert!(lam1 <= lam0 + 1, "cluster count may grow by at most one");
            assert!(big1 >= big0, "largest cluster is monotone");
        }
    }

    /// Exact PMF of the cluster count on a tiny box by exhausting all
    /// 2^sites masks, against the empirical PMF over seeded replicates.
    #[test]
    fn small_box_pmf_matches_enumeration() {
        let b = LatticeBox::anchored(&[2, 2]).unwrap();
        let p: f64 = 0.5;
        let sites = b.site_count() as usize;
        let mut exact = std::collections::BTreeMap::new();
        for mask in 0..(1u32 << sites) {
            let open: Vec<bool> = (0..sites).map(|i| mask >> i & 1 == 1).collect();
            let k = open.iter().filter(|&&o| o).count() as i32;
            let w = p.powi(k) * (1.0 - p).powi(sites as i32 - k);
            let cfg = SiteConfiguration::from_mask(b.clone(), open, p).unwrap();
            let (lam, _) = flood_fill_stats(&cfg);
            *exact.entry(lam).or_insert(0.0) += w;
        }

        let reps = 100_000u32;
        let mut counts = std::collections::BTreeMap::new();
        for rep in 0..reps {
            let mut rng = replicate_rng(99, 0, rep);
            let cfg = sample_configuration(&b, p, &mut rng).unwrap();
            *counts.entry(count_clusters(&cfg)).or_insert(0u64) += 1;
        }
        for (&lam, &prob) in &exact {
            let freq = *counts.get(&lam).unwrap_or(&0) as f64 / reps as f64;
            let se = (prob * (1.0 - prob) / reps as f64).sqrt();
            assert!(
                (freq - prob).abs() <= 4.0 * se,
                "atom {lam}: freq {freq} vs exact {prob} (se {se})"
            );
        }
    }
}
