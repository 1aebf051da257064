//! Replicate values aggregated into a probability table with moment
//! accumulators.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for treating a replicate value as an integer.
pub const INTEGER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistKind {
    /// Values are integers; the atom key is the value itself.
    IntegerLattice,
    /// Values are real; the atom key is the bin index under bins
    /// `[k*w, (k+1)*w)` anchored at zero.
    RealBinned { bin_width: f64 },
}

/// Counts per atom plus running sums of the raw values. Integer-lattice
/// distributions keep exact integer accumulators, so shard merges are
/// exactly associative; real-binned merges are associative up to float
/// rounding and callers that need bit-stable output merge shards in a
/// fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    kind: DistKind,
    atoms: BTreeMap<i64, u64>,
    n_samples: u64,
    sum: f64,
    sum_sq: f64,
    int_sum: i128,
    int_sum_sq: i128,
}

impl EmpiricalDistribution {
    pub fn new(kind: DistKind) -> Result<Self> {
        if let DistKind::RealBinned { bin_width } = &kind {
            if !(*bin_width > 0.0) || !bin_width.is_finite() {
                return Err(Error::Parameter("bin width must be positive and finite".into()));
            }
        }
        Ok(EmpiricalDistribution {
            kind,
            atoms: BTreeMap::new(),
            n_samples: 0,
            sum: 0.0,
            sum_sq: 0.0,
            int_sum: 0,
            int_sum_sq: 0,
        })
    }

    pub fn integer() -> Self {
        EmpiricalDistribution::new(DistKind::IntegerLattice).unwrap()
    }

    pub fn binned(bin_width: f64) -> Result<Self> {
        EmpiricalDistribution::new(DistKind::RealBinned { bin_width })
    }

    pub fn kind(&self) -> &DistKind {
        &self.kind
    }

    pub fn accumulate(&mut self, value: f64) -> Result<()> {
        match &self.kind {
            DistKind::IntegerLattice => {
                let rounded = value.round();
                if (value - rounded).abs() > INTEGER_TOL || !value.is_finite() {
                    return Err(Error::KindMismatch { value });
                }
                self.accumulate_int(rounded as i64);
            }
            DistKind::RealBinned { bin_width } => {
                if !value.is_finite() {
                    return Err(Error::KindMismatch { value });
                }
                let idx = (value / bin_width).floor() as i64;
                *self.atoms.entry(idx).or_insert(0) += 1;
                self.n_samples += 1;
                self.sum += value;
                self.sum_sq += value * value;
            }
        }
        Ok(())
    }

    pub fn accumulate_int(&mut self, value: i64) {
        debug_assert!(matches!(self.kind, DistKind::IntegerLattice));
        *self.atoms.entry(value).or_insert(0) += 1;
        self.n_samples += 1;
        self.int_sum += value as i128;
        self.int_sum_sq += (value as i128) * (value as i128);
    }

    /// Associative, commutative shard merge.
    pub fn merge(&mut self, other: &EmpiricalDistribution) -> Result<()> {
        if self.kind != other.kind {
            return Err(Error::Parameter("cannot merge distributions of different kinds".into()));
        }
        for (&k, &c) in &other.atoms {
            *self.atoms.entry(k).or_insert(0) += c;
        }
        self.n_samples += other.n_samples;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.int_sum += other.int_sum;
        self.int_sum_sq += other.int_sum_sq;
        Ok(())
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    pub fn is_empty(&self) -> bool {
        self.n_samples == 0
    }

    /// Atom table: key is the integer value (integer-lattice) or bin index.
    pub fn atoms(&self) -> impl DoubleEndedIterator<Item = (i64, u64)> + '_ {
        self.atoms.iter().map(|(&k, &c)| (k, c))
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Left edge of the atom: the value itself for integer lattices, the
    /// bin's lower boundary otherwise.
    pub fn atom_position(&self, key: i64) -> f64 {
        match &self.kind {
            DistKind::IntegerLattice => key as f64,
            DistKind::RealBinned { bin_width } => key as f64 * bin_width,
        }
    }

    pub fn mean(&self) -> f64 {
        match self.kind {
            DistKind::IntegerLattice => self.int_sum as f64 / self.n_samples as f64,
            DistKind::RealBinned { .. } => self.sum / self.n_samples as f64,
        }
    }

    /// Unbiased sample variance.
    pub fn sample_variance(&self) -> f64 {
        let n = self.n_samples as f64;
        if self.n_samples < 2 {
            return 0.0;
        }
        let var = match self.kind {
            DistKind::IntegerLattice => {
                let sum = self.int_sum as f64;
                (self.int_sum_sq as f64 - sum * sum / n) / (n - 1.0)
            }
            DistKind::RealBinned { .. } => (self.sum_sq - self.sum * self.sum / n) / (n - 1.0),
        };
        var.max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn accumulate_and_moments() {
        let mut d = EmpiricalDistribution::integer();
        d.accumulate(3.0).unwrap();
        assert_eq!(d.n_samples(), 1);
        assert_eq!(d.atoms().collect::<Vec<_>>(), vec![(3, 1)]);
        d.accumulate(5.0).unwrap();
        d.accumulate(4.0).unwrap();
        assert!((d.mean() - 4.0).abs() < 1e-15);
        assert!((d.sample_variance() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn integer_kind_rejects_non_integers() {
        let mut d = EmpiricalDistribution::integer();
        assert!(matches!(
            d.accumulate(3.5),
            Err(Error::KindMismatch { .. })
        ));
        // within tolerance is fine
        d.accumulate(2.0 + 1e-12).unwrap();
        assert_eq!(d.atoms().next(), Some((2, 1)));
    }

    #[test]
    fn binned_key_is_floor() {
        let mut d = EmpiricalDistribution::binned(0.5).unwrap();
        d.accumulate(0.74).unwrap();
        d.accumulate(-0.1).unwrap();
        d.accumulate(1.0).unwrap();
        let keys: Vec<i64> = d.atoms().map(|(k, _)| k).collect();
        assert_eq!(keys, vec![-1, 1, 2]);
        assert!((d.atom_position(2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn merge_counts_add() {
        let mut a = EmpiricalDistribution::integer();
        let mut b = EmpiricalDistribution::integer();
        a.accumulate_int(1);
        a.accumulate_int(2);
        b.accumulate_int(2);
        a.merge(&b).unwrap();
        assert_eq!(a.n_samples(), 3);
        assert_eq!(a.atoms().collect::<Vec<_>>(), vec![(1, 1), (2, 2)]);
    }

    #[test]
    fn binomial_mean_within_four_sigma() {
        // 10^6 Bernoulli(0.5) sums of 100 — mean within 4*(5/10^3) of 50.
        // Scaled down for unit-test time: 10^5 draws, same 4-sigma check.
        let reps = 100_000u32;
        let mut d = EmpiricalDistribution::integer();
        for rep in 0..reps {
            let mut rng = replicate_rng(1234, 0, rep);
            let mut s = 0i64;
            for _ in 0..100 {
                if rng.random::<bool>() {
                    s += 1;
                }
            }
            d.accumulate_int(s);
        }
        let se = 5.0 / (reps as f64).sqrt();
        assert!((d.mean() - 50.0).abs() < 4.0 * se, "mean {}", d.mean());
        assert!((d.sample_variance() - 25.0) / 25.0 < 0.1);
    }

    proptest! {
        #[test]
        fn merge_is_associative_and_commutative(
            xs in prop::collection::vec(-50i64..50, 0..40),
            ys in prop::collection::vec(-50i64..50, 0..40),
            zs in prop::collection::vec(-50i64..50, 0..40),
        ) {
            let dist_of = |vals: &[i64]| {
                let mut d = EmpiricalDistribution::integer();
                for &v in vals { d.accumulate_int(v); }
                d
            };
            let (a, b, c) = (dist_of(&xs), dist_of(&ys), dist_of(&zs));

            let mut ab_c = a.clone();
            ab_c.merge(&b).unwrap();
            ab_c.merge(&c).unwrap();

            let mut bc = b.clone();
            bc.merge(&c).unwrap();
            let mut a_bc = a.clone();
            a_bc.merge(&bc).unwrap();

            prop_assert_eq!(&ab_c, &a_bc);

            let mut ba = b.clone();
            ba.merge(&a).unwrap();
            let mut ab = a.clone();
            ab.merge(&b).unwrap();
            prop_assert_eq!(&ab, &ba);
        }

        #[test]
        fn parallel_and_serial_accumulation_agree(
            vals in prop::collection::vec(-1000i64..1000, 1..200),
            shards in 1usize..8,
        ) {
            let mut serial = EmpiricalDistribution::integer();
            for &v in &vals { serial.accumulate_int(v); }

            let chunk = vals.len().div_ceil(shards);
            let mut merged = EmpiricalDistribution::integer();
            for part in vals.chunks(chunk) {
                let mut shard = EmpiricalDistribution::integer();
                for &v in part { shard.accumulate_int(v); }
                merged.merge(&shard).unwrap();
            }
            prop_assert_eq!(&serial, &merged);
        }
    }
}
