use serde::{Deserialize, Serialize};

/// Streaming mean and variance with an exact pairwise merge.
///
/// Optionally tracks the raw sum of fourth powers of the pushed values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    pub count: u64,
    pub mean: f64,
    /// Sum of squared deviations from the mean.
    pub m2: f64,
    /// Sum of `value^4`, when fourth-power tracking is enabled.
    pub m4_raw: Option<f64>,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fourth_power() -> Self {
        MomentAccumulator {
            m4_raw: Some(0.0),
            ..Self::default()
        }
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
        if let Some(m4) = self.m4_raw.as_mut() {
            let sq = value * value;
            *m4 += sq * sq;
        }
    }

    /// Combine with an accumulator over a disjoint sample.
    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = MomentAccumulator {
                m4_raw: match (self.m4_raw, other.m4_raw) {
                    (Some(_), Some(b)) => Some(b),
                    _ => None,
                },
                ..*other
            };
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let total = na + nb;
        let delta = other.mean - self.mean;
        self.mean += delta * nb / total;
        self.m2 += other.m2 + delta * delta * na * nb / total;
        self.count += other.count;
        self.m4_raw = match (self.m4_raw, other.m4_raw) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
    }

    /// Unbiased sample variance; zero below two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn mean_fourth_power(&self) -> Option<f64> {
        self.m4_raw.map(|s| s / self.count as f64)
    }
}

impl Extend<f64> for MomentAccumulator {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.push(v);
        }
    }
}

impl FromIterator<f64> for MomentAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MomentAccumulator::new();
        acc.extend(iter);
        acc
    }
}

/// Streaming means, variances and covariance of a pair of variables.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairAccumulator {
    pub count: u64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub m2_a: f64,
    pub m2_b: f64,
    /// Sum of cross deviations.
    pub c_ab: f64,
}

impl PairAccumulator {
    pub fn push(&mut self, a: f64, b: f64) {
        self.count += 1;
        let n = self.count as f64;
        let da = a - self.mean_a;
        let db = b - self.mean_b;
        self.mean_a += da / n;
        self.mean_b += db / n;
        self.m2_a += da * (a - self.mean_a);
        self.m2_b += db * (b - self.mean_b);
        self.c_ab += da * (b - self.mean_b);
    }

    pub fn merge(&mut self, other: &PairAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let total = na + nb;
        let da = other.mean_a - self.mean_a;
        let db = other.mean_b - self.mean_b;
        let w = na * nb / total;
        self.mean_a += da * nb / total;
        self.mean_b += db * nb / total;
        self.m2_a += other.m2_a + da * da * w;
        self.m2_b += other.m2_b + db * db * w;
        self.c_ab += other.c_ab + da * db * w;
        self.count += other.count;
    }

    fn denom(&self) -> f64 {
        (self.count.max(2) - 1) as f64
    }

    pub fn var_a(&self) -> f64 {
        self.m2_a / self.denom()
    }

    pub fn var_b(&self) -> f64 {
        self.m2_b / self.denom()
    }

    pub fn covariance(&self) -> f64 {
        self.c_ab / self.denom()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn constant_sample() {
        let acc: MomentAccumulator = [1.0, 1.0, 1.0].into_iter().collect();
        assert_eq!(acc.mean, 1.0);
        assert_eq!(acc.variance(), 0.0);
    }

    #[test]
    fn two_point_sample() {
        let acc: MomentAccumulator = [0.0, 2.0].into_iter().collect();
        assert_eq!(acc.mean, 1.0);
        assert_eq!(acc.variance(), 2.0);
    }

    #[test]
    fn merge_matches_concatenation() {
        let mut a = MomentAccumulator::with_fourth_power();
        a.extend([1.0, 2.0]);
        let mut b = MomentAccumulator::with_fourth_power();
        b.extend([3.0, 4.0]);
        let mut all = MomentAccumulator::with_fourth_power();
        all.extend([1.0, 2.0, 3.0, 4.0]);
        a.merge(&b);
        assert_eq!(a.count, all.count);
        assert!(rel_close(a.mean, all.mean, 1e-12));
        assert!(rel_close(a.m2, all.m2, 1e-12));
        assert!(rel_close(a.m4_raw.unwrap(), all.m4_raw.unwrap(), 1e-12));
        assert_eq!(all.mean_fourth_power(), Some((1.0 + 16.0 + 81.0 + 256.0) / 4.0));
    }

    #[test]
    fn merge_with_empty() {
        let mut a = MomentAccumulator::new();
        let b: MomentAccumulator = [5.0, 7.0].into_iter().collect();
        a.merge(&b);
        assert_eq!(a, b);
        a.merge(&MomentAccumulator::new());
        assert_eq!(a, b);
    }

    #[test]
    fn pair_covariance() {
        let mut acc = PairAccumulator::default();
        for (a, b) in [(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)] {
            acc.push(a, b);
        }
        assert!(rel_close(acc.var_a(), 1.0, 1e-14));
        assert!(rel_close(acc.var_b(), 4.0, 1e-14));
        assert!(rel_close(acc.covariance(), 2.0, 1e-14));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn merge_is_partition_invariant(
                values in prop::collection::vec(-1e3f64..1e3, 2..200),
                cuts in prop::collection::vec(0usize..200, 0..6),
            ) {
                let whole: MomentAccumulator = values.iter().copied().collect();
                let mut bounds: Vec<usize> = cuts.into_iter().map(|c| c % values.len()).collect();
                bounds.push(0);
                bounds.push(values.len());
                bounds.sort_unstable();
                let mut merged = MomentAccumulator::new();
                let mut pair_whole = PairAccumulator::default();
                let mut pair_merged = PairAccumulator::default();
                for w in values.windows(2) {
                    pair_whole.push(w[0], w[1]);
                }
                for span in bounds.windows(2) {
                    let part: MomentAccumulator = values[span[0]..span[1]].iter().copied().collect();
                    merged.merge(&part);
                    let mut pp = PairAccumulator::default();
                    for i in span[0]..span[1].min(values.len() - 1) {
                        pp.push(values[i], values[i + 1]);
                    }
                    pair_merged.merge(&pp);
                }
                prop_assert_eq!(merged.count, whole.count);
                prop_assert!((merged.mean - whole.mean).abs() <= 1e-9);
                prop_assert!((merged.m2 - whole.m2).abs() <= 1e-9 * whole.m2.max(1.0));
                prop_assert!((pair_merged.c_ab - pair_whole.c_ab).abs() <= 1e-9 * pair_whole.m2_a.max(1.0));
            }
        }
    }
}
