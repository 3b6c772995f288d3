//! Cost-ratio estimators `J / J_per(E[tau])` from simulated intervals.
//!
//! Both estimators share the shape `mean(numerator) / (c * mean(tau)^2)` and
//! differ in which per-run quantity enters the numerator:
//!
//! * `bessel_identity` uses `R(tau)^4` with `c = n (n + 2)`,
//! * `direct_integral` uses the path integral of `|x|^2` with `c = n / 2`.
//!
//! The two agree in expectation through Dynkin's formula for the Bessel
//! process, which makes each an oracle for the other.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::accumulator::PairAccumulator;
use crate::analytic::Dimension;
use crate::error::{Error, Result};
use crate::triggering::RunRecord;

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    BesselIdentity,
    DirectIntegral,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::BesselIdentity => "bessel_identity",
            EstimatorKind::DirectIntegral => "direct_integral",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bessel_identity" => Ok(EstimatorKind::BesselIdentity),
            "direct_integral" => Ok(EstimatorKind::DirectIntegral),
            other => Err(Error::domain(format!("unknown estimator `{other}`"))),
        }
    }
}

/// How the 95% interval around a ratio is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CiMethod {
    /// Delta method on the joint CLT of numerator and stop-time means.
    #[default]
    DeltaMethod,
    /// Percentile bootstrap, for validating the delta method.
    Bootstrap { resamples: u32, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_runs: u64,
    pub method: EstimatorKind,
}

impl RatioEstimate {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    /// Approximate standard error implied by the interval.
    pub fn std_error(&self) -> f64 {
        self.half_width() / Z_95
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

pub trait RatioEstimator: Send + Sync {
    fn kind(&self) -> EstimatorKind;

    /// Per-run quantity averaged in the numerator.
    fn numerator(&self, record: &RunRecord) -> f64;

    /// Constant `c` in `mean(numerator) / (c * mean(tau)^2)`.
    fn normalizer(&self, n: Dimension) -> f64;

    fn accumulate(&self, records: &[RunRecord]) -> PairAccumulator {
        let mut acc = PairAccumulator::default();
        for r in records {
            acc.push(self.numerator(r), r.stop_time);
        }
        acc
    }

    /// Point estimate and delta-method interval from merged moments.
    fn estimate_moments(&self, acc: &PairAccumulator, n: Dimension) -> Result<RatioEstimate> {
        let c = self.normalizer(n);
        let (a, b) = (acc.mean_a, acc.mean_b);
        if !(b > 0.0) {
            return Err(Error::domain("mean stop time must be positive"));
        }
        let ratio = a / (c * b * b);
        let grad_a = 1.0 / (c * b * b);
        let grad_b = -2.0 * a / (c * b * b * b);
        let var = (grad_a * grad_a * acc.var_a()
            + grad_b * grad_b * acc.var_b()
            + 2.0 * grad_a * grad_b * acc.covariance())
            / acc.count as f64;
        let half = Z_95 * var.max(0.0).sqrt();
        Ok(RatioEstimate {
            ratio,
            ci_low: ratio - half,
            ci_high: ratio + half,
            n_runs: acc.count,
            method: self.kind(),
        })
    }

    fn estimate(&self, records: &[RunRecord], n: Dimension, ci: CiMethod) -> Result<RatioEstimate> {
        validate_records(records, n)?;
        let point = self.estimate_moments(&self.accumulate(records), n)?;
        match ci {
            CiMethod::DeltaMethod => Ok(point),
            CiMethod::Bootstrap { resamples, seed } => {
                let (lo, hi) = self.bootstrap(records, n, resamples, seed);
                Ok(RatioEstimate {
                    ci_low: lo.min(point.ratio),
                    ci_high: hi.max(point.ratio),
                    ..point
                })
            }
        }
    }

    fn bootstrap(&self, records: &[RunRecord], n: Dimension, resamples: u32, seed: u64) -> (f64, f64) {
        let c = self.normalizer(n);
        let num: Vec<f64> = records.iter().map(|r| self.numerator(r)).collect();
        let len = records.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stats: Vec<f64> = (0..resamples.max(1))
            .map(|_| {
                let (mut sa, mut sb) = (0.0, 0.0);
                for _ in 0..len {
                    let i = rng.random_range(0..len);
                    sa += num[i];
                    sb += records[i].stop_time;
                }
                let (a, b) = (sa / len as f64, sb / len as f64);
                a / (c * b * b)
            })
            .collect();
        stats.sort_by(f64::total_cmp);
        (quantile(&stats, 0.025), quantile(&stats, 0.975))
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub(crate) fn validate_records(records: &[RunRecord], n: Dimension) -> Result<()> {
    let first = match records {
        [] | [_] => return Err(Error::domain("at least two run records are required")),
        [first, ..] => first,
    };
    if first.n != n {
        return Err(Error::domain(format!(
            "records were simulated with n={}, not n={n}",
            first.n
        )));
    }
    if let Some(bad) = records.iter().position(|r| !r.same_setup(first)) {
        return Err(Error::domain(format!(
            "record {bad} comes from a different configuration than record 0"
        )));
    }
    Ok(())
}

/// Numerator `R(tau)^4`, normalizer `n (n + 2)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct BesselIdentity;

impl RatioEstimator for BesselIdentity {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::BesselIdentity
    }

    fn numerator(&self, record: &RunRecord) -> f64 {
        let sq = record.terminal_radius * record.terminal_radius;
        sq * sq
    }

    fn normalizer(&self, n: Dimension) -> f64 {
        let n = n.as_f64();
        n * (n + 2.0)
    }
}

/// Numerator is the path integral of `|x|^2`, normalizer `n / 2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct DirectIntegral;

impl RatioEstimator for DirectIntegral {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::DirectIntegral
    }

    fn numerator(&self, record: &RunRecord) -> f64 {
        record.integral_x_sq
    }

    fn normalizer(&self, n: Dimension) -> f64 {
        n.as_f64() / 2.0
    }
}

/// Ratio estimators by name.
pub struct EstimatorRegistry {
    entries: BTreeMap<&'static str, Box<dyn RatioEstimator>>,
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        EstimatorRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(BesselIdentity));
        reg.register(Box::new(DirectIntegral));
        reg
    }

    pub fn register(&mut self, estimator: Box<dyn RatioEstimator>) {
        self.entries.insert(estimator.kind().name(), estimator);
    }

    pub fn get(&self, name: &str) -> Option<&dyn RatioEstimator> {
        self.entries.get(name).map(|e| e.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

pub fn ratio_bessel(records: &[RunRecord], n: Dimension) -> Result<RatioEstimate> {
    BesselIdentity.estimate(records, n, CiMethod::DeltaMethod)
}

pub fn ratio_direct(records: &[RunRecord], n: Dimension) -> Result<RatioEstimate> {
    DirectIntegral.estimate(records, n, CiMethod::DeltaMethod)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triggering::{NormOrder, TriggerRule};

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    fn record(n: usize, tau: f64, radius: f64, q: f64) -> RunRecord {
        RunRecord {
            stop_time: tau,
            terminal_radius: radius,
            integral_v1_sq: q / n as f64,
            integral_x_sq: q,
            steps: 1,
            n: dim(n),
            rule: TriggerRule::Level {
                p: NormOrder::TWO,
                delta: 1.0,
            },
            h: 1e-4,
        }
    }

    #[test]
    fn constants_propagate() {
        let (n, t, c) = (3usize, 0.7, 1.3);
        let r4 = (n * (n + 2)) as f64 * t * t * c;
        let recs = vec![record(n, t, r4.powf(0.25), 0.0); 10];
        let est = ratio_bessel(&recs, dim(n)).unwrap();
        assert!((est.ratio - c).abs() < 1e-12);
        assert!(est.ci_low <= est.ratio && est.ratio <= est.ci_high);
        let direct = ratio_direct(&recs, dim(n)).unwrap();
        assert_eq!(direct.ratio, 0.0);
    }

    #[test]
    fn rejects_short_or_mixed_input() {
        assert!(ratio_bessel(&[], dim(1)).is_err());
        assert!(ratio_bessel(&[record(1, 1.0, 1.0, 0.5)], dim(1)).is_err());
        let mut recs = vec![record(2, 1.0, 1.0, 0.5); 3];
        assert!(ratio_bessel(&recs, dim(3)).is_err());
        recs[1].rule = TriggerRule::Level {
            p: NormOrder::Infinity,
            delta: 1.0,
        };
        assert!(ratio_direct(&recs, dim(2)).is_err());
    }

    #[test]
    fn delta_method_matches_bootstrap_on_noisy_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let recs: Vec<RunRecord> = (0..4000)
            .map(|_| {
                let tau: f64 = rng.random_range(0.5..1.5);
                let r: f64 = rng.random_range(0.9..1.2);
                record(2, tau, r, tau * rng.random_range(0.2..0.4))
            })
            .collect();
        let delta = BesselIdentity.estimate(&recs, dim(2), CiMethod::DeltaMethod).unwrap();
        let boot = BesselIdentity
            .estimate(&recs, dim(2), CiMethod::Bootstrap { resamples: 2000, seed: 9 })
            .unwrap();
        assert_eq!(delta.ratio, boot.ratio);
        let (wd, wb) = (delta.half_width(), boot.half_width());
        assert!((wd / wb - 1.0).abs() < 0.15, "delta {wd} vs bootstrap {wb}");
    }

    #[test]
    fn registry_lookup() {
        let reg = EstimatorRegistry::builtin();
        assert_eq!(reg.names().collect::<Vec<_>>(), ["bessel_identity", "direct_integral"]);
        assert_eq!(reg.get("direct_integral").unwrap().kind(), EstimatorKind::DirectIntegral);
        assert!(reg.get("bootstrap").is_none());
        assert_eq!("bessel_identity".parse::<EstimatorKind>().unwrap(), EstimatorKind::BesselIdentity);
    }

    #[test]
    fn merged_partitions_give_same_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let recs: Vec<RunRecord> = (0..1000)
            .map(|_| record(4, rng.random_range(0.1..0.4), rng.random_range(1.0..1.05), rng.random_range(0.0..0.2)))
            .collect();
        for est in [&BesselIdentity as &dyn RatioEstimator, &DirectIntegral] {
            let whole = est.estimate_moments(&est.accumulate(&recs), dim(4)).unwrap();
            for k in [2, 3, 7, 64] {
                let mut acc = PairAccumulator::default();
                for chunk in recs.chunks(recs.len().div_ceil(k)) {
                    acc.merge(&est.accumulate(chunk));
                }
                let merged = est.estimate_moments(&acc, dim(4)).unwrap();
                assert!((merged.ratio / whole.ratio - 1.0).abs() < 1e-12);
                assert!((merged.half_width() / whole.half_width() - 1.0).abs() < 1e-9);
            }
        }
    }
}
