//! Trigger rules, p-norms and first-passage simulation on the time grid.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::analytic::Dimension;
use crate::error::{Error, Result};
use crate::paths::{self, wiener_step, NoiseSource, PathState};

/// Order `p` of the norm in a level-trigger condition, `p in [1, inf]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormOrder {
    Finite(f64),
    Infinity,
}

impl NormOrder {
    pub const TWO: NormOrder = NormOrder::Finite(2.0);

    pub fn from_f64(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(NormOrder::Infinity)
        } else if p >= 1.0 && p.is_finite() {
            Ok(NormOrder::Finite(p))
        } else {
            Err(Error::domain(format!("norm order must lie in [1, inf], got {p}")))
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            NormOrder::Finite(p) => p,
            NormOrder::Infinity => f64::INFINITY,
        }
    }

    pub fn is_two(self) -> bool {
        self == NormOrder::TWO
    }
}

impl fmt::Display for NormOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormOrder::Finite(p) => write!(f, "{p}"),
            NormOrder::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for NormOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "infinity" | "∞" => Ok(NormOrder::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::domain(format!("`{other}` is not a norm order")))?;
                NormOrder::from_f64(p)
            }
        }
    }
}

impl PartialOrd for NormOrder {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

/// How the next sampling instant is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TriggerRule {
    /// Constant inter-event time.
    Periodic { period: f64 },
    /// Sample when `|x|_p >= delta`.
    Level { p: NormOrder, delta: f64 },
}

impl TriggerRule {
    pub fn periodic(period: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::domain(format!("period must be positive, got {period}")));
        }
        Ok(TriggerRule::Periodic { period })
    }

    pub fn level(p: NormOrder, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::domain(format!("threshold must be positive, got {delta}")));
        }
        if let NormOrder::Finite(v) = p {
            NormOrder::from_f64(v)?;
        }
        Ok(TriggerRule::Level { p, delta })
    }

    /// Label used in result tables: the norm order, or `periodic`.
    pub fn label(&self) -> String {
        match self {
            TriggerRule::Periodic { .. } => "periodic".to_owned(),
            TriggerRule::Level { p, .. } => p.to_string(),
        }
    }

    /// Threshold for level rules, period for periodic ones.
    pub fn size(&self) -> f64 {
        match *self {
            TriggerRule::Periodic { period } => period,
            TriggerRule::Level { delta, .. } => delta,
        }
    }

    /// Step budget used when none is configured.
    ///
    /// Exit times have exponential tails, so fifty mean-multiples of the
    /// one-dimensional exit time make truncation negligible.
    pub fn default_max_steps(&self, n: Dimension, h: f64) -> u64 {
        match *self {
            TriggerRule::Periodic { period } => paths::grid_steps(period, h),
            TriggerRule::Level { p, delta } => {
                let scale = if p.is_two() { n.as_f64() } else { 1.0 };
                (50.0 * delta * delta * scale / h).ceil() as u64
            }
        }
    }

    pub fn scheme(&self) -> Box<dyn SamplingScheme> {
        match *self {
            TriggerRule::Periodic { period } => Box::new(PeriodicSampling { period }),
            TriggerRule::Level { p, delta } => Box::new(LevelTriggered { p, delta }),
        }
    }
}

/// Outcome of one simulated inter-event interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunRecord {
    /// Inter-event time. Grid time `steps * h` for level rules.
    pub stop_time: f64,
    /// Euclidean norm of the state at the stop time.
    pub terminal_radius: f64,
    pub integral_v1_sq: f64,
    pub integral_x_sq: f64,
    pub steps: u64,
    pub n: Dimension,
    pub rule: TriggerRule,
    pub h: f64,
}

impl RunRecord {
    /// True when both records come from the same `(n, rule, h)` setup.
    pub fn same_setup(&self, other: &RunRecord) -> bool {
        self.n == other.n && self.rule == other.rule && self.h == other.h
    }
}

/// `(sum |x_i|^p)^(1/p)`, or `max |x_i|` for `p = inf`.
///
/// Entries are rescaled by the largest magnitude first so large thresholds
/// or high orders cannot overflow.
pub fn p_norm(x: &[f64], p: NormOrder) -> Result<f64> {
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let p = match p {
        NormOrder::Infinity => return Ok(max),
        NormOrder::Finite(p) if p >= 1.0 => p,
        NormOrder::Finite(p) => {
            return Err(Error::domain(format!("norm order must be at least 1, got {p}")))
        }
    };
    if max == 0.0 || !max.is_finite() {
        return Ok(max);
    }
    let sum: f64 = if p == 2.0 {
        x.iter().map(|v| (v / max) * (v / max)).sum()
    } else {
        x.iter().map(|v| (v.abs() / max).powf(p)).sum()
    };
    Ok(max * sum.powf(1.0 / p))
}

/// Threshold test `|x|_p >= delta` in a form cheap enough for the inner loop.
///
/// Coordinates are divided by `delta` and compared against one. Any single
/// coordinate at or beyond the threshold fires immediately, which keeps the
/// ordering `tau_2 <= tau_p <= tau_inf` exact in floating point on coupled
/// paths.
#[derive(Clone, Copy, Debug)]
enum LevelDetector {
    Infinity { delta: f64 },
    Square { delta: f64 },
    Integer { k: i32, delta: f64 },
    Real { p: f64, delta: f64 },
}

impl LevelDetector {
    fn new(p: NormOrder, delta: f64) -> Self {
        match p {
            NormOrder::Infinity => LevelDetector::Infinity { delta },
            NormOrder::Finite(2.0) => LevelDetector::Square { delta },
            NormOrder::Finite(p) if p.fract() == 0.0 && p <= 64.0 => LevelDetector::Integer {
                k: p as i32,
                delta,
            },
            NormOrder::Finite(p) => LevelDetector::Real { p, delta },
        }
    }

    #[inline]
    fn reached(&self, x: &[f64]) -> bool {
        match *self {
            LevelDetector::Infinity { delta } => x.iter().any(|v| v.abs() >= delta),
            LevelDetector::Square { delta } => scaled_power_sum(x, delta, |y| y * y),
            LevelDetector::Integer { k, delta } => scaled_power_sum(x, delta, |y| y.powi(k)),
            LevelDetector::Real { p, delta } => scaled_power_sum(x, delta, |y| y.powf(p)),
        }
    }
}

#[inline]
fn scaled_power_sum(x: &[f64], delta: f64, pow: impl Fn(f64) -> f64) -> bool {
    let mut sum = 0.0;
    for v in x {
        let y = v.abs() / delta;
        if y >= 1.0 {
            return true;
        }
        sum += pow(y);
    }
    sum >= 1.0
}

/// Whether the rule asks for a sample in the given state.
pub fn check_trigger(state: &PathState, rule: &TriggerRule) -> bool {
    match *rule {
        TriggerRule::Periodic { period } => state.t >= period,
        TriggerRule::Level { p, delta } => LevelDetector::new(p, delta).reached(&state.x),
    }
}

/// Simulate from the origin until `|x|_p >= delta` holds on the grid.
///
/// Only the first interval is simulated; later intervals are i.i.d. copies.
pub fn simulate_first_passage<S: NoiseSource + ?Sized>(
    n: Dimension,
    p: NormOrder,
    delta: f64,
    h: f64,
    noise: &mut S,
    max_steps: u64,
) -> Result<RunRecord> {
    let rule = TriggerRule::level(p, delta)?;
    if !(h > 0.0) {
        return Err(Error::domain(format!("step size must be positive, got {h}")));
    }
    let detector = LevelDetector::new(p, delta);
    let mut state = PathState::new(n);
    loop {
        if state.steps >= max_steps {
            return Err(Error::Truncated {
                run_index: noise.run_index(),
                max_steps,
            });
        }
        wiener_step(&mut state, h, noise);
        if detector.reached(&state.x) {
            break;
        }
    }
    Ok(RunRecord {
        stop_time: state.t,
        terminal_radius: state.squared_radius().sqrt(),
        integral_v1_sq: state.integral_v1_sq,
        integral_x_sq: state.integral_x_sq,
        steps: state.steps,
        n,
        rule,
        h,
    })
}

/// A sampling scheme that can simulate one inter-event interval.
pub trait SamplingScheme: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn rule(&self) -> TriggerRule;

    fn simulate(
        &self,
        n: Dimension,
        h: f64,
        noise: &mut dyn NoiseSource,
        max_steps: u64,
    ) -> Result<RunRecord>;
}

#[derive(Clone, Copy, Debug)]
pub struct PeriodicSampling {
    pub period: f64,
}

impl SamplingScheme for PeriodicSampling {
    fn name(&self) -> &'static str {
        "periodic"
    }

    fn rule(&self) -> TriggerRule {
        TriggerRule::Periodic {
            period: self.period,
        }
    }

    fn simulate(
        &self,
        n: Dimension,
        h: f64,
        noise: &mut dyn NoiseSource,
        _max_steps: u64,
    ) -> Result<RunRecord> {
        paths::simulate_periodic_interval(n, self.period, h, noise)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LevelTriggered {
    pub p: NormOrder,
    pub delta: f64,
}

impl SamplingScheme for LevelTriggered {
    fn name(&self) -> &'static str {
        "level"
    }

    fn rule(&self) -> TriggerRule {
        TriggerRule::Level {
            p: self.p,
            delta: self.delta,
        }
    }

    fn simulate(
        &self,
        n: Dimension,
        h: f64,
        noise: &mut dyn NoiseSource,
        max_steps: u64,
    ) -> Result<RunRecord> {
        simulate_first_passage(n, self.p, self.delta, h, noise, max_steps)
    }
}
