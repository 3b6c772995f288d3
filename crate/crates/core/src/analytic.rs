//! Closed-form results for the reset-controlled single integrator.
//!
//! Everything here is a pure function of its arguments. Costs are long-run
//! averages of `E[x'x]`; ratios compare an event-triggered scheme with a
//! periodic one running at the same mean inter-event time.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// State dimension `n >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        Ok(Dimension(n))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        Dimension::new(n)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Constants of the extreme-value limit of the max-norm first-passage time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GumbelConstants {
    /// Centering `a_n` in time units.
    pub centering: f64,
    /// Multiplier `2 (ln n)^2` applied to `tau - a_n`.
    pub scale: f64,
    /// Variance of the limit variable, `pi^2 / 6`.
    pub variance: f64,
}

pub const GUMBEL_VARIANCE: f64 = PI * PI / 6.0;

/// Periodic sampling cost `n T / 2`.
pub fn periodic_cost(n: Dimension, period: f64) -> f64 {
    debug_assert!(period >= 0.0);
    n.as_f64() * period / 2.0
}

/// Euclidean-norm trigger cost relative to periodic sampling, `n / (n + 2)`.
pub fn two_norm_ratio(n: Dimension) -> f64 {
    let n = n.as_f64();
    n / (n + 2.0)
}

pub fn gumbel_constants(n: Dimension) -> Result<GumbelConstants> {
    if n.get() < 2 {
        return Err(Error::domain("Gumbel constants need n >= 2 (ln n must be positive)"));
    }
    Ok(gumbel_constants_from_log(n.as_f64().ln()))
}

/// Same as [`gumbel_constants`] with `ln n` supplied directly.
pub fn gumbel_constants_from_log(ln_n: f64) -> GumbelConstants {
    let two_ln = 2.0 * ln_n;
    let two_ln_sq = 2.0 * ln_n * ln_n;
    let centering = 1.0 / two_ln - ((2.0 / PI).sqrt() / two_ln.sqrt()).ln() / two_ln_sq;
    GumbelConstants {
        centering,
        scale: two_ln_sq,
        variance: GUMBEL_VARIANCE,
    }
}

/// CDF of the limit variable `G` with survival `P(G >= r) = exp(-exp(r))`.
///
/// This is the minimum-type Gumbel law (mean `-gamma`).
pub fn gumbel_cdf(r: f64) -> f64 {
    // -expm1(-u) keeps precision when exp(r) is tiny.
    -(-r.exp()).exp_m1()
}

/// Threshold scaling of the accumulated squared state: `delta^4 Q(1)`.
pub fn scale_q(q_at_unit: f64, delta: f64) -> f64 {
    delta.powi(4) * q_at_unit
}

/// Threshold scaling of the mean inter-event time: `delta^2 E[tau(1)]`.
pub fn scale_tau(tau_at_unit: f64, delta: f64) -> f64 {
    delta * delta * tau_at_unit
}

/// Cost ratio from the fourth moment of the terminal radius and the mean stop
/// time: `E[R^4] / (n (n + 2) E[tau]^2)`.
pub fn ratio_from_moments(mean_r4: f64, mean_tau: f64, n: Dimension) -> Result<f64> {
    if !(mean_tau > 0.0) {
        return Err(Error::domain(format!("mean stop time must be positive, got {mean_tau}")));
    }
    let n = n.as_f64();
    Ok(mean_r4 / (n * (n + 2.0) * mean_tau * mean_tau))
}
