//! Extreme-value checks on max-norm first-passage times.

use crate::analytic::{gumbel_cdf, gumbel_constants, Dimension, GUMBEL_VARIANCE};
use crate::error::{Error, Result};
use crate::triggering::{NormOrder, RunRecord, TriggerRule};

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and
/// `cdf`. Tied samples are handled as a single jump.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let len = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let f = cdf(v);
        d = d.max(f - i as f64 / len).max(j as f64 / len - f);
        i = j;
    }
    d
}

fn validate_max_norm(records: &[RunRecord], n: Dimension) -> Result<()> {
    if n.get() < 2 {
        return Err(Error::domain("the extreme-value checks need n >= 2"));
    }
    if records.len() < 2 {
        return Err(Error::domain("at least two run records are required"));
    }
    for (i, r) in records.iter().enumerate() {
        match r.rule {
            TriggerRule::Level {
                p: NormOrder::Infinity,
                delta,
            } if delta == 1.0 && r.n == n => {}
            _ => {
                return Err(Error::domain(format!(
                    "record {i} is not a max-norm run with unit threshold at n={n}"
                )))
            }
        }
    }
    Ok(())
}

/// Standardized stop times `2 (ln n)^2 (tau - a_n)`.
pub fn standardized_stop_times(records: &[RunRecord], n: Dimension) -> Result<Vec<f64>> {
    validate_max_norm(records, n)?;
    let g = gumbel_constants(n)?;
    Ok(records
        .iter()
        .map(|r| g.scale * (r.stop_time - g.centering))
        .collect())
}

/// KS distance of the standardized stop times to the Gumbel limit law.
pub fn gumbel_ks(records: &[RunRecord], n: Dimension) -> Result<f64> {
    let z = standardized_stop_times(records, n)?;
    Ok(ks_distance(&z, gumbel_cdf))
}

/// Whether the sample variance of the stop times reaches
/// `V[G] / (8 (ln n)^4)`, allowing three standard errors of slack.
pub fn variance_lower_bound_check(records: &[RunRecord], n: Dimension) -> Result<bool> {
    validate_max_norm(records, n)?;
    let ln = n.as_f64().ln();
    let bound = GUMBEL_VARIANCE / (8.0 * ln.powi(4));
    let len = records.len() as f64;
    let mean = records.iter().map(|r| r.stop_time).sum::<f64>() / len;
    let (mut m2, mut m4) = (0.0, 0.0);
    for r in records {
        let d = r.stop_time - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    let var = m2 / (len - 1.0);
    let central4 = m4 / len;
    let biased = m2 / len;
    let se = ((central4 - biased * biased).max(0.0) / len).sqrt();
    Ok(var > 0.0 && var >= bound - 3.0 * se)
}
