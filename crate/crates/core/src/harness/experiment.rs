use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EstimatorChoice, ExperimentConfig, SweepSpec};
use crate::error::{Error, Result};
use crate::estimators::{
    gumbel_ks, BesselIdentity, DirectIntegral, MomentAccumulator, RatioEstimate, RatioEstimator,
};
use crate::paths::RngStream;
use crate::triggering::{NormOrder, RunRecord, TriggerRule};

/// Summary of one experiment cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    /// Norm order (`2`, `8`, `inf`, ...) or `periodic`.
    pub p: String,
    /// Trigger threshold, or the period for periodic rows.
    pub delta: f64,
    pub runs: u64,
    pub h: f64,
    /// Method behind `ratio`, `ci_low` and `ci_high`.
    pub estimator: String,
    pub mean_tau: f64,
    pub var_tau: f64,
    #[serde(rename = "mean_R4")]
    pub mean_r4: f64,
    /// Mean path integral of `|x|^2`, the per-interval cost `Q`.
    pub mean_q: f64,
    pub ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ratio_direct: Option<f64>,
    pub ci_direct_low: Option<f64>,
    pub ci_direct_high: Option<f64>,
    pub ks_gumbel: Option<f64>,
    pub wall_time_s: f64,
}

impl ResultRow {
    pub fn norm_order(&self) -> Option<NormOrder> {
        self.p.parse().ok()
    }

    pub fn estimate(&self) -> (f64, f64, f64) {
        (self.ratio, self.ci_low, self.ci_high)
    }
}

/// Simulate `cfg.runs` independent intervals. Run `i` draws from stream
/// `stream_offset + i`, so the output does not depend on thread count.
pub fn simulate_runs(cfg: &ExperimentConfig, stream_offset: u64) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let scheme = cfg.rule.scheme();
    let max_steps = cfg.effective_max_steps();
    let results: Vec<Result<RunRecord>> = (0..cfg.runs)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(cfg.master_seed, stream_offset + i);
            scheme.simulate(cfg.n, cfg.h, &mut stream, max_steps)
        })
        .collect();
    results.into_iter().collect()
}

/// Reduce simulated records to a result row.
pub fn summarize(cfg: &ExperimentConfig, records: &[RunRecord], wall_time_s: f64) -> Result<ResultRow> {
    let ci = cfg.ci_method();
    let bessel = || BesselIdentity.estimate(records, cfg.n, ci);
    let direct = || DirectIntegral.estimate(records, cfg.n, ci);
    let (primary, secondary): (RatioEstimate, Option<RatioEstimate>) = match cfg.estimator {
        EstimatorChoice::BesselIdentity => (bessel()?, None),
        EstimatorChoice::DirectIntegral => (direct()?, None),
        EstimatorChoice::Both => (bessel()?, Some(direct()?)),
    };
    let tau: MomentAccumulator = records.iter().map(|r| r.stop_time).collect();
    let r4: MomentAccumulator = records.iter().map(|r| r.terminal_radius.powi(4)).collect();
    let q: MomentAccumulator = records.iter().map(|r| r.integral_x_sq).collect();
    let ks_gumbel = match cfg.rule {
        TriggerRule::Level {
            p: NormOrder::Infinity,
            delta,
        } if delta == 1.0 && cfg.n.get() >= 2 => Some(gumbel_ks(records, cfg.n)?),
        _ => None,
    };
    Ok(ResultRow {
        n: cfg.n.get(),
        p: cfg.rule.label(),
        delta: cfg.rule.size(),
        runs: cfg.runs,
        h: cfg.h,
        estimator: primary.method.name().to_owned(),
        mean_tau: tau.mean,
        var_tau: tau.variance(),
        mean_r4: r4.mean,
        mean_q: q.mean,
        ratio: primary.ratio,
        ci_low: primary.ci_low,
        ci_high: primary.ci_high,
        ratio_direct: secondary.map(|e| e.ratio),
        ci_direct_low: secondary.map(|e| e.ci_low),
        ci_direct_high: secondary.map(|e| e.ci_high),
        ks_gumbel,
        wall_time_s,
    })
}

pub(crate) fn run_with_offset(cfg: &ExperimentConfig, stream_offset: u64) -> Result<ResultRow> {
    let start = Instant::now();
    let records = simulate_runs(cfg, stream_offset)?;
    summarize(cfg, &records, start.elapsed().as_secs_f64())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultRow> {
    run_with_offset(cfg, 0)
}

/// Run every `(p, n)` cell of the sweep, `p` outermost. Cell `k` uses run
/// streams `k * runs .. (k + 1) * runs`. Progress goes to standard error.
pub fn run_sweep(spec: &SweepSpec, base: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    base.validate()?;
    let cells: Vec<_> = spec
        .p_grid
        .iter()
        .flat_map(|&p| spec.n_grid.iter().map(move |&n| (n, p)))
        .collect();
    let mut rows = Vec::with_capacity(cells.len());
    for (k, &(n, p)) in cells.iter().enumerate() {
        let cfg = spec.cell(base, n, p);
        let offset = (k as u64).checked_mul(base.runs).ok_or_else(|| {
            Error::domain("sweep too large for the run-index space")
        })?;
        let row = run_with_offset(&cfg, offset).map_err(|e| Error::Cell {
            n: n.get(),
            p: p.to_string(),
            source: Box::new(e),
        })?;
        eprintln!(
            "[{}/{}] n={} p={} ratio={:.5} [{:.5}, {:.5}] ({:.1}s)",
            k + 1,
            cells.len(),
            row.n,
            row.p,
            row.ratio,
            row.ci_low,
            row.ci_high,
            row.wall_time_s
        );
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::Dimension;

    fn small(n: usize, rule: TriggerRule) -> ExperimentConfig {
        ExperimentConfig {
            n: Dimension::new(n).unwrap(),
            rule,
            h: 1e-3,
            runs: 400,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn experiment_is_deterministic() {
        let cfg = small(3, TriggerRule::Level { p: NormOrder::Infinity, delta: 1.0 });
        let mut a = run_experiment(&cfg).unwrap();
        let mut b = run_experiment(&cfg).unwrap();
        a.wall_time_s = 0.0;
        b.wall_time_s = 0.0;
        assert_eq!(a, b);
        assert!(a.ks_gumbel.is_some());
        assert!(a.ratio_direct.is_some());
    }

    #[test]
    fn truncation_aborts_with_run_index() {
        let mut cfg = small(1, TriggerRule::Level { p: NormOrder::TWO, delta: 1.0 });
        cfg.max_steps = Some(3);
        match run_experiment(&cfg).unwrap_err() {
            Error::Truncated { run_index, max_steps } => {
                assert_eq!(max_steps, 3);
                assert!(run_index < cfg.runs);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn periodic_rows_have_unit_bessel_ratio_in_expectation() {
        let cfg = small(2, TriggerRule::Periodic { period: 0.2 });
        let row = run_experiment(&cfg).unwrap();
        assert_eq!(row.p, "periodic");
        assert_eq!(row.mean_tau, 0.2);
        assert!(row.ci_low < 1.0 && 1.0 < row.ci_high, "{row:?}");
    }

    #[test]
    fn sweep_orders_cells_and_reports_failures() {
        let spec = SweepSpec {
            n_grid: vec![Dimension::new(1).unwrap(), Dimension::new(2).unwrap()],
            p_grid: vec![NormOrder::TWO, NormOrder::Infinity],
            delta: 1.0,
        };
        let base = small(1, TriggerRule::Level { p: NormOrder::TWO, delta: 1.0 });
        let rows = run_sweep(&spec, &base).unwrap();
        let cells: Vec<_> = rows.iter().map(|r| (r.p.as_str(), r.n)).collect();
        assert_eq!(cells, [("2", 1), ("2", 2), ("inf", 1), ("inf", 2)]);
        let mut bad = base.clone();
        bad.max_steps = Some(2);
        match run_sweep(&spec, &bad).unwrap_err() {
            Error::Cell { n, p, .. } => assert_eq!((n, p.as_str()), (1, "2")),
            other => panic!("{other:?}"),
        }
        let empty = SweepSpec { n_grid: vec![], ..spec };
        assert!(run_sweep(&empty, &base).is_err());
    }
}
