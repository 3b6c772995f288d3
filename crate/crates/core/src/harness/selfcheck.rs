//! Quick analytic and Monte Carlo sanity checks behind `leveltrig check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::experiment::{run_experiment, simulate_runs};
use crate::analytic::*;
use crate::error::Result;
use crate::estimators::{ks_distance, ratio_bessel, ratio_direct};
use crate::paths::RngStream;
use crate::triggering::{simulate_first_passage, NormOrder, TriggerRule};

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn dim(n: usize) -> Dimension {
    Dimension::new(n).expect("positive")
}

fn outcome(name: &'static str, result: Result<(bool, String)>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome { name, passed, detail },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

pub fn run_checks() -> Vec<CheckOutcome> {
    vec![
        outcome("periodic cost n*T/2", Ok({
            let ok = periodic_cost(dim(1), 1.0) == 0.5 && periodic_cost(dim(4), 0.5) == 1.0;
            (ok, "J_per(1, 1) = 0.5, J_per(4, 0.5) = 1".into())
        })),
        outcome("2-norm ratio increasing and below one", Ok({
            let ok = (1..2000).all(|n| {
                let r = two_norm_ratio(dim(n));
                r < 1.0 && two_norm_ratio(dim(n + 1)) > r
            });
            (ok, "n = 1..2000".into())
        })),
        outcome("boundary moments reproduce n/(n+2)", boundary_identity()),
        outcome("ratio is threshold invariant", threshold_invariance()),
        outcome("Gumbel constants", gumbel_checks()),
        outcome("inverse-transform Gumbel samples pass KS", gumbel_sampling()),
        outcome("2-norm Monte Carlo ratio (n=2, h=1e-3)", two_norm_mc()),
        outcome("coupled stop times tau_2 <= tau_8 <= tau_inf", coupling()),
    ]
}

fn boundary_identity() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=200 {
        for delta in [0.1f64, 1.0, 3.0] {
            let r = ratio_from_moments(delta.powi(4), delta * delta / n as f64, dim(n))?;
            worst = worst.max((r - two_norm_ratio(dim(n))).abs());
        }
    }
    Ok((worst <= 1e-14, format!("max deviation {worst:.2e}")))
}

fn threshold_invariance() -> Result<(bool, String)> {
    let base = ratio_from_moments(1.7, 0.3, dim(7))?;
    let mut worst: f64 = 0.0;
    for delta in [0.01, 0.5, 2.0, 100.0] {
        let r = ratio_from_moments(scale_q(1.7, delta), scale_tau(0.3, delta), dim(7))?;
        worst = worst.max((r / base - 1.0).abs());
    }
    Ok((worst < 1e-12, format!("max relative deviation {worst:.2e}")))
}

fn gumbel_checks() -> Result<(bool, String)> {
    let g = gumbel_constants_from_log(2.0);
    let ok = (g.variance - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-15
        && (g.centering - 0.364_867_316_650_584).abs() < 1e-12
        && (gumbel_cdf(2f64.ln().ln()) - 0.5).abs() < 1e-15
        && gumbel_constants(dim(1)).is_err();
    Ok((ok, format!("a_n(ln n = 2) = {:.6}", g.centering)))
}

fn gumbel_sampling() -> Result<(bool, String)> {
    let runs = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let z: Vec<f64> = (0..runs)
        .map(|_| (-(-rng.random::<f64>()).ln_1p()).ln())
        .collect();
    let d = ks_distance(&z, gumbel_cdf);
    let crit = 1.36 / (runs as f64).sqrt();
    Ok((d <= crit, format!("KS {d:.4} <= {crit:.4}")))
}

fn two_norm_mc() -> Result<(bool, String)> {
    let cfg = ExperimentConfig {
        n: dim(2),
        h: 1e-3,
        runs: 10_000,
        ..ExperimentConfig::default()
    };
    let records = simulate_runs(&cfg, 0)?;
    let bessel = ratio_bessel(&records, cfg.n)?;
    let direct = ratio_direct(&records, cfg.n)?;
    let overlap = bessel.ci_low <= direct.ci_high && direct.ci_low <= bessel.ci_high;
    let ok = (bessel.ratio / 0.5 - 1.0).abs() < 0.05 && overlap;
    let again = run_experiment(&ExperimentConfig { runs: 50, ..cfg.clone() })?;
    let repeat = run_experiment(&ExperimentConfig { runs: 50, ..cfg })?;
    let deterministic = again.ratio == repeat.ratio && again.mean_tau == repeat.mean_tau;
    Ok((
        ok && deterministic,
        format!(
            "bessel {:.4}, direct {:.4}, closed form 0.5",
            bessel.ratio, direct.ratio
        ),
    ))
}

fn coupling() -> Result<(bool, String)> {
    let n = dim(5);
    let mut violations = 0;
    let runs = 200;
    for i in 0..runs {
        let tau = |p| -> Result<u64> {
            let mut s = RngStream::new(99, i);
            let max = TriggerRule::Level { p, delta: 1.0 }.default_max_steps(n, 1e-3);
            Ok(simulate_first_passage(n, p, 1.0, 1e-3, &mut s, max)?.steps)
        };
        let (t2, t8, ti) = (tau(NormOrder::TWO)?, tau(NormOrder::Finite(8.0))?, tau(NormOrder::Infinity)?);
        if !(t2 <= t8 && t8 <= ti) {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("{violations} violations in {runs} coupled runs")))
}
