//! Plot-ready CSV series for the cost-ratio figures.

use std::collections::BTreeMap;
use std::path::Path;

use super::experiment::ResultRow;
use super::output::{fmt_real, write_text};
use crate::analytic::{two_norm_ratio, Dimension};
use crate::error::{Error, Result};
use crate::estimators::Z_95;
use crate::triggering::NormOrder;

fn level_rows(rows: &[ResultRow]) -> Result<Vec<(NormOrder, &ResultRow)>> {
    let mut out: Vec<_> = rows
        .iter()
        .filter_map(|r| r.norm_order().map(|p| (p, r)))
        .collect();
    if out.is_empty() {
        return Err(Error::Format("no level-triggered rows to plot".into()));
    }
    out.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("norm orders are comparable")
            .then(a.1.n.cmp(&b.1.n))
    });
    Ok(out)
}

/// `J_p / J_per(E tau_p)` per `(p, n)`, with the closed form for `p = 2`.
pub fn fig1_csv(rows: &[ResultRow]) -> Result<String> {
    let mut out = String::from("p,n,ratio,ci_low,ci_high,closed_form\n");
    for (p, r) in level_rows(rows)? {
        let closed = if p.is_two() {
            let n = Dimension::new(r.n)?;
            fmt_real(two_norm_ratio(n))
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{p},{},{},{},{},{closed}\n",
            r.n,
            fmt_real(r.ratio),
            fmt_real(r.ci_low),
            fmt_real(r.ci_high)
        ));
    }
    Ok(out)
}

/// `J_p / J_2` at matched mean inter-event time, as the quotient of the
/// per-norm ratios. Intervals combine both relative standard errors.
pub fn fig2_csv(rows: &[ResultRow]) -> Result<String> {
    let level = level_rows(rows)?;
    let baseline: BTreeMap<usize, &ResultRow> = level
        .iter()
        .filter(|(p, _)| p.is_two())
        .map(|(_, r)| (r.n, *r))
        .collect();
    let mut out = String::from("p,n,ratio_vs_2norm,combined_ci_low,combined_ci_high\n");
    for (p, r) in level {
        let base = baseline.get(&r.n).ok_or_else(|| {
            Error::Format(format!("no p=2 baseline row for n={}", r.n))
        })?;
        let (q, lo, hi) = if p.is_two() {
            (1.0, 1.0, 1.0)
        } else {
            let q = r.ratio / base.ratio;
            let rel = |row: &ResultRow| 0.5 * (row.ci_high - row.ci_low) / Z_95 / row.ratio;
            let se = q * (rel(r).powi(2) + rel(base).powi(2)).sqrt();
            (q, q - Z_95 * se, q + Z_95 * se)
        };
        out.push_str(&format!(
            "{p},{},{},{},{}\n",
            r.n,
            fmt_real(q),
            fmt_real(lo),
            fmt_real(hi)
        ));
    }
    Ok(out)
}

pub fn emit_fig1(rows: &[ResultRow], out: &Path) -> Result<()> {
    write_text(out, &fig1_csv(rows)?)
}

pub fn emit_fig2(rows: &[ResultRow], out: &Path) -> Result<()> {
    write_text(out, &fig2_csv(rows)?)
}
