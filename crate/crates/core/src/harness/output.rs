//! CSV and JSON persistence of result rows.
//!
//! CSV numbers carry 17 significant digits so that files written from the
//! same config compare byte for byte.

use std::fs;
use std::path::Path;

use super::experiment::ResultRow;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

pub const ROW_COLUMNS: [&str; 18] = [
    "n",
    "p",
    "delta",
    "runs",
    "h",
    "estimator",
    "mean_tau",
    "var_tau",
    "mean_R4",
    "mean_q",
    "ratio",
    "ci_low",
    "ci_high",
    "ratio_direct",
    "ci_direct_low",
    "ci_direct_high",
    "ks_gumbel",
    "wall_time_s",
];

/// Real number with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = ROW_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let fields = [
            r.n.to_string(),
            r.p.clone(),
            fmt_real(r.delta),
            r.runs.to_string(),
            fmt_real(r.h),
            r.estimator.clone(),
            fmt_real(r.mean_tau),
            fmt_real(r.var_tau),
            fmt_real(r.mean_r4),
            fmt_real(r.mean_q),
            fmt_real(r.ratio),
            fmt_real(r.ci_low),
            fmt_real(r.ci_high),
            fmt_opt(r.ratio_direct),
            fmt_opt(r.ci_direct_low),
            fmt_opt(r.ci_direct_high),
            fmt_opt(r.ks_gumbel),
            fmt_real(r.wall_time_s),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    if header != ROW_COLUMNS {
        return Err(Error::Format(format!("unexpected CSV header: {}", header.join(","))));
    }
    lines
        .enumerate()
        .map(|(i, line)| parse_row(line).map_err(|m| Error::Format(format!("row {}: {m}", i + 1))))
        .collect()
}

fn parse_row(line: &str) -> std::result::Result<ResultRow, String> {
    let f: Vec<&str> = line.split(',').map(str::trim).collect();
    if f.len() != ROW_COLUMNS.len() {
        return Err(format!("expected {} fields, found {}", ROW_COLUMNS.len(), f.len()));
    }
    let real = |i: usize| {
        f[i].parse::<f64>()
            .map_err(|_| format!("column {}: `{}` is not a number", ROW_COLUMNS[i], f[i]))
    };
    let opt = |i: usize| if f[i].is_empty() { Ok(None) } else { real(i).map(Some) };
    let int = |i: usize| {
        f[i].parse::<u64>()
            .map_err(|_| format!("column {}: `{}` is not an integer", ROW_COLUMNS[i], f[i]))
    };
    Ok(ResultRow {
        n: int(0)? as usize,
        p: f[1].to_owned(),
        delta: real(2)?,
        runs: int(3)?,
        h: real(4)?,
        estimator: f[5].to_owned(),
        mean_tau: real(6)?,
        var_tau: real(7)?,
        mean_r4: real(8)?,
        mean_q: real(9)?,
        ratio: real(10)?,
        ci_low: real(11)?,
        ci_high: real(12)?,
        ratio_direct: opt(13)?,
        ci_direct_low: opt(14)?,
        ci_direct_high: opt(15)?,
        ks_gumbel: opt(16)?,
        wall_time_s: real(17)?,
    })
}

pub fn rows_to_json(rows: &[ResultRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

pub fn rows_from_json(text: &str) -> Result<Vec<ResultRow>> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

pub fn render_rows(rows: &[ResultRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => rows_to_csv(rows),
        OutputFormat::Json => rows_to_json(rows),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Load rows from a CSV or (by `.json` extension) JSON file.
pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match OutputFormat::from_path(path) {
        OutputFormat::Csv => rows_from_csv(&text),
        OutputFormat::Json => rows_from_json(&text),
    }
}
