//! Flat `key = value` experiment and sweep documents.
//!
//! ```text
//! # max-norm trigger at n = 10
//! n = 10
//! p = inf
//! runs = 20000
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::analytic::Dimension;
use crate::error::{Error, Result};
use crate::estimators::CiMethod;
use crate::triggering::{NormOrder, TriggerRule};

pub const DEFAULT_STEP: f64 = 1e-4;
pub const DEFAULT_RUNS: u64 = 20_000;
pub const DEFAULT_SEED: u64 = 20_230_601;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: u32 = 1000;

pub const DEFAULT_N_GRID: [usize; 13] = [1, 2, 3, 5, 7, 10, 15, 20, 30, 40, 50, 70, 100];
pub const DEFAULT_P_GRID: [NormOrder; 3] = [NormOrder::Finite(2.0), NormOrder::Finite(8.0), NormOrder::Infinity];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorChoice {
    BesselIdentity,
    DirectIntegral,
    Both,
}

impl EstimatorChoice {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorChoice::BesselIdentity => "bessel_identity",
            EstimatorChoice::DirectIntegral => "direct_integral",
            EstimatorChoice::Both => "both",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "bessel_identity" => Some(EstimatorChoice::BesselIdentity),
            "direct_integral" => Some(EstimatorChoice::DirectIntegral),
            "both" => Some(EstimatorChoice::Both),
            _ => None,
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: Dimension,
    pub rule: TriggerRule,
    pub h: f64,
    pub runs: u64,
    pub master_seed: u64,
    /// Step budget per run; `None` uses [`TriggerRule::default_max_steps`].
    pub max_steps: Option<u64>,
    pub estimator: EstimatorChoice,
    /// Bootstrap resample count, or `None` for the delta method.
    pub bootstrap_resamples: Option<u32>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: Dimension::new(1).expect("1 is a valid dimension"),
            rule: TriggerRule::Level {
                p: NormOrder::TWO,
                delta: 1.0,
            },
            h: DEFAULT_STEP,
            runs: DEFAULT_RUNS,
            master_seed: DEFAULT_SEED,
            max_steps: None,
            estimator: EstimatorChoice::Both,
            bootstrap_resamples: None,
        }
    }
}

impl ExperimentConfig {
    pub fn effective_max_steps(&self) -> u64 {
        self.max_steps
            .unwrap_or_else(|| self.rule.default_max_steps(self.n, self.h))
    }

    pub fn ci_method(&self) -> CiMethod {
        match self.bootstrap_resamples {
            None => CiMethod::DeltaMethod,
            Some(resamples) => CiMethod::Bootstrap {
                resamples,
                seed: self.master_seed ^ 0xb007_57a9,
            },
        }
    }

    /// Check cross-field constraints, e.g. after command-line overrides.
    pub fn validate(&self) -> Result<()> {
        let err = |key: &str, message: String| Error::Config {
            key: key.to_owned(),
            line: 0,
            message,
        };
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(err("h", format!("step size must be positive, got {}", self.h)));
        }
        if self.runs < 2 {
            return Err(err("runs", "at least two runs are required".into()));
        }
        if self.max_steps == Some(0) {
            return Err(err("max_steps", "must be positive".into()));
        }
        if let TriggerRule::Periodic { period } = self.rule {
            if period < self.h {
                return Err(err("period", format!("period {period} is shorter than h = {}", self.h)));
            }
        }
        Ok(())
    }
}

/// Grid of `(n, p)` cells for a sweep of level-triggered experiments.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub n_grid: Vec<Dimension>,
    pub p_grid: Vec<NormOrder>,
    pub delta: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            n_grid: DEFAULT_N_GRID
                .iter()
                .map(|&n| Dimension::new(n).expect("default grid is positive"))
                .collect(),
            p_grid: DEFAULT_P_GRID.to_vec(),
            delta: 1.0,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let err = |key: &str, message: &str| Error::Config {
            key: key.to_owned(),
            line: 0,
            message: message.to_owned(),
        };
        if self.n_grid.is_empty() {
            return Err(err("n_grid", "grid must not be empty"));
        }
        if self.p_grid.is_empty() {
            return Err(err("p_grid", "grid must not be empty"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(err("n_grid", "grid must be strictly ascending"));
        }
        if self.p_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(err("p_grid", "grid must be strictly ascending"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(err("delta", "threshold must be positive"));
        }
        Ok(())
    }

    /// Experiment for one cell, inheriting everything else from `base`.
    pub fn cell(&self, base: &ExperimentConfig, n: Dimension, p: NormOrder) -> ExperimentConfig {
        ExperimentConfig {
            n,
            rule: TriggerRule::Level {
                p,
                delta: self.delta,
            },
            ..base.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigDocument {
    Experiment(ExperimentConfig),
    Sweep {
        sweep: SweepSpec,
        base: ExperimentConfig,
    },
}

const EXPERIMENT_KEYS: &[&str] = &["n", "rule", "p", "delta", "period"];
const SWEEP_KEYS: &[&str] = &["n_grid", "p_grid", "delta"];
const SHARED_KEYS: &[&str] = &[
    "h",
    "runs",
    "master_seed",
    "max_steps",
    "estimator",
    "ci",
    "bootstrap_resamples",
];

struct Entry {
    value: String,
    line: usize,
}

struct Document {
    entries: BTreeMap<String, Entry>,
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config {
                    key: content.to_owned(),
                    line,
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim().to_owned();
            let known = EXPERIMENT_KEYS
                .iter()
                .chain(SWEEP_KEYS)
                .chain(SHARED_KEYS)
                .any(|k| *k == key);
            if !known {
                return Err(Error::Config {
                    key,
                    line,
                    message: "unknown key".into(),
                });
            }
            if let Some(prev) = entries.get(&key) {
                let prev: &Entry = prev;
                return Err(Error::Config {
                    message: format!("duplicate key, first set on line {}", prev.line),
                    key,
                    line,
                });
            }
            entries.insert(
                key,
                Entry {
                    value: value.trim().to_owned(),
                    line,
                },
            );
        }
        Ok(Document { entries })
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn error(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            key: key.to_owned(),
            line: self.line(key),
            message: message.into(),
        }
    }

    fn get<T>(&self, key: &str, parse: impl FnOnce(&str) -> Option<T>) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => parse(&e.value)
                .map(Some)
                .ok_or_else(|| self.error(key, format!("invalid value `{}`", e.value))),
        }
    }

    fn positive_real(&self, key: &str) -> Result<Option<f64>> {
        let v = self.get(key, |s| s.parse::<f64>().ok())?;
        match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(self.error(key, format!("must be a positive number, got {x}")))
            }
            other => Ok(other),
        }
    }

    fn positive_int(&self, key: &str) -> Result<Option<u64>> {
        let v = self.get(key, |s| s.parse::<u64>().ok())?;
        match v {
            Some(0) => Err(self.error(key, "must be positive")),
            other => Ok(other),
        }
    }

    fn dimension(&self, key: &str, s: &str) -> Result<Dimension> {
        s.trim()
            .parse::<usize>()
            .ok()
            .and_then(|n| Dimension::new(n).ok())
            .ok_or_else(|| self.error(key, format!("`{}` is not a positive integer", s.trim())))
    }

    fn norm_order(&self, key: &str, s: &str) -> Result<NormOrder> {
        s.parse::<NormOrder>()
            .map_err(|_| self.error(key, format!("`{}` is not a norm order in [1, inf]", s.trim())))
    }

    fn reject(&self, keys: &[&str], why: &str) -> Result<()> {
        match keys.iter().find(|k| self.has(k)) {
            Some(k) => Err(self.error(k, why.to_owned())),
            None => Ok(()),
        }
    }

    fn shared(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(h) = self.positive_real("h")? {
            cfg.h = h;
        }
        if let Some(runs) = self.positive_int("runs")? {
            if runs < 2 {
                return Err(self.error("runs", "at least two runs are required"));
            }
            cfg.runs = runs;
        }
        if let Some(seed) = self.get("master_seed", |s| s.parse::<u64>().ok())? {
            cfg.master_seed = seed;
        }
        cfg.max_steps = self.positive_int("max_steps")?;
        if let Some(est) = self.get("estimator", EstimatorChoice::parse)? {
            cfg.estimator = est;
        }
        let bootstrap = self.get("ci", |s| match s {
            "delta" => Some(false),
            "bootstrap" => Some(true),
            _ => None,
        })?
        .unwrap_or_default();
        let resamples = self.positive_int("bootstrap_resamples")?;
        if resamples.is_some() && !bootstrap {
            return Err(self.error("bootstrap_resamples", "only valid with `ci = bootstrap`"));
        }
        cfg.bootstrap_resamples = if bootstrap {
            let r = resamples.unwrap_or(DEFAULT_BOOTSTRAP_RESAMPLES as u64);
            Some(u32::try_from(r).map_err(|_| self.error("bootstrap_resamples", "too large"))?)
        } else {
            None
        };
        Ok(())
    }

    fn experiment(&self) -> Result<ExperimentConfig> {
        self.reject(&["n_grid", "p_grid"], "grid keys belong in a sweep document")?;
        let mut cfg = ExperimentConfig::default();
        if let Some(e) = self.entries.get("n") {
            cfg.n = self.dimension("n", &e.value)?;
        }
        let periodic = match self.get("rule", |s| match s {
            "level" => Some(false),
            "periodic" => Some(true),
            _ => None,
        })? {
            Some(p) => p,
            None => self.has("period"),
        };
        cfg.rule = if periodic {
            self.reject(&["p", "delta"], "not valid for a periodic rule")?;
            let period = self.positive_real("period")?.unwrap_or(1.0);
            TriggerRule::Periodic { period }
        } else {
            self.reject(&["period"], "only valid for `rule = periodic`")?;
            let p = match self.entries.get("p") {
                Some(e) => self.norm_order("p", &e.value)?,
                None => NormOrder::TWO,
            };
            let delta = self.positive_real("delta")?.unwrap_or(1.0);
            TriggerRule::Level { p, delta }
        };
        self.shared(&mut cfg)?;
        if let TriggerRule::Periodic { period } = cfg.rule {
            if period < cfg.h {
                return Err(self.error("period", format!("period {period} is shorter than h = {}", cfg.h)));
            }
        }
        Ok(cfg)
    }

    fn sweep(&self) -> Result<(SweepSpec, ExperimentConfig)> {
        self.reject(&["n", "p", "rule", "period"], "not valid in a sweep document; use n_grid/p_grid")?;
        let mut spec = SweepSpec::default();
        if let Some(e) = self.entries.get("n_grid") {
            spec.n_grid = split_list(&e.value)
                .map(|s| self.dimension("n_grid", s))
                .collect::<Result<_>>()?;
        }
        if let Some(e) = self.entries.get("p_grid") {
            spec.p_grid = split_list(&e.value)
                .map(|s| self.norm_order("p_grid", s))
                .collect::<Result<_>>()?;
        }
        if let Some(d) = self.positive_real("delta")? {
            spec.delta = d;
        }
        if let Err(Error::Config { key, message, .. }) = spec.validate() {
            return Err(self.error(&key, message));
        }
        let mut base = ExperimentConfig::default();
        self.shared(&mut base)?;
        Ok((spec, base))
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

/// Parse a document, treating it as a sweep when it names a grid.
pub fn parse_config(text: &str) -> Result<ConfigDocument> {
    let doc = Document::parse(text)?;
    if doc.has("n_grid") || doc.has("p_grid") {
        let (sweep, base) = doc.sweep()?;
        Ok(ConfigDocument::Sweep { sweep, base })
    } else {
        doc.experiment().map(ConfigDocument::Experiment)
    }
}

pub fn parse_experiment(text: &str) -> Result<ExperimentConfig> {
    Document::parse(text)?.experiment()
}

/// Parse a sweep document; omitted grids fall back to the defaults.
pub fn parse_sweep(text: &str) -> Result<(SweepSpec, ExperimentConfig)> {
    Document::parse(text)?.sweep()
}

fn write_shared(out: &mut String, cfg: &ExperimentConfig) {
    let _ = writeln!(out, "h = {:e}", cfg.h);
    let _ = writeln!(out, "runs = {}", cfg.runs);
    let _ = writeln!(out, "master_seed = {}", cfg.master_seed);
    if let Some(m) = cfg.max_steps {
        let _ = writeln!(out, "max_steps = {m}");
    }
    let _ = writeln!(out, "estimator = {}", cfg.estimator.name());
    match cfg.bootstrap_resamples {
        None => out.push_str("ci = delta\n"),
        Some(r) => {
            let _ = writeln!(out, "ci = bootstrap\nbootstrap_resamples = {r}");
        }
    }
}

/// Render a config as a document that [`parse_experiment`] reads back
/// unchanged.
pub fn experiment_to_string(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n = {}", cfg.n);
    match cfg.rule {
        TriggerRule::Periodic { period } => {
            let _ = writeln!(out, "rule = periodic\nperiod = {period:e}");
        }
        TriggerRule::Level { p, delta } => {
            let _ = writeln!(out, "rule = level\np = {p}\ndelta = {delta:e}");
        }
    }
    write_shared(&mut out, cfg);
    out
}

pub fn sweep_to_string(spec: &SweepSpec, base: &ExperimentConfig) -> String {
    let join = |items: Vec<String>| items.join(", ");
    let mut out = String::new();
    let _ = writeln!(out, "n_grid = {}", join(spec.n_grid.iter().map(|n| n.to_string()).collect()));
    let _ = writeln!(out, "p_grid = {}", join(spec.p_grid.iter().map(|p| p.to_string()).collect()));
    let _ = writeln!(out, "delta = {:e}", spec.delta);
    write_shared(&mut out, base);
    out
}
