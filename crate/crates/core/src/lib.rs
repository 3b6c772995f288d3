//! Monte Carlo comparison of p-norm level-triggered sampling with periodic
//! sampling for an n-dimensional single integrator under impulsive reset
//! control.
//!
//! Each inter-event interval starts at the origin and runs an
//! Euler-Maruyama discretised Brownian motion until the sampling rule fires.
//! Intervals are i.i.d., so one interval per run suffices to estimate the
//! long-run cost ratio against periodic sampling at the same mean rate.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod analytic;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod paths;
pub mod triggering;

pub use analytic::Dimension;
pub use error::{Error, Result};
pub use triggering::{NormOrder, RunRecord, TriggerRule};
