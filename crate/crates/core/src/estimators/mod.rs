//! Moment accumulation, cost-ratio estimation and extreme-value checks.

mod accumulator;
mod gumbel;
mod ratio;

pub use accumulator::{MomentAccumulator, PairAccumulator};
pub use gumbel::{gumbel_ks, ks_distance, standardized_stop_times, variance_lower_bound_check};
pub use ratio::{
    ratio_bessel, ratio_direct, BesselIdentity, CiMethod, DirectIntegral, EstimatorKind,
    EstimatorRegistry, RatioEstimate, RatioEstimator, Z_95,
};
