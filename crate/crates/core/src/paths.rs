//! Wiener increments and Euler-Maruyama evolution between resets.
//!
//! Between sampling instants the control input is zero, so the state is a
//! plain Brownian motion started at the origin. A reset sets it back to zero
//! exactly.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::analytic::Dimension;
use crate::error::{Error, Result};
use crate::triggering::{RunRecord, TriggerRule};

/// Anything that can supply i.i.d. standard normal draws.
pub trait NoiseSource {
    fn fill_standard_normal(&mut self, out: &mut [f64]);

    /// Index used to identify the run in error reports.
    fn run_index(&self) -> u64 {
        0
    }
}

/// Per-run random stream derived from `(master_seed, run_index)`.
///
/// The ChaCha key comes from the master seed and the run index selects the
/// ChaCha stream, so every run owns a disjoint counter range and can be
/// regenerated independently of how runs are scheduled.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    run_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, run_index: u64) -> Self {
        let mut key = [0u8; 32];
        let mut sm = master_seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut sm).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(run_index);
        RngStream {
            master_seed,
            run_index,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

impl NoiseSource for RngStream {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for z in out {
            *z = self.rng.sample(StandardNormal);
        }
    }

    fn run_index(&self) -> u64 {
        self.run_index
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// State of one inter-event interval.
#[derive(Clone, Debug, PartialEq)]
pub struct PathState {
    pub x: Vec<f64>,
    /// Elapsed time since the last reset, always `steps * h`.
    pub t: f64,
    pub steps: u64,
    /// Left-endpoint approximation of the integral of `v_1(s)^2`.
    pub integral_v1_sq: f64,
    /// Left-endpoint approximation of the integral of `|x(s)|_2^2`.
    pub integral_x_sq: f64,
    noise: Vec<f64>,
}

impl PathState {
    /// A freshly reset state at the origin.
    pub fn new(n: Dimension) -> Self {
        PathState {
            x: vec![0.0; n.get()],
            t: 0.0,
            steps: 0,
            integral_v1_sq: 0.0,
            integral_x_sq: 0.0,
            noise: vec![0.0; n.get()],
        }
    }

    pub fn dimension(&self) -> usize {
        self.x.len()
    }

    pub fn squared_radius(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum()
    }

    pub fn reset(&mut self) {
        self.x.iter_mut().for_each(|v| *v = 0.0);
        self.t = 0.0;
        self.steps = 0;
        self.integral_v1_sq = 0.0;
        self.integral_x_sq = 0.0;
    }
}

/// Impulsive reset: the state returns to the origin and the clock restarts.
pub fn reset(mut state: PathState) -> PathState {
    state.reset();
    state
}

/// Advance by one Euler-Maruyama step of size `h` using the given standard
/// normal draws, one per coordinate.
pub fn apply_increments(state: &mut PathState, h: f64, xi: &[f64]) {
    debug_assert_eq!(xi.len(), state.x.len());
    let sqrt_h = h.sqrt();
    let x0 = state.x[0];
    let mut sq = 0.0;
    for (x, z) in state.x.iter_mut().zip(xi) {
        sq += *x * *x;
        *x += sqrt_h * z;
    }
    state.integral_x_sq += h * sq;
    state.integral_v1_sq += h * x0 * x0;
    state.steps += 1;
    state.t = state.steps as f64 * h;
}

/// One Euler-Maruyama step with fresh noise from `noise`.
pub fn wiener_step<S: NoiseSource + ?Sized>(state: &mut PathState, h: f64, noise: &mut S) {
    let mut xi = std::mem::take(&mut state.noise);
    noise.fill_standard_normal(&mut xi);
    apply_increments(state, h, &xi);
    state.noise = xi;
}

/// Number of whole grid steps covering a horizon, tolerant to the rounding
/// of `period / h` (e.g. `1.0 / 1e-4`).
pub(crate) fn grid_steps(period: f64, h: f64) -> u64 {
    let ratio = period / h;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        ratio.floor() as u64
    }
}

/// Simulate one constant-length sampling interval of length `period`.
pub fn simulate_periodic_interval<S: NoiseSource + ?Sized>(
    n: Dimension,
    period: f64,
    h: f64,
    noise: &mut S,
) -> Result<RunRecord> {
    if !(h > 0.0) {
        return Err(Error::domain(format!("step size must be positive, got {h}")));
    }
    if !(period >= h) {
        return Err(Error::domain(format!(
            "sampling period {period} is shorter than the step size {h}"
        )));
    }
    let steps = grid_steps(period, h);
    let mut state = PathState::new(n);
    for _ in 0..steps {
        wiener_step(&mut state, h, noise);
    }
    Ok(RunRecord {
        stop_time: period,
        terminal_radius: state.squared_radius().sqrt(),
        integral_v1_sq: state.integral_v1_sq,
        integral_x_sq: state.integral_x_sq,
        steps,
        n,
        rule: TriggerRule::Periodic { period },
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn stream_is_deterministic() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let mut s1 = PathState::new(dim(4));
        let mut s2 = PathState::new(dim(4));
        for _ in 0..100 {
            wiener_step(&mut s1, 1e-3, &mut a);
            wiener_step(&mut s2, 1e-3, &mut b);
        }
        assert_eq!(s1, s2);
    }

    #[test]
    fn streams_differ_by_run_index_and_seed() {
        let draw = |seed, idx| RngStream::new(seed, idx).next_u64();
        assert_ne!(draw(1, 0), draw(1, 1));
        assert_ne!(draw(1, 0), draw(2, 0));
    }

    #[test]
    fn increment_moments() {
        let h = 1e-4;
        let steps = 1_000_000;
        let mut rng = RngStream::new(11, 0);
        let mut state = PathState::new(dim(1));
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..steps {
            let before = state.x[0];
            wiener_step(&mut state, h, &mut rng);
            let dx = state.x[0] - before;
            sum += dx;
            sum_sq += dx * dx;
        }
        let m = steps as f64;
        let mean = sum / m;
        let var = (sum_sq - m * mean * mean) / (m - 1.0);
        assert!(mean.abs() < 4.0 * (h / m).sqrt(), "mean {mean}");
        assert!((var / h - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn left_endpoint_quadrature() {
        let mut state = PathState::new(dim(2));
        apply_increments(&mut state, 0.5, &[1.0, 0.0]);
        assert_eq!(state.integral_x_sq, 0.0);
        let x_sq = state.squared_radius();
        apply_increments(&mut state, 0.5, &[0.0, 2.0]);
        assert!((state.integral_x_sq - 0.5 * x_sq).abs() < 1e-15);
        assert!((state.integral_v1_sq - 0.5 * x_sq).abs() < 1e-15);
        assert_eq!(state.t, 1.0);
        assert_eq!(state.steps, 2);
    }

    #[test]
    fn reset_zeroes_state_and_is_idempotent() {
        let mut rng = RngStream::new(5, 0);
        let mut state = PathState::new(dim(3));
        for _ in 0..10 {
            wiener_step(&mut state, 0.01, &mut rng);
        }
        let once = reset(state);
        assert!(once.x.iter().all(|&v| v == 0.0));
        assert_eq!((once.t, once.steps), (0.0, 0));
        assert_eq!((once.integral_x_sq, once.integral_v1_sq), (0.0, 0.0));
        let twice = reset(once.clone());
        assert_eq!(once, twice);
        for p in [1.0, 2.0, 8.0, f64::INFINITY] {
            let norm = crate::triggering::p_norm(&twice.x, crate::triggering::NormOrder::from_f64(p).unwrap()).unwrap();
            assert_eq!(norm, 0.0);
        }
    }

    #[test]
    fn reset_leaves_stream_untouched() {
        let mut a = RngStream::new(9, 2);
        let mut b = a.clone();
        let mut state = PathState::new(dim(2));
        wiener_step(&mut state, 0.1, &mut a);
        wiener_step(&mut state, 0.1, &mut b);
        state.reset();
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn single_step_period_has_zero_integral() {
        let mut rng = RngStream::new(1, 0);
        for n in [1, 3, 17] {
            let rec = simulate_periodic_interval(dim(n), 1e-4, 1e-4, &mut rng).unwrap();
            assert_eq!(rec.integral_x_sq, 0.0);
            assert_eq!(rec.steps, 1);
        }
    }

    #[test]
    fn period_shorter_than_step_rejected() {
        let mut rng = RngStream::new(1, 0);
        assert!(simulate_periodic_interval(dim(1), 1e-5, 1e-4, &mut rng).is_err());
    }

    #[test]
    fn periodic_stop_time_is_exact() {
        let mut rng = RngStream::new(1, 0);
        let rec = simulate_periodic_interval(dim(1), 1.0, 1e-4, &mut rng).unwrap();
        assert_eq!(rec.stop_time, 1.0);
        assert_eq!(rec.steps, 10_000);
        let rec = simulate_periodic_interval(dim(1), 0.00025, 1e-4, &mut rng).unwrap();
        assert_eq!(rec.steps, 2);
    }

    // E|x(t)|^2 = n t for pure diffusion, checked at the 3-sigma CLT level.
    #[test]
    fn squared_radius_grows_linearly() {
        let n = 3;
        let h = 1e-3;
        let steps = 200;
        let runs = 4000;
        let vals: Vec<f64> = (0..runs)
            .map(|i| {
                let mut rng = RngStream::new(21, i);
                let mut s = PathState::new(dim(n));
                for _ in 0..steps {
                    wiener_step(&mut s, h, &mut rng);
                }
                s.squared_radius()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / runs as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0);
        let expected = n as f64 * steps as f64 * h;
        assert!((mean - expected).abs() < 3.0 * (var / runs as f64).sqrt(), "{mean} vs {expected}");
    }
}
