//! The Ornstein-Uhlenbeck process `dY = -theta Y dt + sigma dW`, simulated with
//! its exact Gaussian transition.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::ctmc::Trajectory;
use crate::error::{domain, invalid, Result};
use crate::limit_verify::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialLaw {
    Point(f64),
    Stationary,
}

/// OU parameters in the `(theta, sigma^2)` convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OUParams {
    pub theta: f64,
    pub sigma2: f64,
    pub init: InitialLaw,
}

impl OUParams {
    pub fn new(theta: f64, sigma2: f64, init: InitialLaw) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(invalid(format!("theta must be positive, got {theta}")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(Self {
            theta,
            sigma2,
            init,
        })
    }

    /// Stationary-start process.
    pub fn stationary(theta: f64, sigma2: f64) -> Result<Self> {
        Self::new(theta, sigma2, InitialLaw::Stationary)
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.init {
            InitialLaw::Point(y) => y,
            InitialLaw::Stationary => {
                let (_, var) = ou_stationary(self);
                var.sqrt() * rng.sample::<f64, _>(StandardNormal)
            }
        }
    }
}

/// Mean and variance of `Y_{t+dt}` given `Y_t = y`.
pub fn ou_transition(y: f64, dt: f64, p: &OUParams) -> (f64, f64) {
    let mean = y * (-p.theta * dt).exp();
    let var = p.sigma2 * -(-2.0 * p.theta * dt).exp_m1() / (2.0 * p.theta);
    (mean, var)
}

pub fn ou_exact_step<R: Rng + ?Sized>(y: f64, dt: f64, p: &OUParams, rng: &mut R) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(domain(format!("dt must be positive, got {dt}")));
    }
    let (mean, var) = ou_transition(y, dt, p);
    let z: f64 = rng.sample(StandardNormal);
    Ok(mean + var.sqrt() * z)
}

/// `(0, sigma^2 / (2 theta))`.
pub fn ou_stationary(p: &OUParams) -> (f64, f64) {
    (0.0, p.sigma2 / (2.0 * p.theta))
}

pub fn ou_autocov(p: &OUParams, lag: f64) -> Result<f64> {
    if !(lag >= 0.0) {
        return Err(domain(format!("lag must be nonnegative, got {lag}")));
    }
    Ok(ou_stationary(p).1 * (-p.theta * lag).exp())
}

/// `G f(x) = -theta x f'(x) + (sigma^2 / 2) f''(x)`.
pub fn ou_generator(f: &TestFunction, x: f64, p: &OUParams) -> f64 {
    -p.theta * x * f.d1(x) + 0.5 * p.sigma2 * f.d2(x)
}

/// OU values on an increasing time grid, held constant between grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Trajectory for GridPath {
    fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn value_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(domain(format!("time {t} outside [0, {}]", self.horizon())));
        }
        // tolerate round-off when t is meant to be a grid point
        let idx = self.times.partition_point(|&s| s <= t + 1e-12 * t.max(1.0)) - 1;
        Ok(self.values[idx])
    }
}

/// Samples `Y` at `times` (sorted, first >= 0) by composing exact transitions.
pub fn simulate_ou_at<R: Rng + ?Sized>(
    p: &OUParams,
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(domain("observation times must be sorted and nonnegative"));
    }
    let mut y = p.sample_initial(rng);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &next in times {
        if next > t {
            y = ou_exact_step(y, next - t, p, rng)?;
            t = next;
        }
        out.push(y);
    }
    Ok(out)
}

/// A path on the uniform grid `0, dt, 2 dt, ..., horizon`.
pub fn simulate_ou_grid<R: Rng + ?Sized>(
    p: &OUParams,
    dt: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<GridPath> {
    if !(dt > 0.0 && horizon >= 0.0) {
        return Err(domain("dt must be positive and horizon nonnegative"));
    }
    let steps = (horizon / dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    let values = simulate_ou_at(p, &times, rng)?;
    Ok(GridPath { times, values })
}
