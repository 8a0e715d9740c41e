//! Numerical checks of the fluctuation limits: rescaled generators against the
//! OU generator, distributional statistics and the hypergeometric duality.

mod functions;
mod generator;

pub use functions::{TestFunction, VALIDATION_STEP, VALIDATION_TOL};
pub use generator::{
    generator_b_rescaled, generator_x_rescaled, sup_generator_gap, sup_generator_gap_with,
    Centering, ChainMode, GeneratorGap, GridMode, GridSpec,
};

use rayon::prelude::*;

use crate::ctmc::{sample_ctmc_at, State, Trajectory};
use crate::error::{domain, Result};
use crate::line_counting::{LineCountingChain, MoranParams};
use crate::moran_asg::{build_graphical, propagate_until, TypeConfiguration};
use crate::rng::RngStream;
use crate::stats::covariance_with_se;

/// `x (x-1) ... (x-m+1) / (N (N-1) ... (N-m+1))`.
pub fn falling_factorial_ratio(x: u64, m: u64, n: u64) -> Result<f64> {
    if m > n {
        return Err(domain(format!("m = {m} exceeds N = {n}")));
    }
    if x < m {
        return Ok(0.0);
    }
    let mut r = 1.0;
    for i in 0..m {
        r *= (x - i) as f64 / (n - i) as f64;
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityEstimate {
    pub lhs_mean: f64,
    pub lhs_se: f64,
    pub rhs_mean: f64,
    pub rhs_se: f64,
    pub replicates: usize,
}

impl DualityEstimate {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs_mean - self.rhs_mean).abs()
    }

    /// `|lhs - rhs| <= z (lhs_se + rhs_se)`.
    pub fn within(&self, z: f64) -> bool {
        self.discrepancy() <= z * (self.lhs_se + self.rhs_se)
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo estimate of both sides of the hypergeometric duality.
///
/// The forward side runs the graphical construction from `k` wild-type
/// individuals and averages the ratio for `X_t`; the backward side runs the
/// line counting chain from `n`. Replicate `r` draws from
/// `streams.replicate(2r)` forward and `streams.replicate(2r + 1)` backward,
/// so the result does not depend on threading.
pub fn duality_check(
    p: &MoranParams,
    k: u64,
    n: u64,
    t: f64,
    replicates: usize,
    streams: RngStream,
) -> Result<DualityEstimate> {
    let big_n = p.n;
    if !(1..=big_n).contains(&k) || !(1..=big_n).contains(&n) {
        return Err(domain(format!(
            "k = {k} and n = {n} must lie in [1, {big_n}]"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(domain(format!("t must be finite and nonnegative, got {t}")));
    }
    if replicates == 0 {
        return Err(domain("at least one replicate is required"));
    }
    let labels =
        u32::try_from(big_n).map_err(|_| domain("N too large for the graphical construction"))?;
    if t == 0.0 {
        let v = falling_factorial_ratio(k, n, big_n)?;
        return Ok(DualityEstimate {
            lhs_mean: v,
            lhs_se: 0.0,
            rhs_mean: v,
            rhs_se: 0.0,
            replicates,
        });
    }
    let init = TypeConfiguration::with_wild_count(labels, k as u32)?;
    let chain = LineCountingChain(*p);
    let pairs: Vec<(f64, f64)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64)> {
            let mut fwd = streams.replicate(2 * r).rng();
            let graph = build_graphical(labels, p.gamma, p.s, t, &mut fwd)?;
            let (types, _) = propagate_until(&graph, &init, t)?;
            let lhs = falling_factorial_ratio(types.wild_count() as u64, n, big_n)?;
            let mut bwd = streams.replicate(2 * r + 1).rng();
            let b: State = sample_ctmc_at(&chain, n, &[t], &mut bwd)?[0];
            let rhs = falling_factorial_ratio(k, b, big_n)?;
            Ok((lhs, rhs))
        })
        .collect::<Result<_>>()?;
    let (lhs, rhs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (lhs_mean, lhs_se) = mean_se(&lhs);
    let (rhs_mean, rhs_se) = mean_se(&rhs);
    Ok(DualityEstimate {
        lhs_mean,
        lhs_se,
        rhs_mean,
        rhs_se,
        replicates,
    })
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(domain("KS statistic of an empty sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(domain("sample contains NaN"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        // ties share one ECDF jump
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max(f - i as f64 / n).max((j + 1) as f64 / n - f);
        i = j + 1;
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Autocovariance at one lag with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutocovEstimate {
    pub lag: f64,
    pub value: f64,
    pub se: f64,
}

fn pair_values<T: Trajectory>(
    paths: &[T],
    lags: &[f64],
    at_time: f64,
) -> Result<Vec<(Vec<f64>, f64)>> {
    if paths.is_empty() {
        return Err(domain("no paths"));
    }
    let max_lag = lags.iter().cloned().fold(0.0, f64::max);
    if lags.iter().any(|&l| !(l >= 0.0)) || at_time < 0.0 {
        return Err(domain("lags and observation time must be nonnegative"));
    }
    for p in paths {
        if at_time + max_lag > p.horizon() {
            return Err(domain(format!(
                "observation time {} exceeds path horizon {}",
                at_time + max_lag,
                p.horizon()
            )));
        }
    }
    paths
        .iter()
        .map(|p| {
            let x0 = p.value_at(at_time)?;
            let later = lags
                .iter()
                .map(|&l| p.value_at(at_time + l))
                .collect::<Result<Vec<_>>>()?;
            Ok((later, x0))
        })
        .collect()
}

/// Cross-replicate covariance of `(Y_{at_time}, Y_{at_time + lag})` per lag.
pub fn empirical_autocov<T: Trajectory>(
    paths: &[T],
    lags: &[f64],
    at_time: f64,
) -> Result<Vec<f64>> {
    Ok(empirical_autocov_se(paths, lags, at_time)?
        .into_iter()
        .map(|e| e.value)
        .collect())
}

/// As [`empirical_autocov`], with standard errors from the variance of the
/// centred products.
pub fn empirical_autocov_se<T: Trajectory>(
    paths: &[T],
    lags: &[f64],
    at_time: f64,
) -> Result<Vec<AutocovEstimate>> {
    let data = pair_values(paths, lags, at_time)?;
    if data.len() < 2 {
        return Err(domain("autocovariance needs at least two paths"));
    }
    let x0: Vec<f64> = data.iter().map(|d| d.1).collect();
    lags.iter()
        .enumerate()
        .map(|(li, &lag)| {
            let x1: Vec<f64> = data.iter().map(|d| d.0[li]).collect();
            let (value, se) = covariance_with_se(&x0, &x1)?;
            Ok(AutocovEstimate { lag, value, se })
        })
        .collect()
}
