//! Logistic branching processes with frequency-dependent birth rate.
//!
//! In state `i >= 1` each individual gives birth at rate `rho h(i)` to a
//! litter of size `j` with probability `pi_j`, dies at rate `d`, and every
//! ordered pair competes at rate `c`. State 0 is absorbing.

use std::fmt;
use std::sync::Arc;

use crate::ctmc::{Jump, JumpRates, Path, RescaledPath, State};
use crate::error::{domain, invalid, Error, Result};
use crate::line_counting::{scan_drift, DriftScan, MoranParams};

/// Litter-size law on `{1, 2, ...}` with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringDistribution {
    // sorted by litter size, zero-probability entries dropped
    probs: Vec<(u32, f64)>,
    truncated_mass: f64,
}

impl OffspringDistribution {
    pub fn new(pairs: &[(u32, f64)]) -> Result<Self> {
        let mut probs: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for &(j, p) in pairs {
            if j == 0 {
                return Err(invalid("litter sizes start at 1"));
            }
            if !(p >= 0.0 && p.is_finite()) {
                return Err(invalid(format!("probability {p} for litter size {j}")));
            }
            if probs.iter().any(|&(k, _)| k == j) {
                return Err(invalid(format!("litter size {j} listed twice")));
            }
            if p > 0.0 {
                probs.push((j, p));
            }
        }
        let total: f64 = probs.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("offspring probabilities sum to {total}")));
        }
        probs.sort_by_key(|p| p.0);
        Ok(Self {
            probs,
            truncated_mass: 0.0,
        })
    }

    /// Every birth adds exactly one individual.
    pub fn single() -> Self {
        Self {
            probs: vec![(1, 1.0)],
            truncated_mass: 0.0,
        }
    }

    /// Truncates an infinite-support pmf at `j_max` and renormalises.
    /// The discarded mass is available from [`truncated_mass`](Self::truncated_mass).
    pub fn truncated<F: Fn(u32) -> f64>(pmf: F, j_max: u32) -> Result<Self> {
        let mut probs = Vec::new();
        let mut kept = 0.0;
        for j in 1..=j_max {
            let p = pmf(j);
            if !(p >= 0.0 && p.is_finite()) {
                return Err(invalid(format!("probability {p} for litter size {j}")));
            }
            if p > 0.0 {
                probs.push((j, p));
                kept += p;
            }
        }
        if !(kept > 0.0) {
            return Err(invalid("truncated pmf has no mass"));
        }
        probs.iter_mut().for_each(|p| p.1 /= kept);
        Ok(Self {
            probs,
            truncated_mass: (1.0 - kept).max(0.0),
        })
    }

    pub fn support(&self) -> &[(u32, f64)] {
        &self.probs
    }

    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    fn moment(&self, power: i32) -> f64 {
        self.probs
            .iter()
            .map(|&(j, p)| (j as f64).powi(power) * p)
            .sum()
    }

    /// Mean litter size.
    pub fn pi_bar(&self) -> f64 {
        self.moment(1)
    }

    /// Second moment (not the variance).
    pub fn v2(&self) -> f64 {
        self.moment(2)
    }

    pub fn m3(&self) -> f64 {
        self.moment(3)
    }
}

/// The bounded birth modifier `h`, evaluated on positive integers.
#[derive(Clone)]
pub enum BirthModifier {
    Constant(f64),
    /// `h(k) = 1 - k/n` on `1..=n`.
    OneMinusFraction {
        n: u64,
    },
    Custom {
        name: String,
        bound: f64,
        /// Largest admissible argument, if the function is only defined on `1..=max`.
        max_state: Option<u64>,
        f: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for BirthModifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => write!(f, "Constant({v})"),
            Self::OneMinusFraction { n } => write!(f, "OneMinusFraction {{ n: {n} }}"),
            Self::Custom { name, bound, .. } => write!(f, "Custom({name}, bound {bound})"),
        }
    }
}

impl BirthModifier {
    pub fn bound(&self) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::OneMinusFraction { .. } => 1.0,
            Self::Custom { bound, .. } => *bound,
        }
    }

    /// Evaluates `h(k)`; fails outside the declared domain, on negative or
    /// non-finite values, and on values above the declared bound.
    pub fn eval(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(domain("birth modifier is defined on positive integers"));
        }
        let v = match self {
            Self::Constant(v) => *v,
            Self::OneMinusFraction { n } => {
                if k > *n {
                    return Err(domain(format!("h(k) = 1 - k/{n} evaluated at k = {k}")));
                }
                1.0 - k as f64 / *n as f64
            }
            Self::Custom { max_state, f, .. } => {
                if max_state.is_some_and(|m| k > m) {
                    return Err(domain(format!("birth modifier evaluated at k = {k}")));
                }
                f(k)
            }
        };
        if !(v >= 0.0 && v.is_finite()) || v > self.bound() {
            return Err(Error::MalformedModel(format!(
                "h({k}) = {v} outside [0, {}]",
                self.bound()
            )));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone)]
pub struct LogisticParams {
    pub rho: f64,
    pub h: BirthModifier,
    pub d: f64,
    pub c: f64,
    pub pi: OffspringDistribution,
}

impl LogisticParams {
    pub fn new(
        rho: f64,
        h: BirthModifier,
        d: f64,
        c: f64,
        pi: OffspringDistribution,
    ) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(invalid(format!("rho must be positive, got {rho}")));
        }
        if !(d >= 0.0 && d.is_finite()) {
            return Err(invalid(format!("d must be nonnegative, got {d}")));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(invalid(format!("c must be nonnegative, got {c}")));
        }
        if !(h.bound() >= 0.0 && h.bound().is_finite()) {
            return Err(invalid("birth modifier needs a finite nonnegative bound"));
        }
        Ok(Self { rho, h, d, c, pi })
    }

    /// Total rate of the single downward transition at `i`.
    pub fn down_rate(&self, i: State) -> f64 {
        let x = i as f64;
        self.d * x + self.c * x * (x - 1.0)
    }
}

/// Outgoing transitions at `i`: `i -> i + j` at `rho i h(i) pi_j`, `i -> i - 1`
/// at `d i + c i (i-1)`. Empty at 0.
pub fn rates_x(i: State, p: &LogisticParams) -> Result<Vec<Jump>> {
    let mut out = Vec::new();
    push_rates_x(i, p, &mut out)?;
    Ok(out)
}

fn push_rates_x(i: State, p: &LogisticParams, out: &mut Vec<Jump>) -> Result<()> {
    if i == 0 {
        return Ok(());
    }
    let birth = p.rho * i as f64 * p.h.eval(i)?;
    for &(j, pj) in p.pi.support() {
        out.push(Jump::new(i + j as u64, birth * pj));
    }
    out.push(Jump::new(i - 1, p.down_rate(i)));
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LogisticChain(pub LogisticParams);

impl JumpRates for LogisticChain {
    fn jumps(&self, i: State, out: &mut Vec<Jump>) -> Result<()> {
        push_rates_x(i, &self.0, out)
    }
}

/// `(pi_bar rho / c, sqrt(pi_bar rho / c))`.
pub fn mu_sigma_x(p: &LogisticParams) -> Result<(f64, f64)> {
    if p.c == 0.0 {
        return Err(Error::NoCarryingCapacity);
    }
    let mu = p.pi.pi_bar() * p.rho / p.c;
    Ok((mu, mu.sqrt()))
}

/// Speeds time up by `1/rho` and centres space at `(mu, sigma)` of [`mu_sigma_x`].
pub fn rescale_x(path: &Path, p: &LogisticParams) -> Result<RescaledPath> {
    let (mu, sigma) = mu_sigma_x(p)?;
    Ok(RescaledPath::from_path(path, p.rho, mu, sigma))
}

/// Parameters of the logistic process whose rates coincide with the line
/// counting process: `rho = s`, unit litters, `h(k) = 1 - k/N`, `c = gamma/(2N)`, `d = 0`.
pub fn moran_as_logistic(p: &MoranParams) -> LogisticParams {
    LogisticParams {
        rho: p.s,
        h: BirthModifier::OneMinusFraction { n: p.n },
        d: 0.0,
        c: p.gamma / (2.0 * p.n as f64),
        pi: OffspringDistribution::single(),
    }
}

/// Weak-selection limit of the time-changed line counting process: up
/// rate `alpha k`, down rate `(gamma/2) k (k-1)`, 0 absorbing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakSelectionChain {
    pub alpha: f64,
    pub gamma: f64,
}

pub fn weak_selection_z(alpha: f64, gamma: f64) -> Result<WeakSelectionChain> {
    if !(alpha > 0.0 && alpha.is_finite() && gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid("alpha and gamma must be positive"));
    }
    Ok(WeakSelectionChain { alpha, gamma })
}

impl WeakSelectionChain {
    /// The same chain written as a logistic branching process.
    pub fn as_logistic(&self) -> LogisticParams {
        LogisticParams {
            rho: self.alpha,
            h: BirthModifier::Constant(1.0),
            d: 0.0,
            c: self.gamma / 2.0,
            pi: OffspringDistribution::single(),
        }
    }
}

impl JumpRates for WeakSelectionChain {
    fn jumps(&self, k: State, out: &mut Vec<Jump>) -> Result<()> {
        if k == 0 {
            return Ok(());
        }
        let x = k as f64;
        out.push(Jump::new(k + 1, self.alpha * x));
        let down = self.gamma / 2.0 * x * (x - 1.0);
        if down > 0.0 {
            out.push(Jump::new(k - 1, down));
        }
        Ok(())
    }
}

/// Sign of the expected increment of the embedded chain of `X`:
/// `rho i h(i) pi_bar - d i - c i (i-1)`.
pub fn drift_embedded_x(i: State, p: &LogisticParams) -> Result<f64> {
    if i == 0 {
        return Ok(0.0);
    }
    let up = p.rho * i as f64 * p.h.eval(i)? * p.pi.pi_bar();
    Ok(up - p.down_rate(i))
}

/// Drift sign scan of `X` over `1..=max_state`.
pub fn drift_scan_x(p: &LogisticParams, max_state: State, eta: f64) -> Result<DriftScan> {
    let (mu, sigma) = mu_sigma_x(p)?;
    scan_drift(max_state, mu, sigma, eta, |k| drift_embedded_x(k, p))
}

/// Verdicts on a sequence of parameters indexed by `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub n_values: Vec<u64>,
    pub rho_decreasing: bool,
    pub rho_over_c_increasing: bool,
    pub c_over_d_increasing: bool,
    /// Finite-N proxy of the birth-modifier condition, one value per N.
    pub h_proxy: Vec<f64>,
    /// Set when the proxy fails to decrease along the sequence.
    pub h_proxy_flagged: bool,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.rho_decreasing
            && self.rho_over_c_increasing
            && self.c_over_d_increasing
            && !self.h_proxy_flagged
    }
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

/// Checks the scaling assumptions on a sequence `(N, params)` with increasing `N`.
///
/// The h-condition is tested through the proxy
/// `max_x |h_N(round(mu + x sigma)) - 1| / (|x| sigma / mu)` over the nonzero
/// points of `grid`, skipping points that fall outside the domain of `h_N`.
/// This is a heuristic: the proxy must decrease in `N` (or vanish identically).
pub fn check_assumptions(seq: &[(u64, LogisticParams)], grid: &[f64]) -> Result<AssumptionReport> {
    if seq.len() < 3 {
        return Err(Error::InsufficientSequence(seq.len()));
    }
    if seq.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(domain("population sizes must be increasing"));
    }
    let rho: Vec<f64> = seq.iter().map(|(_, p)| p.rho).collect();
    let rho_over_c: Vec<f64> = seq.iter().map(|(_, p)| p.rho / p.c).collect();
    let c_over_d_increasing = if seq.iter().all(|(_, p)| p.d == 0.0) {
        true
    } else {
        let ratios: Vec<f64> = seq.iter().map(|(_, p)| p.c / p.d).collect();
        strictly_increasing(&ratios)
    };
    let mut h_proxy = Vec::with_capacity(seq.len());
    for (_, p) in seq {
        let (mu, sigma) = mu_sigma_x(p)?;
        let mut worst = 0.0f64;
        for &x in grid.iter().filter(|x| **x != 0.0) {
            let k = (mu + x * sigma).round();
            if k < 1.0 {
                continue;
            }
            let h = match p.h.eval(k as u64) {
                Ok(h) => h,
                Err(Error::Domain(_)) => continue,
                Err(e) => return Err(e),
            };
            worst = worst.max((h - 1.0).abs() / (x.abs() * sigma / mu));
        }
        h_proxy.push(worst);
    }
    let vanishing = h_proxy.iter().all(|v| *v <= 1e-15);
    let decreasing = h_proxy.windows(2).all(|w| w[1] < w[0]);
    Ok(AssumptionReport {
        n_values: seq.iter().map(|(n, _)| *n).collect(),
        rho_decreasing: rho.windows(2).all(|w| w[1] < w[0]),
        rho_over_c_increasing: strictly_increasing(&rho_over_c),
        c_over_d_increasing,
        h_proxy,
        h_proxy_flagged: !(vanishing || decreasing),
    })
}
