use crate::ctmc::State;
use crate::error::{domain, Error, Result};
use crate::line_counting::{mu_sigma_b, rates_b, MoranParams};
use crate::logistic::{mu_sigma_x, LogisticParams};
use crate::ou::{ou_generator, OUParams};

use super::TestFunction;

/// Affine map `k -> (k - mu) / sigma` between chain states and the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centering {
    pub mu: f64,
    pub sigma: f64,
}

impl Centering {
    pub fn point(&self, k: State) -> f64 {
        (k as f64 - self.mu) / self.sigma
    }

    /// The state whose image is `x`, if `x` is (up to round-off) a lattice point.
    pub fn state(&self, x: f64) -> Option<State> {
        let k = self.mu + x * self.sigma;
        let r = k.round();
        (r >= 0.0 && (k - r).abs() <= 1e-7 * (1.0 + r)).then_some(r as State)
    }
}

/// The chain whose rescaled generator is compared with the OU generator.
#[derive(Debug, Clone)]
pub enum ChainMode {
    /// Line counting process, time sped up by `1/s`.
    Moran(MoranParams),
    /// Logistic branching process, time sped up by `1/rho`.
    Logistic(LogisticParams),
}

impl ChainMode {
    /// The chain's own centering constants.
    pub fn centering(&self) -> Result<Centering> {
        let (mu, sigma) = match self {
            ChainMode::Moran(p) => mu_sigma_b(p),
            ChainMode::Logistic(p) => mu_sigma_x(p)?,
        };
        Ok(Centering { mu, sigma })
    }

    fn max_state(&self) -> Option<State> {
        match self {
            ChainMode::Moran(p) => Some(p.n),
            ChainMode::Logistic(_) => None,
        }
    }

    /// Rescaled generator at state `k`, lattice spacing taken from `centering`.
    pub fn generator_at(&self, f: &TestFunction, k: State, centering: Centering) -> Result<f64> {
        let x = centering.point(k);
        let step = 1.0 / centering.sigma;
        let fx = f.eval(x);
        match self {
            ChainMode::Moran(p) => {
                let (_, down) = rates_b(k, p)?;
                let kf = k as f64;
                let up = kf * (1.0 - kf / p.n as f64);
                let down = down / p.s;
                Ok(up * (f.eval(x + step) - fx) + down * (f.eval(x - step) - fx))
            }
            ChainMode::Logistic(p) => {
                if k == 0 {
                    return Err(domain("the rescaled logistic generator needs k >= 1"));
                }
                let kh = k as f64 * p.h.eval(k)?;
                let mut total = 0.0;
                for &(j, pj) in p.pi.support() {
                    total += kh * pj * (f.eval(x + j as f64 * step) - fx);
                }
                total += p.down_rate(k) / p.rho * (f.eval(x - step) - fx);
                Ok(total)
            }
        }
    }

    /// States `k` with `|(k - mu)/sigma| <= a`, inside the chain's state space.
    pub fn lattice_states(&self, a: f64, centering: Centering) -> Vec<State> {
        let lo = (centering.mu - a * centering.sigma).ceil().max(1.0) as State;
        let mut hi = (centering.mu + a * centering.sigma).floor().max(0.0) as State;
        if let Some(m) = self.max_state() {
            hi = hi.min(m);
        }
        (lo.saturating_sub(1)..=hi + 1)
            .filter(|&k| k >= lo && k <= hi && centering.point(k).abs() <= a)
            .collect()
    }
}

fn lattice_state(mode: &ChainMode, x: f64, c: Centering) -> Result<State> {
    let k = c
        .state(x)
        .ok_or_else(|| domain(format!("{x} is not a lattice point")))?;
    if k == 0 || mode.max_state().is_some_and(|m| k > m) {
        return Err(domain(format!(
            "{x} maps to state {k} outside the state space"
        )));
    }
    Ok(k)
}

/// Rescaled generator of the line counting process at lattice point `x`.
pub fn generator_b_rescaled(f: &TestFunction, x: f64, p: &MoranParams) -> Result<f64> {
    let mode = ChainMode::Moran(*p);
    let c = mode.centering()?;
    let k = lattice_state(&mode, x, c)?;
    mode.generator_at(f, k, c)
}

/// Rescaled generator of the logistic process at lattice point `x`.
pub fn generator_x_rescaled(f: &TestFunction, x: f64, p: &LogisticParams) -> Result<f64> {
    let mode = ChainMode::Logistic(p.clone());
    let c = mode.centering()?;
    let k = lattice_state(&mode, x, c)?;
    mode.generator_at(f, k, c)
}

/// Compact `[-half_width, half_width]` and how it is discretised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub mode: GridMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridMode {
    /// The chain's own lattice intersected with the compact.
    Lattice,
    /// `n` equispaced points; not usable for generator gaps.
    Resolution(usize),
}

impl GridSpec {
    pub fn lattice(half_width: f64) -> Self {
        Self {
            half_width,
            mode: GridMode::Lattice,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorGap {
    /// `max |G_N f(x) - G f(x)|` over the lattice points.
    pub sup: f64,
    /// Lattice point attaining the maximum.
    pub argmax: f64,
    pub points: usize,
}

/// Sup-distance between the rescaled chain generator and the OU generator
/// on the lattice points of the compact, using the chain's own centering.
pub fn sup_generator_gap(
    f: &TestFunction,
    grid: &GridSpec,
    chain: &ChainMode,
    ou: &OUParams,
) -> Result<GeneratorGap> {
    let centering = chain.centering()?;
    sup_generator_gap_with(f, grid, chain, ou, centering)
}

/// As [`sup_generator_gap`] with an explicit centering.
pub fn sup_generator_gap_with(
    f: &TestFunction,
    grid: &GridSpec,
    chain: &ChainMode,
    ou: &OUParams,
    centering: Centering,
) -> Result<GeneratorGap> {
    if grid.mode != GridMode::Lattice {
        return Err(domain("generator gaps are only defined on lattice grids"));
    }
    if !(grid.half_width > 0.0) {
        return Err(domain("grid half-width must be positive"));
    }
    let states = chain.lattice_states(grid.half_width, centering);
    if states.is_empty() {
        return Err(Error::DegenerateGrid);
    }
    let mut best = GeneratorGap {
        sup: 0.0,
        argmax: centering.point(states[0]),
        points: states.len(),
    };
    for k in states {
        let x = centering.point(k);
        let gap = (chain.generator_at(f, k, centering)? - ou_generator(f, x, ou)).abs();
        if gap > best.sup {
            best.sup = gap;
            best.argmax = x;
        }
    }
    Ok(best)
}
