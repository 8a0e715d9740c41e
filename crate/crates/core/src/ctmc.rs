//! Exact event-driven simulation of continuous-time Markov chains on the
//! nonnegative integers, and the sparse path types they produce.

use rand::Rng;

use crate::error::{domain, Error, Result};

pub type State = u64;

/// One outgoing transition of a chain: jump to `target` at `rate` events per unit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub target: State,
    pub rate: f64,
}

impl Jump {
    pub fn new(target: State, rate: f64) -> Self {
        Self { target, rate }
    }
}

/// A time-homogeneous jump rate map `k -> {(target, rate)}`.
///
/// Implementors push the transitions out of `state` onto `out`, which the
/// caller has already cleared. Zero-rate entries are allowed and ignored.
pub trait JumpRates {
    fn jumps(&self, state: State, out: &mut Vec<Jump>) -> Result<()>;

    /// Sum of all outgoing rates at `state`.
    fn total_rate(&self, state: State) -> Result<f64> {
        let mut buf = Vec::new();
        self.jumps(state, &mut buf)?;
        Ok(buf.iter().map(|j| j.rate).sum())
    }
}

impl<T: JumpRates + ?Sized> JumpRates for &T {
    fn jumps(&self, state: State, out: &mut Vec<Jump>) -> Result<()> {
        (**self).jumps(state, out)
    }
}

/// Adapts a closure into a [`JumpRates`].
pub struct FnRates<F>(pub F);

impl<F> JumpRates for FnRates<F>
where
    F: Fn(State, &mut Vec<Jump>),
{
    fn jumps(&self, state: State, out: &mut Vec<Jump>) -> Result<()> {
        (self.0)(state, out);
        Ok(())
    }
}

/// Inverse-CDF exponential draw. `1 - u` lies in (0, 1], so the result is finite.
pub fn sample_exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// A right-continuous piecewise-constant trajectory stored as its jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    jump_times: Vec<f64>,
    states: Vec<State>,
    horizon: f64,
    truncated: bool,
}

impl Path {
    /// Builds a path from jump times (the first must be 0) and the state entered at each.
    pub fn new(jump_times: Vec<f64>, states: Vec<State>, horizon: f64) -> Result<Self> {
        if jump_times.is_empty() || jump_times.len() != states.len() {
            return Err(domain(
                "path needs one state per jump time and at least one entry",
            ));
        }
        if jump_times[0] != 0.0 {
            return Err(domain("path must start at time 0"));
        }
        if jump_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("jump times must be strictly increasing"));
        }
        if states.windows(2).any(|w| w[0] == w[1]) {
            return Err(domain("consecutive states must differ"));
        }
        let last = *jump_times.last().unwrap();
        if !(horizon >= last) || !horizon.is_finite() {
            return Err(domain(
                "horizon must be finite and at least the last jump time",
            ));
        }
        Ok(Self {
            jump_times,
            states,
            horizon,
            truncated: false,
        })
    }

    pub fn constant(state: State, horizon: f64) -> Self {
        Self {
            jump_times: vec![0.0],
            states: vec![state],
            horizon,
            truncated: false,
        }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// True when simulation stopped at the jump cap before reaching the requested horizon.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn initial_state(&self) -> State {
        self.states[0]
    }

    pub fn final_state(&self) -> State {
        *self.states.last().unwrap()
    }

    pub fn jump_count(&self) -> usize {
        self.states.len() - 1
    }

    pub fn evaluate_at(&self, t: f64) -> Result<State> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(domain(format!("time {t} outside [0, {}]", self.horizon)));
        }
        // index of the last jump time <= t
        let idx = self.jump_times.partition_point(|&s| s <= t) - 1;
        Ok(self.states[idx])
    }

    /// The jump chain: states in visiting order, starting with the initial state.
    pub fn embedded_chain(&self) -> Vec<State> {
        self.states.clone()
    }

    /// Sojourn lengths of each completed visit, paired with the state visited.
    /// The final, censored visit is omitted.
    pub fn holding_times(&self) -> impl Iterator<Item = (State, f64)> + '_ {
        self.jump_times
            .windows(2)
            .zip(&self.states)
            .map(|(w, &s)| (s, w[1] - w[0]))
    }
}

/// A real-valued trajectory that can be evaluated on a time window.
pub trait Trajectory {
    fn horizon(&self) -> f64;
    fn value_at(&self, t: f64) -> Result<f64>;
}

/// A path after affine rescaling of time and space: `t -> t * time_scale`,
/// `k -> (k - mu) / sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledPath {
    pub jump_times: Vec<f64>,
    pub values: Vec<f64>,
    pub horizon: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl RescaledPath {
    pub fn from_path(path: &Path, time_scale: f64, mu: f64, sigma: f64) -> Self {
        Self {
            jump_times: path.jump_times.iter().map(|t| t * time_scale).collect(),
            values: path
                .states
                .iter()
                .map(|&k| (k as f64 - mu) / sigma)
                .collect(),
            horizon: path.horizon * time_scale,
            mu,
            sigma,
        }
    }
}

impl Trajectory for RescaledPath {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn value_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(domain(format!("time {t} outside [0, {}]", self.horizon)));
        }
        let idx = self.jump_times.partition_point(|&s| s <= t) - 1;
        Ok(self.values[idx])
    }
}

/// Limits applied to a single simulated path.
#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub max_jumps: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            max_jumps: 100_000_000,
        }
    }
}

/// Summary of a run of [`run_ctmc`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub final_state: State,
    pub jumps: u64,
    /// Time of the last jump (0 if none).
    pub last_jump_time: f64,
    pub absorbed: bool,
    pub truncated: bool,
}

/// Core Gillespie loop. Calls `on_jump(time, new_state)` for every jump in
/// `(0, horizon]` and returns where the chain ended.
pub fn run_ctmc<J, R, F>(
    rates: &J,
    init: State,
    horizon: f64,
    rng: &mut R,
    opts: SimOptions,
    mut on_jump: F,
) -> Result<RunSummary>
where
    J: JumpRates + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(f64, State),
{
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(domain("horizon must be finite and nonnegative"));
    }
    let mut buf: Vec<Jump> = Vec::with_capacity(8);
    let mut state = init;
    let mut time = 0.0f64;
    let mut jumps = 0u64;
    let mut absorbed = false;
    let mut truncated = false;
    loop {
        buf.clear();
        rates.jumps(state, &mut buf)?;
        let mut total = 0.0;
        for j in &buf {
            if !j.rate.is_finite() || j.rate < 0.0 {
                return Err(Error::MalformedModel(format!(
                    "rate {} from {state} to {}",
                    j.rate, j.target
                )));
            }
            if j.target == state && j.rate > 0.0 {
                return Err(Error::MalformedModel(format!("self-loop at state {state}")));
            }
            total += j.rate;
        }
        if !total.is_finite() {
            return Err(Error::MalformedModel(format!(
                "infinite total rate at {state}"
            )));
        }
        if total == 0.0 {
            absorbed = true;
            break;
        }
        let next = time + sample_exponential(rng, total);
        if next > horizon {
            break;
        }
        if jumps == opts.max_jumps {
            truncated = true;
            break;
        }
        // A holding time below the spacing of f64 near `time` would collapse two jumps.
        time = if next > time { next } else { time.next_up() };
        let mut u = rng.random::<f64>() * total;
        let mut target = None;
        for j in &buf {
            if j.rate > 0.0 {
                target = Some(j.target);
                if u < j.rate {
                    break;
                }
                u -= j.rate;
            }
        }
        state = target.expect("positive total rate has a positive entry");
        jumps += 1;
        on_jump(time, state);
    }
    Ok(RunSummary {
        final_state: state,
        jumps,
        last_jump_time: time,
        absorbed,
        truncated,
    })
}

/// Samples a full path of the chain on `[0, horizon]`.
pub fn simulate_ctmc<J, R>(rates: &J, init: State, horizon: f64, rng: &mut R) -> Result<Path>
where
    J: JumpRates + ?Sized,
    R: Rng + ?Sized,
{
    simulate_ctmc_with(rates, init, horizon, rng, SimOptions::default())
}

pub fn simulate_ctmc_with<J, R>(
    rates: &J,
    init: State,
    horizon: f64,
    rng: &mut R,
    opts: SimOptions,
) -> Result<Path>
where
    J: JumpRates + ?Sized,
    R: Rng + ?Sized,
{
    if !(horizon > 0.0) {
        return Err(domain("horizon must be positive"));
    }
    let mut jump_times = vec![0.0];
    let mut states = vec![init];
    let summary = run_ctmc(rates, init, horizon, rng, opts, |t, k| {
        jump_times.push(t);
        states.push(k);
    })?;
    let horizon = if summary.truncated {
        summary.last_jump_time
    } else {
        horizon
    };
    Ok(Path {
        jump_times,
        states,
        horizon,
        truncated: summary.truncated,
    })
}

/// Runs the chain to `max(times)` and returns the state at each observation
/// time, without storing the path. `times` must be sorted and nonnegative.
pub fn sample_ctmc_at<J, R>(
    rates: &J,
    init: State,
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<State>>
where
    J: JumpRates + ?Sized,
    R: Rng + ?Sized,
{
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(domain("observation times must be sorted and nonnegative"));
    }
    let horizon = times.last().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(times.len());
    let mut current = init;
    let summary = run_ctmc(rates, init, horizon, rng, SimOptions::default(), |t, k| {
        while out.len() < times.len() && times[out.len()] < t {
            out.push(current);
        }
        current = k;
    })?;
    if summary.truncated {
        return Err(domain("jump cap reached before the last observation time"));
    }
    out.resize(times.len(), summary.final_state);
    Ok(out)
}
