//! One function per command. Each returns the data table and, for checks,
//! a failure message when a declared tolerance is missed.

use rayon::prelude::*;
use serde_json::json;
use statrs::distribution::{ContinuousCDF, Normal};

use asg_core::ctmc::{sample_ctmc_at, simulate_ctmc, Path, State};
use asg_core::limit_verify::{
    duality_check, ks_statistic, sup_generator_gap, ChainMode, GridSpec, TestFunction,
};
use asg_core::line_counting::{
    drift_scan_b, mu_sigma_b, stationary_b, stationary_oracle_b, LineCountingChain, MoranParams,
};
use asg_core::logistic::{
    drift_scan_x, mu_sigma_x, BirthModifier, LogisticChain, LogisticParams, OffspringDistribution,
};
use asg_core::moran_asg::{build_graphical, trace_asg};
use asg_core::ou::{
    ou_autocov, ou_stationary, simulate_ou_at, simulate_ou_grid, InitialLaw, OUParams,
};
use asg_core::stats::{covariance_with_se, DiscreteSampler};
use asg_core::RngStream;

use crate::config::{self, ChainFamily, Command, ExperimentConfig, FluctModel, StationaryMethod};
use crate::error::CliError;
use crate::row;
use crate::table::ResultTable;

/// Everything a command produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: ResultTable,
    /// Extra tables written next to the main one, keyed by file suffix.
    pub auxiliary: Vec<(String, ResultTable)>,
    pub failure: Option<String>,
}

impl From<ResultTable> for Outcome {
    fn from(table: ResultTable) -> Self {
        Self {
            table,
            auxiliary: Vec::new(),
            failure: None,
        }
    }
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn check_times(key: &str, times: &[f64], horizon: f64) -> Result<(), CliError> {
    if times.is_empty() {
        return Err(validation(format!(
            "key `{key}`: at least one time is required"
        )));
    }
    if times.iter().any(|&t| !(t >= 0.0 && t <= horizon)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(validation(format!(
            "key `{key}`: times must be sorted and lie in [0, horizon = {horizon}]"
        )));
    }
    Ok(())
}

pub fn run_command(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed;
    match &cfg.command {
        Command::SimulateB(c) => {
            let p = c.params()?;
            let (mu, sigma) = mu_sigma_b(&p);
            simulate_chain(
                &LineCountingChain(p),
                c.init,
                c.horizon,
                c.replicates,
                c.times.as_deref(),
                seed,
                |k| (k as f64 - mu) / sigma,
            )
            .map(Outcome::from)
        }
        Command::SimulateX(c) => {
            let p = c.params()?;
            let scale = mu_sigma_x(&p).ok();
            simulate_chain(
                &LogisticChain(p),
                c.init,
                c.horizon,
                c.replicates,
                c.times.as_deref(),
                seed,
                |k| scale.map_or(f64::NAN, |(mu, sigma)| (k as f64 - mu) / sigma),
            )
            .map(Outcome::from)
        }
        Command::SimulateOu(c) => simulate_ou(c, seed).map(Outcome::from),
        Command::SimulateAsg(c) => simulate_asg(c, seed),
        Command::Stationary(c) => stationary(c).map(Outcome::from),
        Command::GenGap(c) => gen_gap(c),
        Command::Duality(c) => duality(c, seed),
        Command::DriftScan(c) => drift_scan(c),
        Command::FluctTest(c) => fluct_test(c, seed),
    }
}

fn simulate_chain<J, F>(
    chain: &J,
    init: State,
    horizon: f64,
    replicates: u64,
    times: Option<&[f64]>,
    seed: u64,
    rescale: F,
) -> Result<ResultTable, CliError>
where
    J: asg_core::ctmc::JumpRates + Sync,
    F: Fn(State) -> f64,
{
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(validation("key `horizon`: must be positive and finite"));
    }
    if replicates == 0 {
        return Err(validation("key `replicates`: must be at least 1"));
    }
    let mut table = ResultTable::new(&["replicate", "time", "state", "rescaled"]);
    match times {
        Some(ts) => {
            check_times("times", ts, horizon)?;
            let runs: Vec<Vec<State>> = (0..replicates)
                .into_par_iter()
                .map(|r| sample_ctmc_at(chain, init, ts, &mut RngStream::new(seed, r).rng()))
                .collect::<Result<_, _>>()?;
            for (r, states) in runs.iter().enumerate() {
                for (&t, &k) in ts.iter().zip(states) {
                    table.push(row![r, t, k, rescale(k)]);
                }
            }
        }
        None => {
            let runs: Vec<Path> = (0..replicates)
                .into_par_iter()
                .map(|r| simulate_ctmc(chain, init, horizon, &mut RngStream::new(seed, r).rng()))
                .collect::<Result<_, _>>()?;
            let mut truncated = Vec::new();
            for (r, path) in runs.iter().enumerate() {
                for (&t, &k) in path.jump_times().iter().zip(path.states()) {
                    table.push(row![r, t, k, rescale(k)]);
                }
                if path.truncated() {
                    truncated.push(r);
                }
            }
            table.note("truncated_replicates", json!(truncated));
        }
    }
    Ok(table)
}

fn simulate_ou(c: &config::SimulateOu, seed: u64) -> Result<ResultTable, CliError> {
    let p = c.params()?;
    if c.replicates == 0 {
        return Err(validation("key `replicates`: must be at least 1"));
    }
    let paths = (0..c.replicates)
        .into_par_iter()
        .map(|r| simulate_ou_grid(&p, c.dt, c.horizon, &mut RngStream::new(seed, r).rng()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = ResultTable::new(&["replicate", "time", "value"]);
    for (r, path) in paths.iter().enumerate() {
        for (&t, &y) in path.times.iter().zip(&path.values) {
            table.push(row![r, t, y]);
        }
    }
    Ok(table)
}

fn simulate_asg(c: &config::SimulateAsg, seed: u64) -> Result<Outcome, CliError> {
    let graph = build_graphical(
        c.n,
        c.gamma,
        c.s,
        c.horizon,
        &mut RngStream::new(seed, 0).rng(),
    )?;
    let from = c.trace_from.unwrap_or(c.horizon);
    let snaps = trace_asg(&graph, &c.sample, from)?;
    let mut table = ResultTable::new(&["time", "line_count", "ancestors"]);
    for s in &snaps {
        let labels: Vec<String> = s.ancestors.iter().map(u32::to_string).collect();
        table.push(row![s.time, s.line_count(), labels.join(" ")]);
    }
    let mut events = ResultTable::new(&["time", "source", "target", "kind"]);
    for e in graph.events() {
        events.push(row![e.time, e.source, e.target, e.kind.as_str()]);
    }
    Ok(Outcome {
        table,
        auxiliary: vec![("events".into(), events)],
        failure: None,
    })
}

fn stationary(c: &config::Stationary) -> Result<ResultTable, CliError> {
    let p = MoranParams::new(c.n, c.gamma, c.s)?;
    let probs = match c.method {
        StationaryMethod::ClosedForm => stationary_b(&p),
        StationaryMethod::Product => stationary_oracle_b(&p)?,
    };
    let mut table = ResultTable::new(&["k", "probability"]);
    for (i, pr) in probs.into_iter().enumerate() {
        table.push(row![i + 1, pr]);
    }
    Ok(table)
}

fn offspring(pi: &[(u32, f64)]) -> Result<OffspringDistribution, CliError> {
    Ok(OffspringDistribution::new(pi)?)
}

/// The family member at population size `n`.
fn chain_at(family: &ChainFamily, n: u64) -> Result<ChainMode, CliError> {
    Ok(match family {
        ChainFamily::Moran { gamma, s } => ChainMode::Moran(MoranParams::new(n, *gamma, s.at(n))?),
        ChainFamily::Logistic { rho, c, d, pi } => ChainMode::Logistic(LogisticParams::new(
            rho.at(n),
            BirthModifier::Constant(1.0),
            d.at(n),
            c.at(n),
            offspring(pi)?,
        )?),
    })
}

/// OU limit parameters `(theta, sigma^2)` of a family.
fn limit_ou(family: &ChainFamily) -> Result<(f64, f64), CliError> {
    Ok(match family {
        ChainFamily::Moran { .. } => (1.0, 2.0),
        ChainFamily::Logistic { pi, .. } => {
            let pi = offspring(pi)?;
            (pi.pi_bar(), pi.v2() + pi.pi_bar())
        }
    })
}

fn check_n_values(ns: &[u64]) -> Result<(), CliError> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(validation("key `n_values`: need at least one positive N"));
    }
    Ok(())
}

fn gen_gap(c: &config::GenGap) -> Result<Outcome, CliError> {
    check_n_values(&c.n_values)?;
    let functions: Vec<TestFunction> = match &c.functions {
        None => TestFunction::library(),
        Some(names) => names
            .iter()
            .map(|n| {
                TestFunction::by_name(n)
                    .ok_or_else(|| validation(format!("key `functions`: unknown function {n:?}")))
            })
            .collect::<Result<_, _>>()?,
    };
    let (theta, sigma2) = limit_ou(&c.chain)?;
    let ou = OUParams::stationary(c.theta.unwrap_or(theta), c.sigma2.unwrap_or(sigma2))?;
    let grid = GridSpec::lattice(c.half_width);
    let mut table = ResultTable::new(&["n", "function", "gap", "argmax", "points", "mu", "sigma"]);
    let mut failures = Vec::new();
    for f in &functions {
        let mut gaps = Vec::new();
        for &n in &c.n_values {
            let chain = chain_at(&c.chain, n)?;
            let centering = chain.centering()?;
            let g = sup_generator_gap(f, &grid, &chain, &ou)?;
            table.push(row![
                n,
                f.name(),
                g.sup,
                g.argmax,
                g.points,
                centering.mu,
                centering.sigma
            ]);
            gaps.push(g.sup);
        }
        if let Some(tol) = c.tolerance {
            let all_zero = gaps.iter().all(|&g| g == 0.0);
            let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
            let last = *gaps.last().unwrap();
            if !all_zero && !(decreasing && last < tol) {
                failures.push(format!("{}: gaps {gaps:?} (tolerance {tol})", f.name()));
            }
        }
    }
    Ok(Outcome {
        table,
        auxiliary: Vec::new(),
        failure: (!failures.is_empty()).then(|| failures.join("; ")),
    })
}

fn duality(c: &config::Duality, seed: u64) -> Result<Outcome, CliError> {
    let p = MoranParams::new(c.n, c.gamma, c.s)?;
    if c.replicates == 0 {
        return Err(validation("key `replicates`: must be at least 1"));
    }
    let mut table = ResultTable::new(&[
        "k",
        "sample_size",
        "t",
        "lhs_mean",
        "lhs_se",
        "rhs_mean",
        "rhs_se",
        "discrepancy",
        "pass",
    ]);
    let mut failures = Vec::new();
    let mut job = 0u64;
    for &k in &c.k_values {
        for &n in &c.sample_sizes {
            for &t in &c.times {
                let e = duality_check(
                    &p,
                    k,
                    n,
                    t,
                    c.replicates as usize,
                    RngStream::new(seed, job),
                )?;
                job += 1;
                let pass = e.within(c.z);
                if !pass {
                    failures.push(format!("k={k} n={n} t={t}"));
                }
                table.push(row![
                    k,
                    n,
                    t,
                    e.lhs_mean,
                    e.lhs_se,
                    e.rhs_mean,
                    e.rhs_se,
                    e.discrepancy(),
                    pass
                ]);
            }
        }
    }
    Ok(Outcome {
        table,
        auxiliary: Vec::new(),
        failure: (!failures.is_empty())
            .then(|| format!("duality mismatch at {}", failures.join(", "))),
    })
}

fn drift_scan(c: &config::DriftScan) -> Result<Outcome, CliError> {
    check_n_values(&c.n_values)?;
    let mut table = ResultTable::new(&[
        "n",
        "mu",
        "sigma",
        "sign_changes",
        "first_negative",
        "negative_above",
        "positive_below",
        "empirical_eta",
    ]);
    let mut failures = Vec::new();
    for &n in &c.n_values {
        let scan = match chain_at(&c.chain, n)? {
            ChainMode::Moran(p) => drift_scan_b(&p, c.eta)?,
            ChainMode::Logistic(p) => {
                let (mu, _) = mu_sigma_x(&p)?;
                drift_scan_x(&p, (c.max_factor * mu).ceil().max(1.0) as State, c.eta)?
            }
        };
        if c.check && !(scan.sign_changes == 1 && scan.negative_above && scan.positive_below) {
            failures.push(format!("N={n}"));
        }
        table.push(row![
            n,
            scan.mu,
            scan.sigma,
            scan.sign_changes,
            scan.first_negative,
            scan.negative_above,
            scan.positive_below,
            scan.empirical_eta
        ]);
    }
    Ok(Outcome {
        table,
        auxiliary: Vec::new(),
        failure: (!failures.is_empty())
            .then(|| format!("drift sign condition fails at {}", failures.join(", "))),
    })
}

/// Observations of one fluctuation experiment: `values[r][i]` is replicate
/// `r` at rescaled time `times[i]`.
struct FluctSamples {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    ou: OUParams,
}

impl FluctSamples {
    fn column(&self, t: f64) -> Vec<f64> {
        let i = self
            .times
            .iter()
            .position(|&s| s == t)
            .expect("observation time recorded");
        self.values.iter().map(|v| v[i]).collect()
    }
}

fn fluct_samples(c: &config::FluctTest, seed: u64) -> Result<FluctSamples, CliError> {
    if c.replicates < 1000 {
        return Err(validation(
            "key `replicates`: fluct-test needs at least 1000 replicates",
        ));
    }
    if !(c.horizon > 0.0 && c.horizon.is_finite()) {
        return Err(validation("key `horizon`: must be positive and finite"));
    }
    let mut times: Vec<f64> = c.times.clone();
    if !c.lags.is_empty() {
        times.push(c.autocov_at);
        times.extend(c.lags.iter().map(|l| c.autocov_at + l));
    }
    if times.is_empty() {
        return Err(validation(
            "key `times`: at least one observation time is required",
        ));
    }
    if c.lags.iter().any(|&l| !(l >= 0.0)) {
        return Err(validation("key `lags`: lags must be nonnegative"));
    }
    if let Some(&t) = times.iter().find(|&&t| !(t >= 0.0 && t <= c.horizon)) {
        return Err(validation(format!(
            "observation time {t} lies outside the horizon [0, {}]",
            c.horizon
        )));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();

    let reps = c.replicates;
    let (values, ou) = match &c.model {
        FluctModel::Moran { n, gamma, s } => {
            let p = MoranParams::new(*n, *gamma, *s)?;
            let (mu, sigma) = mu_sigma_b(&p);
            let init_law = DiscreteSampler::new(&stationary_b(&p), 1)?;
            let real: Vec<f64> = times.iter().map(|t| t / p.s).collect();
            let chain = LineCountingChain(p);
            let values = (0..reps)
                .into_par_iter()
                .map(|r| -> Result<Vec<f64>, CliError> {
                    let mut rng = RngStream::new(seed, r).rng();
                    let b0 = init_law.sample(&mut rng);
                    let ks = sample_ctmc_at(&chain, b0, &real, &mut rng)?;
                    Ok(ks.into_iter().map(|k| (k as f64 - mu) / sigma).collect())
                })
                .collect::<Result<Vec<_>, _>>()?;
            (values, OUParams::stationary(1.0, 2.0)?)
        }
        FluctModel::Logistic {
            rho,
            h,
            d,
            c: comp,
            pi,
            burn_in,
        } => {
            if !(*burn_in >= 0.0) {
                return Err(validation("key `burn_in`: must be nonnegative"));
            }
            let p = config::logistic_params(*rho, *h, *d, *comp, pi)?;
            let (mu, sigma) = mu_sigma_x(&p)?;
            let real: Vec<f64> = times.iter().map(|t| (burn_in + t) / p.rho).collect();
            let start = (mu.round() as State).max(1);
            let ou = OUParams::stationary(p.pi.pi_bar(), p.pi.v2() + p.pi.pi_bar())?;
            let chain = LogisticChain(p);
            let values = (0..reps)
                .into_par_iter()
                .map(|r| -> Result<Vec<f64>, CliError> {
                    let mut rng = RngStream::new(seed, r).rng();
                    let ks = sample_ctmc_at(&chain, start, &real, &mut rng)?;
                    Ok(ks.into_iter().map(|k| (k as f64 - mu) / sigma).collect())
                })
                .collect::<Result<Vec<_>, _>>()?;
            (values, ou)
        }
        FluctModel::Ou { theta, sigma2 } => {
            let p = OUParams::new(*theta, *sigma2, InitialLaw::Stationary)?;
            let values = (0..reps)
                .into_par_iter()
                .map(|r| simulate_ou_at(&p, &times, &mut RngStream::new(seed, r).rng()))
                .collect::<Result<Vec<_>, _>>()?;
            (values, p)
        }
    };
    Ok(FluctSamples { times, values, ou })
}

/// Marginal KS distances and autocovariances of the rescaled process
/// against its OU limit.
pub fn fluct_test(c: &config::FluctTest, seed: u64) -> Result<Outcome, CliError> {
    let samples = fluct_samples(c, seed)?;
    let (_, var) = ou_stationary(&samples.ou);
    let normal = Normal::new(0.0, var.sqrt()).map_err(|e| CliError::Other(e.to_string()))?;
    let mut table = ResultTable::new(&[
        "quantity",
        "time",
        "lag",
        "value",
        "reference",
        "deviation",
        "se",
        "pass",
    ]);
    let mut failures = Vec::new();
    for &t in &c.times {
        let col = samples.column(t);
        let ks = ks_statistic(&col, |x| normal.cdf(x))?;
        let pass = c.ks_tolerance.map(|tol| ks < tol);
        if pass == Some(false) {
            failures.push(format!("KS {ks} at t = {t}"));
        }
        table.push(row!["ks", t, None::<f64>, ks, 0.0, ks, None::<f64>, pass]);
    }
    let base = if c.lags.is_empty() {
        Vec::new()
    } else {
        samples.column(c.autocov_at)
    };
    for &lag in &c.lags {
        let later = samples.column(c.autocov_at + lag);
        let (value, se) = covariance_with_se(&base, &later)?;
        let reference = ou_autocov(&samples.ou, lag)?;
        let deviation = value - reference;
        let pass = c.autocov_tolerance.map(|tol| deviation.abs() <= tol);
        if pass == Some(false) {
            failures.push(format!("autocovariance deviation {deviation} at lag {lag}"));
        }
        table.push(row![
            "autocov",
            c.autocov_at,
            lag,
            value,
            reference,
            deviation,
            se,
            pass
        ]);
    }
    table.note("ou_theta", json!(samples.ou.theta));
    table.note("ou_sigma2", json!(samples.ou.sigma2));
    Ok(Outcome {
        table,
        auxiliary: Vec::new(),
        failure: (!failures.is_empty()).then(|| failures.join("; ")),
    })
}
