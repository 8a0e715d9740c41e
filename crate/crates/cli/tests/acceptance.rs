//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Run with
//! `cargo test -p asg-lab --test acceptance`.

use std::fs;
use std::process::Command as Process;
use std::time::Instant;

use rand::Rng;
use serde_json::{json, Value};

use asg_core::ctmc::{sample_ctmc_at, Jump};
use asg_core::limit_verify::{duality_check, sup_generator_gap, ChainMode, GridSpec, TestFunction};
use asg_core::line_counting::{
    drift_scan_b, rates_b, stationary_b, stationary_oracle_b, LineCountingChain, MoranParams,
};
use asg_core::logistic::{
    moran_as_logistic, rates_x, weak_selection_z, BirthModifier, LogisticParams,
    OffspringDistribution,
};
use asg_core::moran_asg::{
    build_graphical, check_pathwise_duality, trace_asg, AlleleType, TypeConfiguration,
};
use asg_core::ou::OUParams;
use asg_core::stats::{chi_square_homogeneity, counts, total_variation};
use asg_core::RngStream;
use asg_lab::{run_command, ExperimentConfig};

struct Report {
    failed: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, text: String) {
        println!("{} [{id}] {text}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id.to_string());
        }
    }
}

fn cfg(v: Value) -> ExperimentConfig {
    ExperimentConfig::from_json(&v.to_string(), None, None).expect("acceptance config")
}

fn c1_stationary_oracle(r: &mut Report) {
    let mut worst: f64 = 0.0;
    for n in 2..=64u64 {
        for s in [0.1, 0.5, 1.0, 2.0] {
            for gamma in [0.5, 1.0, 2.0] {
                let p = MoranParams::new(n, gamma, s).unwrap();
                let a = stationary_b(&p);
                let b = stationary_oracle_b(&p).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
    }
    r.line(
        "1",
        worst <= 1e-10,
        format!("stationary law vs product oracle: max |diff| = {worst:.3e} (tol 1e-10)"),
    );
}

fn c2_rate_identity(r: &mut Report) {
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for n in 1..=200u64 {
        for (gamma, s) in [(1.0, 0.5), (0.7, (n as f64).powf(-0.25)), (2.0, 3.0)] {
            let p = MoranParams::new(n, gamma, s).unwrap();
            let q = moran_as_logistic(&p);
            for k in 1..=n {
                let (up, down) = rates_b(k, &p).unwrap();
                let x = rates_x(k, &q).unwrap();
                let rate_to = |t: u64| {
                    x.iter()
                        .filter(|j: &&Jump| j.target == t)
                        .map(|j| j.rate)
                        .sum::<f64>()
                };
                let other = x
                    .iter()
                    .any(|j| j.target != k + 1 && j.target + 1 != k && j.rate != 0.0);
                if rate_to(k + 1) != up || rate_to(k - 1) != down || other {
                    mismatches += 1;
                }
                checked += 1;
            }
        }
    }
    r.line("2", mismatches == 0, format!("rate identity under the Moran mapping: {mismatches} mismatches in {checked} states (exact)"));
}

fn c3_asg_law(r: &mut Report) {
    let (n, gamma, s, sample, t, reps) = (20u32, 1.0, 0.5, 5u32, 1.0, 10_000u64);
    let labels: Vec<u32> = (1..=sample).collect();
    let asg: Vec<u64> = (0..reps)
        .map(|i| {
            let g = build_graphical(n, gamma, s, t, &mut RngStream::new(301, i).rng()).unwrap();
            trace_asg(&g, &labels, t)
                .unwrap()
                .last()
                .unwrap()
                .line_count() as u64
        })
        .collect();
    let chain = LineCountingChain(MoranParams::new(n as u64, gamma, s).unwrap());
    let ctmc: Vec<u64> = (0..reps)
        .map(|i| {
            sample_ctmc_at(
                &chain,
                sample as u64,
                &[t],
                &mut RngStream::new(302, i).rng(),
            )
            .unwrap()[0]
        })
        .collect();
    let res = chi_square_homogeneity(&counts(&asg), &counts(&ctmc)).unwrap();
    r.line(
        "3",
        res.p_value > 0.01,
        format!("ASG line count vs line counting chain: chi2 = {:.2} on {} dof, p = {:.4} (need > 0.01)", res.statistic, res.dof, res.p_value),
    );
}

fn c4_pathwise_duality(r: &mut Report) {
    let n = 6u32;
    let mut ok = 0;
    let total = 10_000u64;
    for i in 0..total {
        let mut rng = RngStream::new(401, i).rng();
        let gamma = rng.random_range(0.2..2.0);
        let s = rng.random_range(0.05..2.0);
        let t = rng.random_range(0.0..=2.0);
        let types: Vec<AlleleType> = (0..n)
            .map(|_| {
                if rng.random_bool(0.5) {
                    AlleleType::Beneficial
                } else {
                    AlleleType::Wild
                }
            })
            .collect();
        let init = TypeConfiguration::new(types);
        let sample = rng.random_range(1..=n);
        let g = build_graphical(n, gamma, s, 2.0, &mut rng).unwrap();
        ok += check_pathwise_duality(&g, sample, &init, t).unwrap() as u64;
    }
    r.line(
        "4",
        ok == total,
        format!("pathwise duality: {ok} of {total} random instances (N = 6, t <= 2)"),
    );
}

fn c5_hypergeometric_duality(r: &mut Report) {
    let mut cells = 0;
    let mut bad = Vec::new();
    let mut worst_z: f64 = 0.0;
    let mut job = 0u64;
    for n_pop in [3u64, 5, 10] {
        let p = MoranParams::new(n_pop, 1.0, 0.5).unwrap();
        for k in [1, n_pop.div_ceil(2), n_pop] {
            for n in [1, 2, n_pop] {
                for t in [0.5, 1.0, 2.0] {
                    job += 1;
                    let e = duality_check(&p, k, n, t, 100_000, RngStream::new(501, job)).unwrap();
                    let se = e.lhs_se + e.rhs_se;
                    if se > 0.0 {
                        worst_z = worst_z.max(e.discrepancy() / se);
                    }
                    if !e.within(3.0) {
                        bad.push(format!("(N={n_pop},k={k},n={n},t={t})"));
                    }
                    cells += 1;
                }
            }
        }
    }
    r.line(
        "5",
        bad.is_empty(),
        format!(
            "hypergeometric duality on {cells} grid cells, 1e5 replicates per side: worst |lhs-rhs|/(se_l+se_r) = {worst_z:.2} (tol 3){}",
            if bad.is_empty() { String::new() } else { format!("; failing {}", bad.join(" ")) }
        ),
    );
}

fn gap_sweep(mode: impl Fn(u64) -> ChainMode, ou: &OUParams) -> Vec<(String, Vec<f64>)> {
    TestFunction::library()
        .into_iter()
        .map(|f| {
            let gaps = [1_000u64, 10_000, 100_000, 1_000_000]
                .iter()
                .map(|&n| {
                    sup_generator_gap(&f, &GridSpec::lattice(3.0), &mode(n), ou)
                        .unwrap()
                        .sup
                })
                .collect();
            (f.name().to_string(), gaps)
        })
        .collect()
}

fn judge_gaps(r: &mut Report, id: &str, label: &str, sweep: &[(String, Vec<f64>)]) {
    let mut all = true;
    let mut parts = Vec::new();
    for (name, gaps) in sweep {
        let zero = gaps.iter().all(|&g| g == 0.0);
        let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
        let last = *gaps.last().unwrap();
        let pass = zero || (decreasing && last < 0.05);
        all &= pass;
        let shown: Vec<String> = gaps.iter().map(|g| format!("{g:.4}")).collect();
        parts.push(format!(
            "{name} [{}]{}",
            shown.join(", "),
            if pass {
                ""
            } else if decreasing {
                " decreasing but >= 0.05"
            } else {
                " not decreasing"
            }
        ));
    }
    r.line(
        id,
        all,
        format!(
            "{label} gaps over N = 1e3..1e6 (strictly decreasing, < 0.05 at 1e6): {}",
            parts.join("; ")
        ),
    );
}

fn c6_generator_convergence(r: &mut Report) {
    let ou_b = OUParams::stationary(1.0, 2.0).unwrap();
    let b = gap_sweep(
        |n| ChainMode::Moran(MoranParams::new(n, 1.0, (n as f64).powf(-0.25)).unwrap()),
        &ou_b,
    );
    judge_gaps(r, "6a", "Moran-mode generator", &b);

    let pi = OffspringDistribution::new(&[(1, 0.6), (2, 0.4)]).unwrap();
    let ou_x = OUParams::stationary(pi.pi_bar(), pi.v2() + pi.pi_bar()).unwrap();
    let x = gap_sweep(
        |n| {
            let nf = n as f64;
            ChainMode::Logistic(
                LogisticParams::new(
                    nf.powf(-0.5),
                    BirthModifier::Constant(1.0),
                    0.0,
                    1.0 / nf,
                    pi.clone(),
                )
                .unwrap(),
            )
        },
        &ou_x,
    );
    judge_gaps(r, "6b", "logistic-mode generator", &x);
}

/// `(time, ks)` rows and `(lag, value, reference)` rows.
type FluctRows = (Vec<(f64, f64)>, Vec<(f64, f64, f64)>);

fn ks_and_autocov(out: &asg_lab::Outcome) -> FluctRows {
    let t = &out.table;
    let (q, time, lag, val, refc) = (
        t.column("quantity").unwrap(),
        t.column("time").unwrap(),
        t.column("lag").unwrap(),
        t.column("value").unwrap(),
        t.column("reference").unwrap(),
    );
    let num = |c: &asg_lab::table::Cell| c.render().parse::<f64>().unwrap();
    let mut ks = Vec::new();
    let mut ac = Vec::new();
    for row in &t.rows {
        if row[q].render() == "ks" {
            ks.push((num(&row[time]), num(&row[val])));
        } else {
            ac.push((num(&row[lag]), num(&row[val]), num(&row[refc])));
        }
    }
    (ks, ac)
}

fn c7_moran_fluctuations(r: &mut Report) {
    let n = 2000u64;
    let out = run_command(&cfg(json!({
        "command": "fluct-test", "seed": 701,
        "model": {"mode": "moran", "n": n, "gamma": 1.0, "s": (n as f64).powf(-0.25)},
        "replicates": 10000, "horizon": 2.0, "times": [1.0], "lags": [0.5, 1.0], "autocov_at": 1.0,
        "ks_tolerance": 0.03, "autocov_tolerance": 0.05
    })))
    .unwrap();
    let (ks, ac) = ks_and_autocov(&out);
    let acs: Vec<String> = ac
        .iter()
        .map(|(l, v, e)| format!("lag {l}: {v:.4} vs {e:.4}"))
        .collect();
    r.line(
        "7",
        out.failure.is_none(),
        format!(
            "Moran fluctuations (N = 2000, 1e4 replicates): KS at t = 1 = {:.4} (tol 0.03); autocov {} (tol 0.05)",
            ks[0].1,
            acs.join(", ")
        ),
    );
}

fn c8_logistic_fluctuations(r: &mut Report) {
    let rho = 0.05;
    let out = run_command(&cfg(json!({
        "command": "fluct-test", "seed": 801,
        "model": {"mode": "logistic", "rho": rho, "c": rho / 700.0, "d": 0.0, "pi": [[1, 0.6], [2, 0.4]], "burn_in": 5.0},
        "replicates": 5000, "horizon": 1.0, "times": [1.0], "ks_tolerance": 0.04
    })))
    .unwrap();
    let (ks, _) = ks_and_autocov(&out);
    r.line(
        "8",
        out.failure.is_none(),
        format!("logistic fluctuations (mu = 980, 5e3 replicates): KS at t = 1 vs N(0, 9/7) = {:.4} (tol 0.04)", ks[0].1),
    );
}

fn c9_drift_sign(r: &mut Report) {
    let mut parts = Vec::new();
    let mut all = true;
    for n in [1_000u64, 10_000] {
        let p = MoranParams::new(n, 1.0, (n as f64).powf(-0.25)).unwrap();
        let scan = drift_scan_b(&p, 1.0).unwrap();
        let pass = scan.sign_changes == 1 && scan.negative_above && scan.positive_below;
        all &= pass;
        parts.push(format!(
            "N = {n}: {} sign change(s), flip at k = {:?}, mu = {:.1}, sigma = {:.2}",
            scan.sign_changes, scan.first_negative, scan.mu, scan.sigma
        ));
    }
    r.line(
        "9",
        all,
        format!("drift sign scan (eta = 1): {}", parts.join("; ")),
    );
}

fn c10_weak_selection(r: &mut Report) {
    let n = 5000u64;
    let alpha = 2.0;
    let reps = 10_000u64;
    let chain = LineCountingChain(MoranParams::new(n, 1.0, alpha / n as f64).unwrap());
    let b: Vec<u64> = (0..reps)
        .map(|i| {
            sample_ctmc_at(&chain, 3, &[n as f64], &mut RngStream::new(1001, i).rng()).unwrap()[0]
        })
        .collect();
    let z = weak_selection_z(alpha, 1.0).unwrap();
    let zs: Vec<u64> = (0..reps)
        .map(|i| sample_ctmc_at(&z, 3, &[1.0], &mut RngStream::new(1002, i).rng()).unwrap()[0])
        .collect();
    let tv = total_variation(&counts(&b), &counts(&zs)).unwrap();
    r.line("10", tv < 0.03, format!("weak-selection limit: TV(B_N at t = N, Z at t = 1) = {tv:.4} over 1e4 replicates each (tol 0.03)"));
}

fn c11_determinism(r: &mut Report) {
    let bin = env!("CARGO_BIN_EXE_asg-lab");
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        json!({"command": "simulate-b", "seed": 1, "n": 50, "gamma": 1.0, "s": 0.5, "init": 1, "horizon": 10.0, "replicates": 4}),
        json!({"command": "simulate-x", "seed": 2, "rho": 1.0, "c": 0.01, "pi": [[1, 0.6], [2, 0.4]], "init": 140, "horizon": 2.0, "replicates": 3}),
        json!({"command": "simulate-ou", "seed": 3, "theta": 1.0, "sigma2": 2.0, "init": 0.5, "dt": 0.05, "horizon": 2.0, "replicates": 3}),
        json!({"command": "simulate-asg", "seed": 4, "n": 10, "gamma": 1.0, "s": 0.5, "horizon": 3.0, "sample": [1, 2, 3, 4]}),
        json!({"command": "stationary", "seed": 5, "n": 64, "gamma": 1.0, "s": 0.5}),
        json!({"command": "gen-gap", "seed": 6, "chain": {"mode": "moran", "gamma": 1.0, "s": {"exponent": -0.25}}, "n_values": [1000, 10000]}),
        json!({"command": "duality", "seed": 7, "n": 5, "gamma": 1.0, "s": 0.5, "k_values": [1, 3], "sample_sizes": [2], "times": [0.5, 1.0], "replicates": 5000}),
        json!({"command": "drift-scan", "seed": 8, "chain": {"mode": "logistic", "rho": {"exponent": -0.5}, "c": {"exponent": -1.0}, "pi": [[1, 0.6], [2, 0.4]]}, "n_values": [1000, 10000]}),
        json!({"command": "fluct-test", "seed": 9, "model": {"mode": "moran", "n": 300, "gamma": 1.0, "s": 0.3}, "replicates": 1000, "horizon": 2.0, "times": [1.0], "lags": [0.5]}),
    ];
    let mut identical = 0;
    let mut failures = Vec::new();
    for (i, c) in configs.iter().enumerate() {
        let name = c["command"].as_str().unwrap();
        let path = dir.path().join(format!("c{i}.json"));
        fs::write(&path, c.to_string()).unwrap();
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("c{i}_{run}.csv"));
            let status = Process::new(bin)
                .args([
                    name,
                    "--config",
                    path.to_str().unwrap(),
                    "--out",
                    out.to_str().unwrap(),
                ])
                .status()
                .unwrap();
            let meta = fs::read(asg_lab::table::sidecar_path(&out)).unwrap_or_default();
            outputs.push((status.code(), fs::read(&out).unwrap_or_default(), meta));
        }
        if outputs[0] == outputs[1] && outputs[0].0 == Some(0) && !outputs[0].1.is_empty() {
            identical += 1;
        } else {
            failures.push(name.to_string());
        }
    }
    r.line(
        "11",
        failures.is_empty(),
        format!(
            "determinism: {identical} of {} commands byte-identical across reruns (CSV and sidecar){}",
            configs.len(),
            if failures.is_empty() { String::new() } else { format!("; differing: {}", failures.join(", ")) }
        ),
    );
}

fn main() {
    let mut report = Report { failed: Vec::new() };
    type Criterion = (&'static str, fn(&mut Report));
    let criteria: [Criterion; 11] = [
        ("1", c1_stationary_oracle),
        ("2", c2_rate_identity),
        ("3", c3_asg_law),
        ("4", c4_pathwise_duality),
        ("5", c5_hypergeometric_duality),
        ("6", c6_generator_convergence),
        ("7", c7_moran_fluctuations),
        ("8", c8_logistic_fluctuations),
        ("9", c9_drift_sign),
        ("10", c10_weak_selection),
        ("11", c11_determinism),
    ];
    for (id, f) in criteria {
        let start = Instant::now();
        f(&mut report);
        eprintln!(
            "  criterion {id} took {:.1}s",
            start.elapsed().as_secs_f64()
        );
    }
    if report.failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed {}", report.failed.join(", "));
        std::process::exit(1);
    }
}
