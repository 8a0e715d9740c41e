//! The line counting process of the ASG as a birth-death chain on `{1, ..., N}`.

use crate::ctmc::{Jump, JumpRates, Path, RescaledPath, State};
use crate::error::{domain, invalid, Error, Result};

/// Selection regime label. Carried for bookkeeping only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regime {
    Strong,
    #[default]
    Moderate,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoranParams {
    pub n: u64,
    pub gamma: f64,
    pub s: f64,
    pub regime: Regime,
}

impl MoranParams {
    pub fn new(n: u64, gamma: f64, s: f64) -> Result<Self> {
        Self::with_regime(n, gamma, s, Regime::default())
    }

    pub fn with_regime(n: u64, gamma: f64, s: f64, regime: Regime) -> Result<Self> {
        if n == 0 {
            return Err(invalid("N must be at least 1"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("gamma must be positive, got {gamma}")));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid(format!("s must be positive, got {s}")));
        }
        Ok(Self {
            n,
            gamma,
            s,
            regime,
        })
    }

    /// Binomial success probability `2s / (2s + gamma)` of the stationary law.
    pub fn binomial_p(&self) -> f64 {
        2.0 * self.s / (2.0 * self.s + self.gamma)
    }

    fn check_state(&self, k: State) -> Result<()> {
        if k == 0 || k > self.n {
            return Err(domain(format!("state {k} outside [1, {}]", self.n)));
        }
        Ok(())
    }
}

/// Up and down rates `(k s (1 - k/N), (gamma/N) k(k-1)/2)` at `k`.
pub fn rates_b(k: State, p: &MoranParams) -> Result<(f64, f64)> {
    p.check_state(k)?;
    let kf = k as f64;
    let n = p.n as f64;
    // Evaluation order matches `logistic::rates_x` under `moran_as_logistic`,
    // so the two agree bit for bit.
    let up = kf * p.s * (1.0 - kf / n);
    let down = p.gamma / (2.0 * n) * kf * (kf - 1.0);
    Ok((up, down))
}

/// [`JumpRates`] view of the line counting process.
#[derive(Debug, Clone, Copy)]
pub struct LineCountingChain(pub MoranParams);

impl JumpRates for LineCountingChain {
    fn jumps(&self, k: State, out: &mut Vec<Jump>) -> Result<()> {
        let (up, down) = rates_b(k, &self.0)?;
        if up > 0.0 {
            out.push(Jump::new(k + 1, up));
        }
        if down > 0.0 {
            out.push(Jump::new(k - 1, down));
        }
        Ok(())
    }
}

/// Centering and spread `(p N, sqrt(p (1-p) N))` with `p = 2s/(2s+gamma)`.
pub fn mu_sigma_b(p: &MoranParams) -> (f64, f64) {
    let q = p.binomial_p();
    let n = p.n as f64;
    (q * n, (q * (1.0 - q) * n).sqrt())
}

/// Stationary law: Binomial(N, 2s/(2s+gamma)) conditioned on being nonzero.
/// Entry `i` is the probability of state `i + 1`.
pub fn stationary_b(p: &MoranParams) -> Vec<f64> {
    // binomial pmf by its term ratio, walking outward from the mode so the
    // largest term is 1 and the tails decay (or underflow) harmlessly
    let q = p.binomial_p();
    let odds = 2.0 * p.s / p.gamma;
    let n = p.n;
    let mode = (((n + 1) as f64 * q).floor() as u64).clamp(1, n);
    let mut w = vec![0.0f64; n as usize];
    w[(mode - 1) as usize] = 1.0;
    for k in mode..n {
        w[k as usize] = w[(k - 1) as usize] * ((n - k) as f64 / (k + 1) as f64) * odds;
    }
    for k in (1..mode).rev() {
        w[(k - 1) as usize] = w[k as usize] * ((k + 1) as f64 / (n - k) as f64) / odds;
    }
    let norm: f64 = w.iter().sum();
    w.iter().map(|x| x / norm).collect()
}

/// Largest N accepted by [`stationary_oracle_b`].
pub const ORACLE_MAX_N: u64 = 10_000;

/// Stationary law from the birth-death product `pi(k+1)/pi(k) = up(k)/down(k+1)`.
pub fn stationary_oracle_b(p: &MoranParams) -> Result<Vec<f64>> {
    if p.n > ORACLE_MAX_N {
        return Err(domain(format!("oracle limited to N <= {ORACLE_MAX_N}")));
    }
    let mut weights = vec![1.0f64];
    for k in 1..p.n {
        let (up, _) = rates_b(k, p)?;
        let (_, down_next) = rates_b(k + 1, p)?;
        if down_next == 0.0 {
            return Err(Error::MalformedModel(format!(
                "down rate vanishes at {}",
                k + 1
            )));
        }
        let w = weights.last().unwrap() * up / down_next;
        weights.push(w);
        // keep the running product representable at large N
        if w > 1e250 {
            weights.iter_mut().for_each(|x| *x *= 1e-250);
        }
    }
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Speeds time up by `1/s` and centres space at `(mu, sigma)` of [`mu_sigma_b`].
pub fn rescale_b(path: &Path, p: &MoranParams) -> RescaledPath {
    let (mu, sigma) = mu_sigma_b(p);
    RescaledPath::from_path(path, p.s, mu, sigma)
}

/// Rate imbalance `up(k) - down(k)`, which has the sign of the embedded
/// chain's expected increment.
pub fn drift_embedded_b(k: State, p: &MoranParams) -> Result<f64> {
    let (up, down) = rates_b(k, p)?;
    Ok(up - down)
}

/// Result of sweeping the drift sign over `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftScan {
    pub mu: f64,
    pub sigma: f64,
    /// Number of strict sign changes along `k = 1..=N`, zeros skipped.
    pub sign_changes: usize,
    /// Smallest `k` with negative drift, if any.
    pub first_negative: Option<State>,
    /// All `k >= mu + eta sigma` have negative drift.
    pub negative_above: bool,
    /// All `k <= mu - eta sigma` have positive drift.
    pub positive_below: bool,
    /// Smallest `eta` for which both one-sided statements hold.
    pub empirical_eta: f64,
}

/// Sign scan over any drift function on `1..=n`.
pub fn scan_drift<F>(n: State, mu: f64, sigma: f64, eta: f64, mut drift: F) -> Result<DriftScan>
where
    F: FnMut(State) -> Result<f64>,
{
    let mut sign_changes = 0;
    let mut last_sign = 0i8;
    let mut first_negative = None;
    let mut negative_above = true;
    let mut positive_below = true;
    // distance from mu of the farthest state whose drift points away from mu
    let mut worst = 0.0f64;
    for k in 1..=n {
        let d = drift(k)?;
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        if sign != 0 {
            if last_sign != 0 && sign != last_sign {
                sign_changes += 1;
            }
            last_sign = sign;
        }
        if sign < 0 && first_negative.is_none() {
            first_negative = Some(k);
        }
        let x = (k as f64 - mu) / sigma;
        if x >= eta && sign >= 0 {
            negative_above = false;
        }
        if x <= -eta && sign <= 0 {
            positive_below = false;
        }
        if (x > 0.0 && sign >= 0) || (x < 0.0 && sign <= 0) {
            worst = worst.max(x.abs());
        }
    }
    Ok(DriftScan {
        mu,
        sigma,
        sign_changes,
        first_negative,
        negative_above,
        positive_below,
        empirical_eta: worst,
    })
}

pub fn drift_scan_b(p: &MoranParams, eta: f64) -> Result<DriftScan> {
    let (mu, sigma) = mu_sigma_b(p);
    scan_drift(p.n, mu, sigma, eta, |k| drift_embedded_b(k, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::{simulate_ctmc, Trajectory};
    use crate::rng::RngStream;

    fn params(n: u64, gamma: f64, s: f64) -> MoranParams {
        MoranParams::new(n, gamma, s).unwrap()
    }

    #[test]
    fn boundary_rates() {
        let p = params(10, 1.0, 0.5);
        assert_eq!(rates_b(1, &p).unwrap().1, 0.0);
        assert_eq!(rates_b(10, &p).unwrap().0, 0.0);
        let (up, down) = rates_b(2, &p).unwrap();
        assert!((up - 0.8).abs() < 1e-15);
        assert!((down - 0.1).abs() < 1e-15);
        assert!(rates_b(0, &p).is_err());
        assert!(rates_b(11, &p).is_err());
    }

    #[test]
    fn centring_constants() {
        let (mu, sigma) = mu_sigma_b(&params(100, 1.0, 0.5));
        assert!((mu - 50.0).abs() < 1e-12);
        assert!((sigma - 5.0).abs() < 1e-12);
        for (n, g, s) in [(37, 0.4, 1.3), (1000, 1.0, 0.01), (5, 2.0, 1.0)] {
            let p = params(n, g, s);
            let (mu, sigma) = mu_sigma_b(&p);
            assert!((sigma * sigma + mu * mu / n as f64 - mu).abs() < 1e-9 * mu);
            if g == 2.0 * s {
                assert!((mu - n as f64 / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stationary_small_cases() {
        let pi = stationary_b(&params(2, 1.0, 1.0));
        assert!((pi[0] - 0.5).abs() < 1e-12 && (pi[1] - 0.5).abs() < 1e-12);
        assert_eq!(stationary_b(&params(1, 1.0, 0.3)), vec![1.0]);
        let oracle = stationary_oracle_b(&params(2, 1.0, 2.0)).unwrap();
        assert!((oracle[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((oracle[1] - 2.0 / 3.0).abs() < 1e-15);
        let p = params(8, 1.0, 0.3);
        for (a, b) in stationary_b(&p)
            .iter()
            .zip(stationary_oracle_b(&p).unwrap())
        {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn stationary_large_n_is_normalised() {
        let pi = stationary_b(&params(1_000_000, 1.0, 0.03));
        let total: f64 = pi.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(pi.iter().all(|x| x.is_finite() && *x >= 0.0));
        assert!(stationary_oracle_b(&params(20_000, 1.0, 0.1)).is_err());
    }

    #[test]
    fn oracle_agrees_up_to_64() {
        for n in 2..=64 {
            let p = params(n, 1.0, 0.7);
            let a = stationary_b(&p);
            let b = stationary_oracle_b(&p).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10, "N = {n}");
            }
        }
    }

    #[test]
    fn rescaling_examples() {
        let p = params(100, 1.0, 0.5);
        let path = Path::new(vec![0.0, 2.0], vec![50, 55], 4.0).unwrap();
        let r = rescale_b(&path, &p);
        assert_eq!(r.values[0], 0.0);
        assert_eq!(r.jump_times[1], 1.0);
        assert!((r.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rescaled_increments_are_one_over_sigma() {
        let p = params(200, 1.0, 0.4);
        let path = simulate_ctmc(
            &LineCountingChain(p),
            30,
            40.0,
            &mut RngStream::new(1, 2).rng(),
        )
        .unwrap();
        let r = rescale_b(&path, &p);
        assert!(path.jump_count() > 100);
        for w in r.values.windows(2) {
            assert!(((w[1] - w[0]).abs() * r.sigma - 1.0).abs() < 1e-9);
        }
        assert!((r.horizon - 16.0).abs() < 1e-12);
        assert!(r.value_at(16.0).is_ok());
    }

    #[test]
    fn embedded_chain_moves_by_one() {
        let p = params(50, 1.0, 0.5);
        let path = simulate_ctmc(
            &LineCountingChain(p),
            1,
            30.0,
            &mut RngStream::new(4, 4).rng(),
        )
        .unwrap();
        let chain = path.embedded_chain();
        assert!(chain.windows(2).all(|w| w[0].abs_diff(w[1]) == 1));
        assert!(chain.iter().all(|&k| (1..=50).contains(&k)));
    }

    #[test]
    fn drift_boundaries_and_single_flip() {
        let p = params(500, 1.0, 0.2);
        assert!(drift_embedded_b(1, &p).unwrap() > 0.0);
        assert!(drift_embedded_b(500, &p).unwrap() < 0.0);
        let scan = drift_scan_b(&p, 1.0).unwrap();
        assert_eq!(scan.sign_changes, 1);
        assert!(scan.negative_above && scan.positive_below);
        // root of k s (1 - k/N) = gamma k (k-1) / (2N) is (sN + gamma/2)/(s + gamma/2)
        let root = (0.2 * 500.0 + 0.5) / (0.2 + 0.5);
        let first = scan.first_negative.unwrap() as f64;
        assert!(first > root && first <= root + 1.0);
        assert!((first - (1.0 + scan.mu)).abs() < 2.0);
    }
}
