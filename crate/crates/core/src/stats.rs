//! Small statistical helpers shared by the tests and the command-line tools.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

fn p_value(statistic: f64, dof: f64) -> Result<ChiSquareResult> {
    if dof < 1.0 {
        return Err(domain(
            "chi-square test needs at least two bins after merging",
        ));
    }
    let dist = ChiSquared::new(dof).map_err(|e| domain(e.to_string()))?;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}

/// Greedily merges adjacent bins until every merged bin has weight `>= min`;
/// a short tail is folded into the previous bin. Returns bin boundaries.
fn merge_bins(weights: &[f64], min: f64) -> Vec<std::ops::Range<usize>> {
    let mut out: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if acc >= min {
            out.push(start..i + 1);
            start = i + 1;
            acc = 0.0;
        }
    }
    if start < weights.len() {
        match out.last_mut() {
            Some(last) => last.end = weights.len(),
            None => out.push(start..weights.len()),
        }
    }
    out
}

/// Pearson goodness-of-fit of `observed` counts against `probs`. Adjacent
/// cells are merged until each expected count is at least 5.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(domain("observed counts and probabilities differ in length"));
    }
    let total: u64 = observed.iter().sum();
    let mass: f64 = probs.iter().sum();
    if total == 0 || !(mass > 0.0) {
        return Err(domain("empty sample or zero total probability"));
    }
    let expected: Vec<f64> = probs.iter().map(|p| p / mass * total as f64).collect();
    let bins = merge_bins(&expected, 5.0);
    let mut stat = 0.0;
    for b in &bins {
        let e: f64 = expected[b.clone()].iter().sum();
        let o: u64 = observed[b.clone()].iter().sum();
        stat += (o as f64 - e).powi(2) / e;
    }
    p_value(stat, bins.len() as f64 - 1.0)
}

/// Pearson test that two count vectors come from the same distribution.
/// Cells are merged until each pooled expected count is at least 5.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> Result<ChiSquareResult> {
    let len = a.len().max(b.len());
    let get = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0) as f64;
    let na: f64 = a.iter().sum::<u64>() as f64;
    let nb: f64 = b.iter().sum::<u64>() as f64;
    if na == 0.0 || nb == 0.0 {
        return Err(domain("homogeneity test with an empty sample"));
    }
    let pooled: Vec<f64> = (0..len).map(|i| get(a, i) + get(b, i)).collect();
    let min_side = na.min(nb) / (na + nb);
    let bins = merge_bins(&pooled, 5.0 / min_side);
    let mut stat = 0.0;
    for r in &bins {
        let oa: f64 = r.clone().map(|i| get(a, i)).sum();
        let ob: f64 = r.clone().map(|i| get(b, i)).sum();
        let tot = oa + ob;
        let ea = tot * na / (na + nb);
        let eb = tot * nb / (na + nb);
        stat += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
    }
    p_value(stat, bins.len() as f64 - 1.0)
}

/// Empirical pmf of nonnegative integer samples on `0..=max`.
pub fn counts(samples: &[u64]) -> Vec<u64> {
    let max = samples.iter().copied().max().unwrap_or(0) as usize;
    let mut c = vec![0u64; max + 1];
    for &x in samples {
        c[x as usize] += 1;
    }
    c
}

/// Total variation distance `(1/2) sum |p_i - q_i|` between two normalised
/// count vectors; missing entries count as zero.
pub fn total_variation(a: &[u64], b: &[u64]) -> Result<f64> {
    let na = a.iter().sum::<u64>() as f64;
    let nb = b.iter().sum::<u64>() as f64;
    if na == 0.0 || nb == 0.0 {
        return Err(domain("total variation of an empty sample"));
    }
    let len = a.len().max(b.len());
    let get = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0) as f64;
    Ok(0.5
        * (0..len)
            .map(|i| (get(a, i) / na - get(b, i) / nb).abs())
            .sum::<f64>())
}

/// One-sample KS critical value at level `alpha`, from the asymptotic
/// Kolmogorov tail `2 exp(-2 n d^2)`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Sample covariance of paired observations with the standard error of the
/// mean centred product.
pub fn covariance_with_se(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(domain("covariance needs at least two paired observations"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let mean = prods.iter().sum::<f64>() / n;
    let var = prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean * n / (n - 1.0), (var / n).sqrt()))
}

/// Inverse-CDF sampler for a finite pmf over `offset, offset + 1, ...`.
#[derive(Debug, Clone)]
pub struct DiscreteSampler {
    cdf: Vec<f64>,
    offset: u64,
}

impl DiscreteSampler {
    pub fn new(pmf: &[f64], offset: u64) -> Result<Self> {
        if pmf.is_empty() || pmf.iter().any(|p| !(*p >= 0.0)) {
            return Err(domain("pmf must be nonempty and nonnegative"));
        }
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in pmf {
            acc += p;
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(domain("pmf has zero mass"));
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Ok(Self { cdf, offset })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let i = self
            .cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1);
        self.offset + i as u64
    }
}
