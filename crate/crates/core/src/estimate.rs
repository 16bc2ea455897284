//! Empirical laws, Kolmogorov–Smirnov distances and Hill tail-index fits.

use serde::Serialize;

use crate::error::{Error, Result};

/// A sorted sample of scalar outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    samples: Vec<f64>,
}

impl EmpiricalLaw {
    /// Sorts `samples`; rejects empty input and NaN.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("empirical law needs at least one sample".into()));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::Input("sample contains NaN".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalLaw { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples in ascending order.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Right-continuous empirical CDF `#{xᵢ ≤ x}/n`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Empirical survival `#{xᵢ > x}/n`.
    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.ecdf(x)
    }

    /// Lower empirical quantile: the smallest sample with `ecdf ≥ p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.len();
        let k = (p.clamp(0.0, 1.0) * n as f64).ceil() as usize;
        self.samples[k.clamp(1, n) - 1]
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// Standard error of the sample mean; zero for a single sample.
    pub fn std_error(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let var = self.samples.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }

    /// `sup |F_n(xᵢ) − F(xᵢ)|` over the sample points.
    pub fn ks_distance<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in self.samples.iter().enumerate() {
            // the last index of a run of ties carries the right limit
            if i + 1 < self.samples.len() && self.samples[i + 1] == x {
                continue;
            }
            d = d.max(((i + 1) as f64 / n - cdf(x)).abs());
        }
        d
    }

    /// One-sample Kolmogorov–Smirnov statistic against a continuous CDF,
    /// including the left limits of `F_n`.
    pub fn ks_statistic<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in self.samples.iter().enumerate() {
            let f = cdf(x);
            d = d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        }
        d
    }
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_n − G_m|`.
pub fn ks_two_sample(a: &EmpiricalLaw, b: &EmpiricalLaw) -> f64 {
    let (xs, ys) = (a.samples(), b.samples());
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic two-sample critical value `c(level)·√((n+m)/(nm))` with
/// `c(level) = √(−ln(level/2)/2)`.
pub fn ks_critical(n: usize, m: usize, level: f64) -> f64 {
    let c = (-(level / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// A Hill estimate from the `k` largest order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub k: usize,
    #[serde(rename = "alpha_hat")]
    pub index_estimate: f64,
    #[serde(rename = "se")]
    pub std_error: f64,
}

/// Heuristic number of order statistics, `⌊n^0.6⌋`.
pub fn default_k(n: usize) -> usize {
    // the nudge keeps exact powers such as 10⁵ → 1000 from rounding down
    ((n as f64).powf(0.6) * (1.0 + 1e-12)).floor() as usize
}

/// Hill estimator `k / Σ ln(x_(n−i+1)/x_(n−k))` of the tail index.
pub fn hill_estimator(law: &EmpiricalLaw, k: usize) -> Result<TailFit> {
    let n = law.len();
    if k < 10 || k > n / 10 {
        return Err(Error::Domain(format!("Hill needs 10 <= k <= n/10, got k = {k}, n = {n}")));
    }
    let xs = law.samples();
    let threshold = xs[n - k - 1];
    if !(threshold > 0.0) {
        return Err(Error::Domain(format!(
            "Hill needs positive upper order statistics, threshold is {threshold}"
        )));
    }
    let sum: f64 = xs[n - k..].iter().map(|&x| (x / threshold).ln()).sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::Domain("log-excesses over the threshold sum to zero".into()));
    }
    let index_estimate = k as f64 / sum;
    Ok(TailFit {
        k,
        index_estimate,
        std_error: index_estimate / (k as f64).sqrt(),
    })
}

/// Hill estimates over a grid of `k` values.
pub fn tail_scan(law: &EmpiricalLaw, ks: &[usize]) -> Result<Vec<TailFit>> {
    ks.iter().map(|&k| hill_estimator(law, k)).collect()
}
