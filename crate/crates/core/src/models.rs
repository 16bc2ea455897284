//! Lévy model families and their exponents.
//!
//! Spectrally negative models are described by their Laplace exponent
//! `ψ(λ) = log E[exp(λ X_1)]`, written as
//!
//! ```text
//! ψ(λ) = −μ λ + σ²λ²/2 + ∫_(−∞,0) (e^{λx} − 1) Π(dx)
//! ```
//!
//! so a positive `mu` produces a downward drift. Stable models are described
//! by their characteristic exponent
//!
//! ```text
//! Ψ(θ) = c |θ|^α (1 − i β sgn(θ) tan(πα/2)),   E[exp(iθ X_1)] = exp(−Ψ(θ)).
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Lévy process given by its parameters.
///
/// Build values through the checked constructors ([`LevyModel::brownian`],
/// [`LevyModel::stable_sn`], [`LevyModel::stable`],
/// [`LevyModel::jump_diffusion`]) or by deserializing a [`ModelConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelConfig", into = "ModelConfig")]
pub enum LevyModel {
    /// `X_t = −μ t + σ B_t`.
    BrownianDrift { mu: f64, sigma: f64 },
    /// Spectrally negative strictly stable process, `α ∈ (1, 2]`.
    StableSN { alpha: f64, c: f64 },
    /// Strictly stable process with skewness `β ∈ [−1, 1)`, so negative jumps exist.
    StableGeneral { alpha: f64, beta: f64, c: f64 },
    /// Brownian motion with drift plus compound Poisson negative jumps whose
    /// sizes are exponential with mean `jump_mean`.
    JumpDiffusion {
        mu: f64,
        sigma: f64,
        jump_rate: f64,
        jump_mean: f64,
    },
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidModel(format!("{name} must be finite, got {v}")))
    }
}

impl LevyModel {
    pub fn brownian(mu: f64, sigma: f64) -> Result<Self> {
        let m = LevyModel::BrownianDrift { mu, sigma };
        m.validate()?;
        Ok(m)
    }

    pub fn stable_sn(alpha: f64, c: f64) -> Result<Self> {
        let m = LevyModel::StableSN { alpha, c };
        m.validate()?;
        Ok(m)
    }

    pub fn stable(alpha: f64, beta: f64, c: f64) -> Result<Self> {
        let m = LevyModel::StableGeneral { alpha, beta, c };
        m.validate()?;
        Ok(m)
    }

    pub fn jump_diffusion(mu: f64, sigma: f64, jump_rate: f64, jump_mean: f64) -> Result<Self> {
        let m = LevyModel::JumpDiffusion {
            mu,
            sigma,
            jump_rate,
            jump_mean,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks the parameter invariants of the variant.
    pub fn validate(&self) -> Result<()> {
        match *self {
            LevyModel::BrownianDrift { mu, sigma } => {
                finite("mu", mu)?;
                if !(finite("sigma", sigma)? > 0.0) {
                    return Err(Error::InvalidModel(
                        "sigma must be > 0 (a pure drift is excluded)".into(),
                    ));
                }
            }
            LevyModel::StableSN { alpha, c } => {
                if !(alpha > 1.0 && alpha <= 2.0) {
                    return Err(Error::InvalidModel(format!(
                        "spectrally negative stable needs alpha in (1, 2], got {alpha}"
                    )));
                }
                if !(finite("c", c)? > 0.0) {
                    return Err(Error::InvalidModel("c must be > 0".into()));
                }
            }
            LevyModel::StableGeneral { alpha, beta, c } => {
                if !(alpha > 0.0 && alpha < 2.0) || alpha == 1.0 {
                    return Err(Error::InvalidModel(format!(
                        "stable alpha must lie in (0,1) or (1,2), got {alpha}"
                    )));
                }
                if !(-1.0..1.0).contains(&beta) {
                    return Err(Error::InvalidModel(format!(
                        "stable beta must lie in [-1, 1) so that negative jumps exist, got {beta}"
                    )));
                }
                if !(finite("c", c)? > 0.0) {
                    return Err(Error::InvalidModel("c must be > 0".into()));
                }
            }
            LevyModel::JumpDiffusion {
                mu,
                sigma,
                jump_rate,
                jump_mean,
            } => {
                finite("mu", mu)?;
                if !(finite("sigma", sigma)? >= 0.0) {
                    return Err(Error::InvalidModel("sigma must be >= 0".into()));
                }
                if !(finite("jump_rate", jump_rate)? > 0.0) {
                    return Err(Error::InvalidModel("jump_rate must be > 0".into()));
                }
                if !(finite("jump_mean", jump_mean)? > 0.0) {
                    return Err(Error::InvalidModel("jump_mean must be > 0".into()));
                }
                // Without diffusion the paths are monotone decreasing unless
                // the drift −μ points upwards.
                if sigma == 0.0 && mu >= 0.0 {
                    return Err(Error::InvalidModel(
                        "sigma = 0 requires mu < 0, otherwise the process is the negative of a subordinator"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Short name used in configuration files and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            LevyModel::BrownianDrift { .. } => "bm",
            LevyModel::StableSN { .. } => "stable-sn",
            LevyModel::StableGeneral { .. } => "stable",
            LevyModel::JumpDiffusion { .. } => "jump-diffusion",
        }
    }

    /// True for the variants without positive jumps.
    pub fn is_spectrally_negative(&self) -> bool {
        !matches!(self, LevyModel::StableGeneral { .. })
    }

    /// True when paths have a Gaussian component.
    pub fn has_diffusion(&self) -> bool {
        match *self {
            LevyModel::BrownianDrift { .. } => true,
            LevyModel::JumpDiffusion { sigma, .. } => sigma > 0.0,
            LevyModel::StableSN { alpha, .. } => alpha == 2.0,
            LevyModel::StableGeneral { .. } => false,
        }
    }

    /// Stability index for the stable variants.
    pub fn stability_index(&self) -> Option<f64> {
        match *self {
            LevyModel::StableSN { alpha, .. } | LevyModel::StableGeneral { alpha, .. } => {
                Some(alpha)
            }
            _ => None,
        }
    }

    fn require_spectrally_negative(&self) -> Result<()> {
        if self.is_spectrally_negative() {
            Ok(())
        } else {
            Err(Error::Unsupported(
                "a general stable process has no finite Laplace exponent; use a spectrally negative model"
                    .into(),
            ))
        }
    }

    /// Laplace exponent `ψ(λ)` for `λ ≥ 0`.
    pub fn laplace_exponent(&self, lambda: f64) -> Result<f64> {
        self.require_spectrally_negative()?;
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!(
                "laplace exponent needs lambda >= 0, got {lambda}"
            )));
        }
        Ok(self.psi(lambda))
    }

    /// `ψ` without argument checks. Spectrally negative variants only.
    pub(crate) fn psi(&self, lambda: f64) -> f64 {
        match *self {
            LevyModel::BrownianDrift { mu, sigma } => -mu * lambda + 0.5 * sigma * sigma * lambda * lambda,
            LevyModel::StableSN { alpha, c } => {
                if lambda == 0.0 {
                    0.0
                } else {
                    stable_laplace_constant(alpha, c) * lambda.powf(alpha)
                }
            }
            LevyModel::JumpDiffusion {
                mu,
                sigma,
                jump_rate,
                jump_mean,
            } => {
                let rho = 1.0 / jump_mean;
                -mu * lambda + 0.5 * sigma * sigma * lambda * lambda - jump_rate * lambda / (rho + lambda)
            }
            LevyModel::StableGeneral { .. } => f64::NAN,
        }
    }

    /// `ψ'(λ)` for `λ ≥ 0` (right derivative at the origin).
    pub(crate) fn psi_prime(&self, lambda: f64) -> f64 {
        match *self {
            LevyModel::BrownianDrift { mu, sigma } => -mu + sigma * sigma * lambda,
            LevyModel::StableSN { alpha, c } => {
                alpha * stable_laplace_constant(alpha, c) * lambda.powf(alpha - 1.0)
            }
            LevyModel::JumpDiffusion {
                mu,
                sigma,
                jump_rate,
                jump_mean,
            } => {
                let rho = 1.0 / jump_mean;
                -mu + sigma * sigma * lambda - jump_rate * rho / ((rho + lambda) * (rho + lambda))
            }
            LevyModel::StableGeneral { .. } => f64::NAN,
        }
    }

    /// `ψ` continued analytically to the right half-plane (principal branch).
    pub(crate) fn psi_complex(&self, s: Complex64) -> Complex64 {
        match *self {
            LevyModel::BrownianDrift { mu, sigma } => -mu * s + 0.5 * sigma * sigma * s * s,
            LevyModel::StableSN { alpha, c } => {
                if s == Complex64::new(0.0, 0.0) {
                    s
                } else {
                    stable_laplace_constant(alpha, c) * s.powf(alpha)
                }
            }
            LevyModel::JumpDiffusion {
                mu,
                sigma,
                jump_rate,
                jump_mean,
            } => {
                let rho = 1.0 / jump_mean;
                -mu * s + 0.5 * sigma * sigma * s * s - jump_rate * s / (rho + s)
            }
            LevyModel::StableGeneral { .. } => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    /// Right inverse `φ(γ) = sup{λ ≥ 0 : ψ(λ) = γ}` for `γ > 0`.
    pub fn phi(&self, gamma: f64) -> Result<f64> {
        self.require_spectrally_negative()?;
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("phi needs gamma > 0, got {gamma}")));
        }
        Ok(self.increasing_root(gamma))
    }

    /// Right inverse extended to `q = 0`, where it is the largest root of `ψ`.
    pub fn right_inverse(&self, q: f64) -> Result<f64> {
        self.require_spectrally_negative()?;
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::Domain(format!("q must be >= 0, got {q}")));
        }
        if q == 0.0 {
            if self.psi_prime(0.0) >= 0.0 {
                return Ok(0.0);
            }
            return Ok(self.increasing_root(0.0));
        }
        Ok(self.increasing_root(q))
    }

    /// Root of `ψ(λ) = target` on the increasing branch of the convex `ψ`.
    fn increasing_root(&self, target: f64) -> f64 {
        // Left end: a point with ψ < target. For target > 0 the origin
        // works; for target = 0 with ψ'(0) < 0 take the minimiser of ψ.
        let mut lo = if target > 0.0 { 0.0 } else { self.minimiser() };
        let mut hi = 1.0;
        while self.psi(hi) < target {
            lo = lo.max(hi);
            hi *= 2.0;
        }
        let tol = 1e-13 * target.max(1.0);
        let mut x = 0.5 * (lo + hi);
        for _ in 0..300 {
            let f = self.psi(x) - target;
            if f.abs() <= tol && (target > 0.0 || x > lo) {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.psi_prime(x);
            let newton = x - f / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        x
    }

    /// Minimiser of `ψ` on `[0, ∞)`, i.e. the root of the increasing `ψ'`.
    fn minimiser(&self) -> f64 {
        if self.psi_prime(0.0) >= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while self.psi_prime(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.psi_prime(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        hi
    }

    /// Characteristic exponent `Ψ(θ)` of a stable variant.
    pub fn characteristic_exponent(&self, theta: f64) -> Result<Complex64> {
        let (alpha, beta, c) = match *self {
            LevyModel::StableSN { alpha, c } => (alpha, -1.0, c),
            LevyModel::StableGeneral { alpha, beta, c } => (alpha, beta, c),
            _ => {
                return Err(Error::Unsupported(
                    "characteristic exponent is provided for the stable variants".into(),
                ))
            }
        };
        stable_characteristic_exponent(alpha, beta, c, theta)
    }
}

/// `Ψ(θ) = c|θ|^α (1 − iβ sgn(θ) tan(πα/2))` for `α ≠ 1`.
pub fn stable_characteristic_exponent(alpha: f64, beta: f64, c: f64, theta: f64) -> Result<Complex64> {
    if alpha == 1.0 {
        return Err(Error::Domain("alpha = 1 is not covered".into()));
    }
    if theta == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let scale = c * theta.abs().powf(alpha);
    let skew = beta * theta.signum() * (PI * alpha / 2.0).tan();
    Ok(Complex64::new(scale, -scale * skew))
}

/// Constant `c'` in `ψ(λ) = c' λ^α` for the spectrally negative stable law
/// with characteristic exponent `c|θ|^α (1 + i sgn(θ) tan(πα/2))`.
///
/// Continuing `Ψ(θ) = c (iθ)^α / cos(πα/2)` to `θ = −iλ` gives
/// `c' = −c / cos(πα/2)`, which is positive for `α ∈ (1, 2]`.
pub fn stable_laplace_constant(alpha: f64, c: f64) -> f64 {
    -c / (PI * alpha / 2.0).cos()
}

/// Flat key/value form of a model, matching the configuration file, CLI
/// flag and JSON key names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_mean: Option<f64>,
}

/// Keys recognised by [`ModelConfig`].
pub const MODEL_KEYS: [&str; 8] = [
    "model",
    "mu",
    "sigma",
    "alpha",
    "beta",
    "c",
    "jump_rate",
    "jump_mean",
];

impl ModelConfig {
    /// Reads the model keys out of a parsed key/value map; other keys are ignored.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let num = |k: &str| -> Result<Option<f64>> {
            map.get(k)
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Input(format!("{k}: cannot parse '{v}' as a number")))
                })
                .transpose()
        };
        Ok(ModelConfig {
            model: map
                .get("model")
                .cloned()
                .ok_or_else(|| Error::Input("missing key 'model'".into()))?,
            mu: num("mu")?,
            sigma: num("sigma")?,
            alpha: num("alpha")?,
            beta: num("beta")?,
            c: num("c")?,
            jump_rate: num("jump_rate")?,
            jump_mean: num("jump_mean")?,
        })
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| Error::Input(format!("line {}: expected key = value", lineno + 1)))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

impl TryFrom<ModelConfig> for LevyModel {
    type Error = Error;

    fn try_from(cfg: ModelConfig) -> Result<Self> {
        let need = |v: Option<f64>, k: &str| {
            v.ok_or_else(|| Error::Input(format!("model '{}' needs key '{k}'", cfg.model)))
        };
        match cfg.model.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "bm" | "brownian" | "brownian-drift" => {
                LevyModel::brownian(cfg.mu.unwrap_or(0.0), need(cfg.sigma, "sigma")?)
            }
            "stable-sn" | "stablesn" => LevyModel::stable_sn(need(cfg.alpha, "alpha")?, cfg.c.unwrap_or(1.0)),
            "stable" | "stable-general" => LevyModel::stable(
                need(cfg.alpha, "alpha")?,
                need(cfg.beta, "beta")?,
                cfg.c.unwrap_or(1.0),
            ),
            "jump-diffusion" | "jd" => LevyModel::jump_diffusion(
                cfg.mu.unwrap_or(0.0),
                need(cfg.sigma, "sigma")?,
                need(cfg.jump_rate, "jump_rate")?,
                need(cfg.jump_mean, "jump_mean")?,
            ),
            other => Err(Error::Input(format!("unknown model '{other}'"))),
        }
    }
}

impl From<LevyModel> for ModelConfig {
    fn from(m: LevyModel) -> Self {
        let mut cfg = ModelConfig {
            model: m.name().to_string(),
            ..Default::default()
        };
        match m {
            LevyModel::BrownianDrift { mu, sigma } => {
                cfg.mu = Some(mu);
                cfg.sigma = Some(sigma);
            }
            LevyModel::StableSN { alpha, c } => {
                cfg.alpha = Some(alpha);
                cfg.c = Some(c);
            }
            LevyModel::StableGeneral { alpha, beta, c } => {
                cfg.alpha = Some(alpha);
                cfg.beta = Some(beta);
                cfg.c = Some(c);
            }
            LevyModel::JumpDiffusion {
                mu,
                sigma,
                jump_rate,
                jump_mean,
            } => {
                cfg.mu = Some(mu);
                cfg.sigma = Some(sigma);
                cfg.jump_rate = Some(jump_rate);
                cfg.jump_mean = Some(jump_mean);
            }
        }
        cfg
    }
}

impl fmt::Display for LevyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LevyModel::BrownianDrift { mu, sigma } => write!(f, "bm(mu={mu}, sigma={sigma})"),
            LevyModel::StableSN { alpha, c } => write!(f, "stable-sn(alpha={alpha}, c={c})"),
            LevyModel::StableGeneral { alpha, beta, c } => {
                write!(f, "stable(alpha={alpha}, beta={beta}, c={c})")
            }
            LevyModel::JumpDiffusion {
                mu,
                sigma,
                jump_rate,
                jump_mean,
            } => write!(
                f,
                "jump-diffusion(mu={mu}, sigma={sigma}, jump_rate={jump_rate}, jump_mean={jump_mean})"
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn sn_models() -> Vec<LevyModel> {
        vec![
            LevyModel::brownian(0.0, 1.0).unwrap(),
            LevyModel::brownian(0.3, 0.7).unwrap(),
            LevyModel::brownian(-0.5, 2.0).unwrap(),
            LevyModel::stable_sn(1.5, 1.0).unwrap(),
            LevyModel::stable_sn(1.2, 0.5).unwrap(),
            LevyModel::jump_diffusion(0.1, 1.0, 1.0, 0.5).unwrap(),
            LevyModel::jump_diffusion(-2.0, 0.0, 1.5, 1.0).unwrap(),
        ]
    }

    #[test]
    fn brownian_quadratic_term() {
        let m = LevyModel::brownian(0.0, 2f64.sqrt()).unwrap();
        assert!((m.laplace_exponent(1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn psi_vanishes_at_origin() {
        for m in sn_models() {
            assert_eq!(m.laplace_exponent(0.0).unwrap(), 0.0, "{m}");
        }
    }

    #[test]
    fn brownian_exponent_matches_monte_carlo_log_moment() {
        // log E[exp(λ B_1)] estimated from samples, λ = 2, σ = 1.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 400_000;
        let lambda: f64 = 2.0;
        let mean = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (lambda * z).exp()
            })
            .sum::<f64>()
            / n as f64;
        let mc = mean.ln();
        let m = LevyModel::brownian(0.0, 1.0).unwrap();
        let psi = m.laplace_exponent(lambda).unwrap();
        assert!((psi - 2.0).abs() < 1e-15);
        // the lognormal moment is heavy tailed; a loose band suffices
        assert!((mc - psi).abs() < 0.1, "mc={mc}");
    }

    #[test]
    fn rejects_general_stable_and_negative_lambda() {
        let g = LevyModel::stable(1.5, 0.0, 1.0).unwrap();
        assert!(matches!(g.laplace_exponent(1.0), Err(Error::Unsupported(_))));
        let m = LevyModel::brownian(0.0, 1.0).unwrap();
        assert!(matches!(m.laplace_exponent(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_brownian_examples() {
        let m = LevyModel::brownian(0.0, 1.0).unwrap();
        assert!((m.phi(0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!((m.phi(2.0).unwrap() - 2.0).abs() < 1e-12);
        // bisection oracle on λ²/2 = γ
        let mut lo = 0.0f64;
        let mut hi = 10.0f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid / 2.0 < 0.5 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((m.phi(0.5).unwrap() - lo).abs() < 1e-12);
    }

    #[test]
    fn phi_tends_to_zero_for_small_gamma() {
        let m = LevyModel::brownian(0.0, 1.0).unwrap();
        assert!(m.phi(1e-12).unwrap() < 2e-6);
        assert_eq!(m.right_inverse(0.0).unwrap(), 0.0);
        // ψ'(0) = −μ − λⱼ·jump_mean = 0.5 > 0
        let j = LevyModel::jump_diffusion(-1.0, 1.0, 1.0, 0.5).unwrap();
        assert!(j.phi(1e-12).unwrap() < 1e-9);
    }

    #[test]
    fn phi_rejects_nonpositive_gamma() {
        let m = LevyModel::brownian(0.0, 1.0).unwrap();
        assert!(matches!(m.phi(0.0), Err(Error::Domain(_))));
        assert!(matches!(m.phi(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn right_inverse_at_zero_for_downward_drift() {
        // ψ(λ) = −μλ + λ²/2 with μ = 0.3 has largest root 2μ = 0.6
        let m = LevyModel::brownian(0.3, 1.0).unwrap();
        assert!((m.right_inverse(0.0).unwrap() - 0.6).abs() < 1e-12);
        // jump diffusion drifting to −∞: ψ'(0) = −μ − λⱼ·jump_mean < 0
        let j = LevyModel::jump_diffusion(0.1, 1.0, 1.0, 0.5).unwrap();
        let r = j.right_inverse(0.0).unwrap();
        assert!(r > 0.0);
        assert!(j.psi(r).abs() < 1e-12);
    }

    #[test]
    fn right_inverse_on_log_grid() {
        for m in sn_models() {
            for i in 0..=60 {
                let g = 10f64.powf(-3.0 + 6.0 * i as f64 / 60.0);
                let l = m.phi(g).unwrap();
                let err = (m.psi(l) - g).abs();
                assert!(err <= 1e-12 * g.max(1.0), "{m} gamma={g} err={err}");
                assert!(err <= 1e-10 * g, "{m} gamma={g} rel={}", err / g);
            }
        }
    }

    #[test]
    fn characteristic_exponent_examples() {
        let bm = LevyModel::stable(1.5, 0.0, 1.0).unwrap();
        assert_eq!(bm.characteristic_exponent(0.0).unwrap(), Complex64::new(0.0, 0.0));
        let a2 = stable_characteristic_exponent(2.0, 0.3, 1.0, 1.0).unwrap();
        assert!((a2.re - 1.0).abs() < 1e-15 && a2.im.abs() < 1e-15);
        // α = 1.5, β = −1: 1 − i(−1)tan(3π/4) = 1 − i
        let s = LevyModel::stable(1.5, -1.0, 1.0).unwrap();
        let v = s.characteristic_exponent(1.0).unwrap();
        let tan = (3.0 * PI / 4.0).tan();
        let expect = Complex64::new(1.0, tan);
        assert!((v - expect).norm() < 1e-15);
        assert!((v - Complex64::new(1.0, -1.0)).norm() < 1e-14);
        assert!(matches!(
            stable_characteristic_exponent(1.0, 0.0, 1.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn stable_constant_matches_levy_measure_by_quadrature() {
        // With Lévy density C y^{−1−α} on the negative half-line:
        //   ψ(1)    = C ∫ (e^{−y} − 1 + y) y^{−1−α} dy
        //   Re Ψ(1) = C ∫ (1 − cos y) y^{−1−α} dy
        //   Im Ψ(1) = −C ∫ (y − sin y) y^{−1−α} dy
        // so the ratios must match c'/c and tan(πα/2).
        for &alpha in &[1.2, 1.5, 1.8] {
            let p = 1.0 / (2.0 - alpha);
            // y = s^p turns y^{1−α} dy into p ds, so the integrand becomes
            // p·g(y)/y² which is bounded at the origin
            let near = |g: &dyn Fn(f64) -> f64| {
                adaptive_simpson(
                    |s: f64| {
                        let y = s.powf(p);
                        if y < 1e-150 {
                            return p * g(1e-150) / 1e-300;
                        }
                        p * g(y) / (y * y)
                    },
                    0.0,
                    1.0,
                    1e-11,
                )
                .unwrap()
            };
            let far = |g: &dyn Fn(f64) -> f64, l: f64| {
                adaptive_simpson(|y: f64| g(y) * y.powf(-1.0 - alpha), 1.0, l, 1e-11).unwrap()
            };
            let l: f64 = 4000.0;
            // cancellation-free forms near the origin
            let f_psi = |y: f64| {
                if y < 1e-3 {
                    y * y * (0.5 - y / 6.0 + y * y / 24.0)
                } else {
                    (-y).exp_m1() + y
                }
            };
            let f_re = |y: f64| 2.0 * (0.5 * y).sin().powi(2);
            let f_im = |y: f64| {
                if y < 1e-3 {
                    y * y * y * (1.0 / 6.0 - y * y / 120.0)
                } else {
                    y - y.sin()
                }
            };
            let tail_pow = |k: f64| l.powf(k - alpha) / (alpha - k);
            let i_psi = near(&f_psi) + far(&f_psi, l) + tail_pow(1.0) - tail_pow(0.0);
            let i_re = near(&f_re) + far(&f_re, l) + tail_pow(0.0);
            let i_im = near(&f_im) + far(&f_im, l) + tail_pow(1.0);
            let ratio = i_psi / i_re;
            let expect = stable_laplace_constant(alpha, 1.0);
            assert!((ratio / expect - 1.0).abs() < 1e-4, "alpha={alpha}: {ratio} vs {expect}");
            let skew = -i_im / i_re;
            let tan = (PI * alpha / 2.0).tan();
            assert!((skew / tan - 1.0).abs() < 1e-4, "alpha={alpha}: {skew} vs {tan}");
        }
    }

    #[test]
    fn stable_sn_continuation_of_characteristic_exponent() {
        // ψ(λ) = −Ψ(−iλ) with Ψ(θ) = c (iθ)^α / cos(πα/2) for θ > 0
        let (alpha, c) = (1.5, 0.8);
        let m = LevyModel::stable_sn(alpha, c).unwrap();
        let theta: f64 = 0.7;
        let cont = c * Complex64::new(0.0, theta).powf(alpha) / (PI * alpha / 2.0).cos();
        let direct = m.characteristic_exponent(theta).unwrap();
        assert!((cont - direct).norm() < 1e-13);
        let lambda = 1.3;
        let at = c * Complex64::new(lambda, 0.0).powf(alpha) / (PI * alpha / 2.0).cos();
        assert!((-at.re - m.psi(lambda)).abs() < 1e-13);
    }

    #[test]
    fn rejects_degenerate_models() {
        assert!(LevyModel::brownian(0.0, 0.0).is_err());
        assert!(LevyModel::stable_sn(1.0, 1.0).is_err());
        assert!(LevyModel::stable_sn(2.1, 1.0).is_err());
        assert!(LevyModel::stable(1.0, 0.0, 1.0).is_err());
        assert!(LevyModel::stable(1.5, 1.0, 1.0).is_err());
        assert!(LevyModel::stable(0.5, -1.0, 0.0).is_err());
        assert!(LevyModel::jump_diffusion(0.5, 0.0, 1.0, 1.0).is_err());
        assert!(LevyModel::jump_diffusion(-0.5, 0.0, 1.0, 1.0).is_ok());
        assert!(LevyModel::jump_diffusion(0.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn json_uses_flat_keys() {
        let m = LevyModel::jump_diffusion(0.1, 1.0, 1.0, 0.5).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(
            s,
            r#"{"model":"jump-diffusion","mu":0.1,"sigma":1.0,"jump_rate":1.0,"jump_mean":0.5}"#
        );
        let back: LevyModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"model":"bm","mu":0.0,"sigma":-1.0}"#;
        assert!(serde_json::from_str::<LevyModel>(bad).is_err());
    }

    #[test]
    fn key_value_config() {
        let text = "# driftless\nmodel = bm\nmu = 0\nsigma: 1.5\nseed = 3\n";
        let map = parse_key_values(text).unwrap();
        let m = LevyModel::try_from(ModelConfig::from_map(&map).unwrap()).unwrap();
        assert_eq!(m, LevyModel::brownian(0.0, 1.5).unwrap());
        assert!(parse_key_values("model bm").is_err());
    }

    proptest! {
        #[test]
        fn psi_is_convex(idx in 0usize..7, a in 0.0f64..20.0, b in 0.0f64..20.0, t in 0.0f64..1.0) {
            let m = sn_models()[idx];
            let (l1, l2) = if a < b { (a, b) } else { (b, a) };
            let lhs = m.psi(t * l1 + (1.0 - t) * l2);
            let rhs = t * m.psi(l1) + (1.0 - t) * m.psi(l2);
            let scale = m.psi(l1).abs().max(m.psi(l2).abs()).max(1e-300);
            prop_assert!(lhs <= rhs + 1e-12 * scale);
        }

        #[test]
        fn characteristic_exponent_is_hermitian(alpha in 0.1f64..1.95, beta in -1.0f64..0.99, theta in -50.0f64..50.0) {
            prop_assume!((alpha - 1.0).abs() > 1e-3);
            let m = LevyModel::stable(alpha, beta, 1.3).unwrap();
            let a = m.characteristic_exponent(theta).unwrap();
            let b = m.characteristic_exponent(-theta).unwrap();
            prop_assert!((a - b.conj()).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }
}
