//! q-scale functions of spectrally negative models.
//!
//! `W^(q)` is the function on `[0, ∞)` with Laplace transform
//! `1/(ψ(λ) − q)` for `λ > φ(q)`, extended by zero to negative arguments.
//! `Z^(q)(x) = 1 + q ∫₀ˣ W^(q)(y) dy`.

use std::collections::BTreeMap;
use std::sync::Mutex;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laplace::{one_sided_derivative, ContourShift, Method, TransformSpec};
use crate::models::LevyModel;
use crate::quad::adaptive_simpson;

/// Point at which the right limit `W(0+)` is approximated for the numeric backend.
pub const ZERO_PLUS: f64 = 1e-8;

/// Length of the cached integration segments used for `Z`.
const Z_SEGMENT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Two-exponential formula, Brownian motion with drift only.
    ClosedForm,
    /// Fixed Talbot inversion of `1/(ψ(λ) − q)`.
    NumericInversion,
}

/// Numerical settings for the inversion backend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleOptions {
    pub method: Method,
    pub shift: ContourShift,
    /// Step hint for the one-sided difference giving `W'₊`, divided by `max(1, φ(q))`.
    pub derivative_step: f64,
    /// Relative tolerance for the Talbot/Stehfest cross-check, off when `None`.
    pub cross_check: Option<f64>,
}

impl Default for ScaleOptions {
    fn default() -> Self {
        ScaleOptions {
            // Fewer nodes keep roundoff in W low enough for the difference quotient.
            method: Method::FixedTalbot(20),
            shift: ContourShift::default(),
            derivative_step: 2e-4,
            cross_check: None,
        }
    }
}

/// Evaluator of `W^(q)`, `Z^(q)` and `W^(q)'₊` for one model and one `q`.
///
/// Numeric evaluations are memoised; the caches never change returned values.
#[derive(Debug)]
pub struct ScaleEvaluator {
    model: LevyModel,
    q: f64,
    phi_q: f64,
    backend: Backend,
    options: ScaleOptions,
    w_cache: Mutex<BTreeMap<u64, f64>>,
    z_segments: Mutex<BTreeMap<u64, f64>>,
}

impl Clone for ScaleEvaluator {
    fn clone(&self) -> Self {
        ScaleEvaluator {
            model: self.model,
            q: self.q,
            phi_q: self.phi_q,
            backend: self.backend,
            options: self.options,
            w_cache: Mutex::new(self.w_cache.lock().unwrap().clone()),
            z_segments: Mutex::new(self.z_segments.lock().unwrap().clone()),
        }
    }
}

impl ScaleEvaluator {
    /// Evaluator with the default backend: closed form for Brownian motion,
    /// numeric inversion otherwise.
    pub fn new(model: LevyModel, q: f64) -> Result<Self> {
        let backend = match model {
            LevyModel::BrownianDrift { .. } => Backend::ClosedForm,
            _ => Backend::NumericInversion,
        };
        Self::with_options(model, q, backend, ScaleOptions::default())
    }

    pub fn with_backend(model: LevyModel, q: f64, backend: Backend) -> Result<Self> {
        Self::with_options(model, q, backend, ScaleOptions::default())
    }

    pub fn with_options(model: LevyModel, q: f64, backend: Backend, options: ScaleOptions) -> Result<Self> {
        model.validate()?;
        if !model.is_spectrally_negative() {
            return Err(Error::Unsupported(
                "scale functions exist for spectrally negative models only".into(),
            ));
        }
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::Domain(format!("q must be >= 0, got {q}")));
        }
        if backend == Backend::ClosedForm && !matches!(model, LevyModel::BrownianDrift { .. }) {
            return Err(Error::Unsupported(format!(
                "no closed-form scale function for {}",
                model.name()
            )));
        }
        options.method.validate()?;
        let phi_q = model.right_inverse(q)?;
        Ok(ScaleEvaluator {
            model,
            q,
            phi_q,
            backend,
            options,
            w_cache: Mutex::new(BTreeMap::new()),
            z_segments: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Cached `φ(q)`, the exponential growth rate of `W^(q)`.
    pub fn phi_q(&self) -> f64 {
        self.phi_q
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    fn transform(&self) -> Result<TransformSpec<impl Fn(Complex64) -> Complex64 + '_>> {
        let model = self.model;
        let q = self.q;
        let spec = TransformSpec::new(
            move |s: Complex64| 1.0 / (model.psi_complex(s) - q),
            self.phi_q,
            self.options.method,
        )?
        .with_shift(self.options.shift);
        Ok(match self.options.cross_check {
            Some(tol) => spec.with_cross_check(tol),
            None => spec,
        })
    }

    fn numeric_w(&self, x: f64) -> Result<f64> {
        let key = x.to_bits();
        if let Some(v) = self.w_cache.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = self.transform()?.invert(x)?;
        self.w_cache.lock().unwrap().insert(key, v);
        Ok(v)
    }

    /// Brownian roots `r₋ ≤ r₊` of `ψ(λ) = q` and the factor `2/σ²`.
    fn brownian_roots(&self) -> (f64, f64, f64) {
        match self.model {
            LevyModel::BrownianDrift { mu, sigma } => {
                let s2 = sigma * sigma;
                let disc = (mu * mu + 2.0 * s2 * self.q).sqrt();
                ((mu - disc) / s2, (mu + disc) / s2, 2.0 / s2)
            }
            _ => unreachable!("closed form is restricted to Brownian motion"),
        }
    }

    fn closed_w(&self, x: f64) -> f64 {
        let (rm, rp, k) = self.brownian_roots();
        let d = rp - rm;
        if d == 0.0 {
            return k * x;
        }
        k * (rp * x).exp() * -(-d * x).exp_m1() / d
    }

    fn closed_w_prime(&self, x: f64) -> f64 {
        let (rm, rp, k) = self.brownian_roots();
        let d = rp - rm;
        if d == 0.0 {
            return k;
        }
        k * (rp * x).exp() * (rp - rm * (-d * x).exp()) / d
    }

    fn closed_z(&self, x: f64) -> f64 {
        if self.q == 0.0 {
            return 1.0;
        }
        let (rm, rp, k) = self.brownian_roots();
        // q > 0 gives r₋ < 0 < r₊
        1.0 + self.q * k * ((rp * x).exp_m1() / rp - (rm * x).exp_m1() / rm) / (rp - rm)
    }

    /// `W^(q)(x)`; zero for `x < 0` and the right limit at `x = 0`.
    pub fn w(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::Domain("W at NaN".into()));
        }
        if x < 0.0 {
            return Ok(0.0);
        }
        match self.backend {
            Backend::ClosedForm => Ok(self.closed_w(x)),
            Backend::NumericInversion => self.numeric_w(x.max(ZERO_PLUS)),
        }
    }

    /// Right derivative `W^(q)'₊(x)` for `x > 0`.
    pub fn w_right_derivative(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("W'+ needs x > 0, got {x}")));
        }
        match self.backend {
            Backend::ClosedForm => Ok(self.closed_w_prime(x)),
            Backend::NumericInversion => {
                let h = self.derivative_step(x);
                let f0 = self.numeric_w(x)?;
                let f1 = self.numeric_w(x + h)?;
                let f2 = self.numeric_w(x + 2.0 * h)?;
                Ok(one_sided_derivative(f0, f1, f2, h))
            }
        }
    }

    fn derivative_step(&self, x: f64) -> f64 {
        // truncation error grows like (h·φ(q))², so the step shrinks with the
        // growth rate rather than with x
        (self.options.derivative_step / self.phi_q.max(1.0)).max(1e-6 * x.max(1.0))
    }

    /// `Z^(q)(x) = 1 + q ∫₀ˣ W^(q)`; equal to 1 for `x ≤ 0`.
    pub fn z(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::Domain("Z at NaN".into()));
        }
        if x <= 0.0 || self.q == 0.0 {
            return Ok(1.0);
        }
        match self.backend {
            Backend::ClosedForm => Ok(self.closed_z(x)),
            Backend::NumericInversion => Ok(1.0 + self.q * self.integral_w(x)?),
        }
    }

    /// `∫₀ˣ W^(q)(y) dy` assembled from fixed unit segments (cached) and a
    /// final partial segment, so the value does not depend on call order.
    pub fn integral_w(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        let full = (x / Z_SEGMENT).floor() as u64;
        let mut total = 0.0;
        for k in 0..full {
            let cached = self.z_segments.lock().unwrap().get(&k).copied();
            let seg = match cached {
                Some(v) => v,
                None => {
                    let a = k as f64 * Z_SEGMENT;
                    let v = self.integrate_segment(a, a + Z_SEGMENT)?;
                    self.z_segments.lock().unwrap().insert(k, v);
                    v
                }
            };
            total += seg;
        }
        let a = full as f64 * Z_SEGMENT;
        if x > a {
            total += self.integrate_segment(a, x)?;
        }
        Ok(total)
    }

    fn integrate_segment(&self, a: f64, b: f64) -> Result<f64> {
        let f = |y: f64| self.w(y).unwrap_or(f64::NAN);
        integrate_smoothed(f, a, b, 1e-10).map_err(|e| match e {
            Error::Quadrature(m) => Error::Quadrature(format!("Z integral: {m}")),
            other => other,
        })
    }

    /// Excursion rate `n(ε̄ > t) = W'₊(t)/W(t)`; requires `q = 0`.
    pub fn excursion_rate(&self, t: f64) -> Result<f64> {
        if self.q != 0.0 {
            return Err(Error::Argument(format!(
                "excursion rate uses the q = 0 scale function, evaluator has q = {}",
                self.q
            )));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("excursion rate needs t > 0, got {t}")));
        }
        self.log_derivative(t)
    }

    /// `W'₊(x)/W(x)` for `x > 0`, any `q`.
    pub fn log_derivative(&self, x: f64) -> Result<f64> {
        Ok(self.w_right_derivative(x)? / self.w(x)?)
    }

    /// Numerical Laplace transform `∫₀^∞ e^{−λx} W^(q)(x) dx` for `λ > φ(q)`,
    /// truncated where the remaining tail is below `1e-12` of the total.
    pub fn laplace_transform(&self, lambda: f64) -> Result<f64> {
        let gap = lambda - self.phi_q;
        if !(gap > 0.0) {
            return Err(Error::Domain(format!(
                "transform needs lambda > phi(q) = {}, got {lambda}",
                self.phi_q
            )));
        }
        let f = |x: f64| (-lambda * x).exp() * self.w(x).unwrap_or(f64::NAN);
        let mut total = 0.0;
        let mut a = 0.0;
        let step = 1.0 / gap;
        loop {
            let b = a + step;
            let piece = integrate_smoothed(f, a, b, 1e-10)?;
            total += piece;
            a = b;
            // W(x)e^{−φx} is nondecreasing and bounded, so the tail beyond b
            // is at most e^{−λb}W(b)/gap
            let tail = f(b) / gap;
            if tail <= 1e-12 * total.abs() || a > 1e4 {
                break;
            }
        }
        Ok(total)
    }
}

/// Adaptive Simpson with tolerance `max(tol, tol·|estimate|)`. Segments
/// starting at the origin are integrated in `s = √y`, which smooths the
/// power-law behaviour of `W` near zero for unbounded-variation models.
fn integrate_smoothed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == 0.0 {
        let g = |s: f64| 2.0 * s * f(s * s);
        let r = b.sqrt();
        let coarse = r / 6.0 * (g(0.0) + 4.0 * g(0.5 * r) + g(r));
        adaptive_simpson(g, 0.0, r, tol.max(tol * coarse.abs()))
    } else {
        let coarse = (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        adaptive_simpson(f, a, b, tol.max(tol * coarse.abs()))
    }
}
