//! Numerical inversion of Laplace transforms.
//!
//! Two independent methods are provided. The fixed Talbot method integrates
//! along a deformed Bromwich contour and needs complex evaluations of the
//! image function; the Gaver–Stehfest method only samples the image on the
//! real axis. They fail in different ways, so one serves as a cross-check of
//! the other.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Inversion algorithm and its size parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Abate–Valkó fixed Talbot contour with `nodes` points, even, in `[16, 64]`.
    FixedTalbot(usize),
    /// Gaver–Stehfest with `terms` terms, even, at most 18 in double precision.
    GaverStehfest(usize),
}

impl Default for Method {
    fn default() -> Self {
        Method::FixedTalbot(32)
    }
}

impl Method {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Method::FixedTalbot(n) if n % 2 == 0 && (16..=64).contains(&n) => Ok(()),
            Method::FixedTalbot(n) => Err(Error::Argument(format!(
                "fixed Talbot needs an even node count in [16, 64], got {n}"
            ))),
            Method::GaverStehfest(n) if n % 2 == 0 && (2..=18).contains(&n) => Ok(()),
            Method::GaverStehfest(n) => Err(Error::Argument(format!(
                "Gaver-Stehfest needs an even term count in [2, 18], got {n}"
            ))),
        }
    }

    /// The method used for cross-checking this one.
    pub fn partner(&self) -> Method {
        match self {
            Method::FixedTalbot(_) => Method::GaverStehfest(18),
            Method::GaverStehfest(_) => Method::FixedTalbot(32),
        }
    }
}

/// Placement of the Talbot contour relative to the rightmost singularity.
///
/// The contour is translated to `abscissa + offset`, with
/// `offset = scale * max(1, abscissa) + base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourShift {
    pub scale: f64,
    pub base: f64,
}

impl Default for ContourShift {
    fn default() -> Self {
        ContourShift {
            scale: 0.0,
            base: 0.1,
        }
    }
}

impl ContourShift {
    pub fn offset(&self, abscissa: f64) -> f64 {
        self.scale * abscissa.max(1.0) + self.base
    }
}

/// An image function together with everything needed to invert it.
#[derive(Clone)]
pub struct TransformSpec<F> {
    transform: F,
    abscissa: f64,
    method: Method,
    shift: ContourShift,
    cross_check: Option<f64>,
}

impl<F> std::fmt::Debug for TransformSpec<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransformSpec")
            .field("abscissa", &self.abscissa)
            .field("method", &self.method)
            .field("shift", &self.shift)
            .field("cross_check", &self.cross_check)
            .finish()
    }
}

impl<F> TransformSpec<F>
where
    F: Fn(Complex64) -> Complex64,
{
    /// `abscissa` bounds the real parts of all singularities of `transform`.
    pub fn new(transform: F, abscissa: f64, method: Method) -> Result<Self> {
        if !abscissa.is_finite() {
            return Err(Error::Argument(format!("abscissa must be finite, got {abscissa}")));
        }
        method.validate()?;
        Ok(TransformSpec {
            transform,
            abscissa,
            method,
            shift: ContourShift::default(),
            cross_check: None,
        })
    }

    pub fn with_shift(mut self, shift: ContourShift) -> Self {
        self.shift = shift;
        self
    }

    /// Enables cross-checking against the partner method with the given
    /// relative tolerance.
    pub fn with_cross_check(mut self, rel_tol: f64) -> Self {
        self.cross_check = Some(rel_tol);
        self
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn abscissa(&self) -> f64 {
        self.abscissa
    }

    fn eval_with(&self, method: Method, x: f64) -> f64 {
        match method {
            Method::FixedTalbot(n) => {
                fixed_talbot(&self.transform, self.abscissa + self.shift.offset(self.abscissa), x, n)
            }
            Method::GaverStehfest(n) => gaver_stehfest(&self.transform, self.abscissa.max(0.0), x, n),
        }
    }

    /// Value of the original function at `x > 0`.
    pub fn invert(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("inversion point must be > 0, got {x}")));
        }
        let v = self.eval_with(self.method, x);
        if !v.is_finite() {
            return Err(Error::NonConvergence(format!(
                "{:?} produced {v} at x = {x}",
                self.method
            )));
        }
        if let Some(tol) = self.cross_check {
            let other = self.method.partner();
            let w = self.eval_with(other, x);
            let scale = v.abs().max(w.abs()).max(f64::MIN_POSITIVE);
            if !w.is_finite() || (v - w).abs() > tol * scale {
                return Err(Error::NonConvergence(format!(
                    "{:?} gives {v}, {other:?} gives {w} at x = {x} (tolerance {tol:e})",
                    self.method
                )));
            }
        }
        Ok(v)
    }

    /// Right derivative of the original function at `x > 0`, using only
    /// points at or to the right of `x`.
    pub fn invert_derivative(&self, x: f64, step_hint: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("inversion point must be > 0, got {x}")));
        }
        let h = step_hint.max(1e-6 * x.max(1.0));
        let f0 = self.invert(x)?;
        let f1 = self.invert(x + h)?;
        let f2 = self.invert(x + 2.0 * h)?;
        Ok(one_sided_derivative(f0, f1, f2, h))
    }
}

/// Three-point forward difference `(−3f(x) + 4f(x+h) − f(x+2h)) / 2h`.
pub(crate) fn one_sided_derivative(f0: f64, f1: f64, f2: f64, h: f64) -> f64 {
    (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
}

/// Fixed Talbot inversion of `F(s)` translated to `shift`, i.e. the
/// original is recovered as `exp(shift·t) · L⁻¹[F(s + shift)](t)`.
fn fixed_talbot<F: Fn(Complex64) -> Complex64>(f: &F, shift: f64, t: f64, nodes: usize) -> f64 {
    let m = nodes as f64;
    let r = 2.0 * m / (5.0 * t);
    let s0 = Complex64::new(r + shift, 0.0);
    let mut acc = 0.5 * (f(s0) * (s0 * t).exp()).re;
    for k in 1..nodes {
        let theta = k as f64 * PI / m;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot + shift, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let term = (s * t).exp() * f(s) * Complex64::new(1.0, sigma);
        acc += term.re;
    }
    acc * r / m
}

fn stehfest_weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    let fact = |k: usize| (1..=k).fold(1.0f64, |a, i| a * i as f64);
    (1..=n)
        .map(|k| {
            let lo = k.div_ceil(2);
            let hi = k.min(half);
            let sum: f64 = (lo..=hi)
                .map(|j| {
                    (j as f64).powi(half as i32) * fact(2 * j)
                        / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k))
                })
                .sum();
            if (k + half).is_multiple_of(2) {
                sum
            } else {
                -sum
            }
        })
        .collect()
}

/// Gaver–Stehfest inversion on the real axis, translated to `shift`.
fn gaver_stehfest<F: Fn(Complex64) -> Complex64>(f: &F, shift: f64, t: f64, terms: usize) -> f64 {
    let a = LN_2 / t;
    let sum: f64 = stehfest_weights(terms)
        .iter()
        .enumerate()
        .map(|(i, w)| w * f(Complex64::new(shift + a * (i + 1) as f64, 0.0)).re)
        .sum();
    (shift * t).exp() * a * sum
}
