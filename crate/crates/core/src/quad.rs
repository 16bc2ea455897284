//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 40;
const MAX_EVALS: usize = 4_000_000;

struct Simpson<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    evals: usize,
    failed: bool,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn step(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        self.evals += 2;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || m <= a || b <= m {
            return left + right + delta / 15.0;
        }
        if depth == 0 || self.evals >= MAX_EVALS {
            self.failed = true;
            return left + right + delta / 15.0;
        }
        self.step(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + self.step(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    // Splitting once up front keeps symmetric integrands from fooling the
    // first error estimate.
    let pieces = 8;
    let h = (b - a) / pieces as f64;
    let mut s = Simpson {
        f: &f,
        evals: 0,
        failed: false,
    };
    let mut total = 0.0;
    for i in 0..pieces {
        let lo = a + h * i as f64;
        let hi = if i + 1 == pieces { b } else { a + h * (i + 1) as f64 };
        let fa = f(lo);
        let fb = f(hi);
        let fm = f(0.5 * (lo + hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += s.step(lo, hi, fa, fm, fb, whole, tol / pieces as f64, MAX_DEPTH);
    }
    if !total.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integral over [{a}, {b}]")));
    }
    if s.failed {
        return Err(Error::Quadrature(format!(
            "tolerance {tol:e} not reached over [{a}, {b}]"
        )));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exponential() {
        let v = adaptive_simpson(|x| x * x, 0.0, 3.0, 1e-12).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let v = adaptive_simpson(f64::exp, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn oscillatory() {
        let v = adaptive_simpson(f64::sin, 0.0, 100.0, 1e-10).unwrap();
        assert!((v - (1.0 - 100f64.cos())).abs() < 1e-9);
    }

    #[test]
    fn reports_failure() {
        let r = adaptive_simpson(|x: f64| 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, 1e-14);
        assert!(r.is_err());
        let r = adaptive_simpson(|_| f64::NAN, 0.0, 1.0, 1e-6);
        assert!(matches!(r, Err(Error::Quadrature(_))));
    }
}
