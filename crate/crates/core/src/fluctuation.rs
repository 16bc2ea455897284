//! Distributions of maximum loss, maximum gain, supremum and infimum of
//! spectrally negative models, expressed through scale functions.
//!
//! [`PassageLaw`] covers functionals stopped at the first passage `τ_β` above
//! a level and is built on `W = W^(0)`. [`ExpTimeLaw`] covers functionals at
//! an independent exponential time `T` with rate `γ` and is built on
//! `W^(γ)`, `Z^(γ)`.

use crate::error::{Error, Result};
use crate::models::LevyModel;
use crate::scale::ScaleEvaluator;

/// Raw formula values may leave `[0, 1]` by at most this much before the
/// result is treated as a numerical failure.
pub const CLAMP_SLACK: f64 = 1e-9;

/// Clamps `p` into `[0, 1]` when the excursion is within [`CLAMP_SLACK`].
pub fn checked_probability(p: f64, what: &str) -> Result<f64> {
    if !p.is_finite() || !(-CLAMP_SLACK..=1.0 + CLAMP_SLACK).contains(&p) {
        return Err(Error::Consistency(format!("{what} evaluated to {p}, outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

fn positive(value: f64, name: &str) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Laws stopped at the first passage above a level.
#[derive(Debug, Clone)]
pub struct PassageLaw {
    scale: ScaleEvaluator,
}

impl PassageLaw {
    pub fn new(model: LevyModel) -> Result<Self> {
        Self::from_evaluator(ScaleEvaluator::new(model, 0.0)?)
    }

    /// Wraps an evaluator of `W`; fails unless its `q` is zero.
    pub fn from_evaluator(scale: ScaleEvaluator) -> Result<Self> {
        if scale.q() != 0.0 {
            return Err(Error::Argument(format!(
                "passage laws use W = W^(0), evaluator has q = {}",
                scale.q()
            )));
        }
        Ok(PassageLaw { scale })
    }

    pub fn scale(&self) -> &ScaleEvaluator {
        &self.scale
    }

    /// `P{I_{τ_y} ≥ −x} = W(x)/W(x+y)`, exit from `[−x, y]` at the top.
    pub fn two_sided_exit_up(&self, x: f64, y: f64) -> Result<f64> {
        positive(x, "x")?;
        positive(y, "y")?;
        let p = self.scale.w(x)? / self.scale.w(x + y)?;
        checked_probability(p, "two-sided exit")
    }

    /// `P{M⁻_{τ_β} ≤ u} = exp(−β W'₊(u)/W(u))`.
    pub fn maxloss_cdf(&self, u: f64, beta: f64) -> Result<f64> {
        positive(u, "u")?;
        positive(beta, "beta")?;
        let rate = self.scale.excursion_rate(u)?;
        checked_probability((-beta * rate).exp(), "maximum loss cdf")
    }

    /// `P{M⁻_{τ_β} ≤ u, I_{τ_β} ≥ −α}`.
    ///
    /// The middle branch is used on the closed interval `α ≤ u ≤ α + β`.
    pub fn joint_maxloss_inf_cdf(&self, u: f64, alpha: f64, beta: f64) -> Result<f64> {
        positive(u, "u")?;
        positive(alpha, "alpha")?;
        positive(beta, "beta")?;
        let p = if u < alpha {
            (-beta * self.scale.excursion_rate(u)?).exp()
        } else if u <= alpha + beta {
            let rate = self.scale.excursion_rate(u)?;
            self.scale.w(alpha)? / self.scale.w(u)? * (-(beta + alpha - u) * rate).exp()
        } else {
            self.scale.w(alpha)? / self.scale.w(alpha + beta)?
        };
        checked_probability(p, "joint maximum loss / infimum cdf")
    }

    /// `P{M⁻_{τ_β} ≤ u, M⁺_{τ_β} ≤ v}` for `v ≥ β`, `u ≥ 0`.
    ///
    /// Evaluated as [`Self::joint_maxloss_inf_cdf`] at `α = v − β`. Since
    /// `M⁺_{τ_β} > β` almost surely, the edge `v = β` gives 0, as does `u = 0`.
    pub fn joint_maxloss_maxgain_cdf(&self, u: f64, v: f64, beta: f64) -> Result<f64> {
        positive(beta, "beta")?;
        if !(u >= 0.0) || !u.is_finite() {
            return Err(Error::Domain(format!("u must be >= 0, got {u}")));
        }
        if !(v >= beta) || !v.is_finite() {
            return Err(Error::Argument(format!("need v >= beta, got v = {v}, beta = {beta}")));
        }
        if v == beta || u == 0.0 {
            return Ok(0.0);
        }
        self.joint_maxloss_inf_cdf(u, v - beta, beta)
    }
}

/// Laws at an independent exponential time `T` with rate `γ`.
#[derive(Debug, Clone)]
pub struct ExpTimeLaw {
    scale: ScaleEvaluator,
}

impl ExpTimeLaw {
    pub fn new(model: LevyModel, gamma: f64) -> Result<Self> {
        positive(gamma, "gamma")?;
        Self::from_evaluator(ScaleEvaluator::new(model, gamma)?)
    }

    /// Wraps an evaluator of `W^(γ)`; `γ` is taken from its `q`.
    pub fn from_evaluator(scale: ScaleEvaluator) -> Result<Self> {
        positive(scale.q(), "gamma")?;
        Ok(ExpTimeLaw { scale })
    }

    pub fn scale(&self) -> &ScaleEvaluator {
        &self.scale
    }

    pub fn gamma(&self) -> f64 {
        self.scale.q()
    }

    /// `P{M⁻_T > a} = Z^(γ)(a) − γ W^(γ)(a)² / W^(γ)'₊(a)`.
    pub fn maxloss_tail(&self, a: f64) -> Result<f64> {
        positive(a, "a")?;
        let w = self.scale.w(a)?;
        let p = self.scale.z(a)? - self.gamma() * w * w / self.scale.w_right_derivative(a)?;
        checked_probability(p, "maximum loss tail")
    }

    /// `P{M⁺_T > a} = Z^(γ)(0)/Z^(γ)(a)`.
    pub fn maxgain_tail(&self, a: f64) -> Result<f64> {
        positive(a, "a")?;
        let p = self.scale.z(0.0)? / self.scale.z(a)?;
        checked_probability(p, "maximum gain tail")
    }

    /// `P{a < I_T, S_T < b}` for `a < 0 < b`.
    pub fn sup_inf_cdf(&self, a: f64, b: f64) -> Result<f64> {
        if !(a < 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("need a < 0, got {a}")));
        }
        positive(b, "b")?;
        let s = &self.scale;
        let p = 1.0 - s.z(-a)? + (s.z(b - a)? - 1.0) * s.w(-a)? / s.w(b - a)?;
        checked_probability(p, "joint infimum / supremum cdf")
    }

    /// `h(x) = γ W^(γ)(x−a)/φ(γ) − γ ∫₀^{x−a} W^(γ)`, the probability that the
    /// clock rings before the process started at `x` goes below `a`.
    pub fn h(&self, x_minus_a: f64) -> Result<f64> {
        positive(x_minus_a, "x - a")?;
        let s = &self.scale;
        let p = self.gamma() * s.w(x_minus_a)? / s.phi_q() - (s.z(x_minus_a)? - 1.0);
        checked_probability(p, "h-function")
    }

    /// Rate `φ(γ)` of the exponential law of `S_T`.
    pub fn sup_rate(&self) -> f64 {
        self.scale.phi_q()
    }

    /// `ψ̄(λ) = ψ(λ + φ(γ)) − γ` for `λ ≥ −φ(γ)`.
    pub fn tilted_exponent(&self, lambda: f64) -> Result<f64> {
        tilted_exponent(self.scale.model(), lambda, self.gamma())
    }
}

/// `ψ̄(λ) = ψ(λ + φ(γ)) − γ`, the exponent of the pre-supremum process.
pub fn tilted_exponent(model: &LevyModel, lambda: f64, gamma: f64) -> Result<f64> {
    let phi = model.phi(gamma)?;
    if !(lambda >= -phi) || !lambda.is_finite() {
        return Err(Error::Domain(format!("tilted exponent needs lambda >= -phi(gamma) = {}, got {lambda}", -phi)));
    }
    Ok(model.laplace_exponent((lambda + phi).max(0.0))? - gamma)
}

/// Rate `φ(γ)` of the exponential law of the supremum at an exponential time.
pub fn sup_exp_rate(model: &LevyModel, gamma: f64) -> Result<f64> {
    model.phi(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::Backend;

    fn bm() -> LevyModel {
        LevyModel::brownian(0.0, 1.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn two_sided_exit_examples() {
        let law = PassageLaw::new(bm()).unwrap();
        assert!(close(law.two_sided_exit_up(1.0, 1.0).unwrap(), 0.5, 1e-14));
        assert!(close(law.two_sided_exit_up(1.0, 3.0).unwrap(), 0.25, 1e-14));
        assert!(law.two_sided_exit_up(1e6, 1.0).unwrap() > 0.99999);
        assert!(matches!(law.two_sided_exit_up(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(law.two_sided_exit_up(1.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn maxloss_cdf_examples() {
        let law = PassageLaw::new(bm()).unwrap();
        assert!(close(law.maxloss_cdf(1.0, 1.0).unwrap(), (-1f64).exp(), 1e-14));
        assert!(law.maxloss_cdf(1e8, 1.0).unwrap() > 1.0 - 1e-7);
        assert!(law.maxloss_cdf(1.0, 1e-12).unwrap() > 1.0 - 1e-11);
    }

    #[test]
    fn joint_branches() {
        let law = PassageLaw::new(bm()).unwrap();
        // third branch
        assert!(close(law.joint_maxloss_inf_cdf(2.0, 1.0, 0.5).unwrap(), 2.0 / 3.0, 1e-14));
        // middle branch, independent evaluation of (W(1)/W(1.2))·exp(−0.3/1.2)
        let expected = (2.0 / 2.4) * (-0.3f64 / 1.2).exp();
        assert!(close(law.joint_maxloss_inf_cdf(1.2, 1.0, 0.5).unwrap(), expected, 1e-14));
        assert!(close(expected, 0.6490006526, 1e-9));
        // first branch
        assert!(close(law.joint_maxloss_inf_cdf(0.5, 1.0, 0.5).unwrap(), (-1f64).exp(), 1e-14));
    }

    #[test]
    fn joint_is_continuous_at_branch_boundaries() {
        let models = [bm(), LevyModel::brownian(0.3, 1.5).unwrap()];
        for m in models {
            let law = PassageLaw::new(m).unwrap();
            let s = law.scale();
            for (alpha, beta) in [(1.0, 0.5), (0.3, 2.0)] {
                let at = law.joint_maxloss_inf_cdf(alpha, alpha, beta).unwrap();
                let first = (-beta * s.excursion_rate(alpha).unwrap()).exp();
                assert!(close(at, first, 1e-12));
                let top = alpha + beta;
                let at = law.joint_maxloss_inf_cdf(top, alpha, beta).unwrap();
                let third = s.w(alpha).unwrap() / s.w(top).unwrap();
                assert!(close(at, third, 1e-12));
                let eps = 1e-9;
                assert!(close(law.joint_maxloss_inf_cdf(alpha - eps, alpha, beta).unwrap(), first, 1e-7));
                assert!(close(law.joint_maxloss_inf_cdf(top + eps, alpha, beta).unwrap(), third, 1e-7));
            }
        }
    }

    #[test]
    fn joint_tends_to_marginal_for_large_alpha() {
        let law = PassageLaw::new(bm()).unwrap();
        for u in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let joint = law.joint_maxloss_inf_cdf(u, 1e3, 1.0).unwrap();
            let marginal = law.maxloss_cdf(u, 1.0).unwrap();
            assert!(close(joint, marginal, 1e-9));
        }
    }

    #[test]
    fn corollary_is_theorem_at_v_equal_alpha_plus_beta() {
        let law = PassageLaw::new(LevyModel::brownian(-0.2, 0.8).unwrap()).unwrap();
        for &u in &[0.1, 0.7, 1.0, 1.3, 1.5, 3.0] {
            for &(alpha, beta) in &[(1.0, 0.5), (0.2, 1.0), (2.0, 2.0)] {
                let a = law.joint_maxloss_maxgain_cdf(u, alpha + beta, beta).unwrap();
                let b = law.joint_maxloss_inf_cdf(u, (alpha + beta) - beta, beta).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn corollary_examples() {
        let law = PassageLaw::new(bm()).unwrap();
        assert_eq!(law.joint_maxloss_maxgain_cdf(2.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(close(law.joint_maxloss_maxgain_cdf(5.0, 1.5, 1.0).unwrap(), 1.0 / 3.0, 1e-14));
        assert!(law.joint_maxloss_maxgain_cdf(1e9, 1e9, 1.0).unwrap() > 1.0 - 1e-8);
        assert!(matches!(law.joint_maxloss_maxgain_cdf(1.0, 0.5, 1.0), Err(Error::Argument(_))));
    }

    #[test]
    fn passage_cdfs_are_monotone() {
        let models = [
            bm(),
            LevyModel::brownian(0.4, 1.0).unwrap(),
            LevyModel::jump_diffusion(0.1, 1.0, 1.0, 0.5).unwrap(),
        ];
        for m in models {
            let law = PassageLaw::new(m).unwrap();
            let grid: Vec<f64> = (1..=40).map(|i| 0.1 * i as f64).collect();
            let mut prev = 0.0;
            for &u in &grid {
                let p = law.maxloss_cdf(u, 1.0).unwrap();
                assert!(p >= prev, "{m}: cdf decreasing at u = {u}");
                prev = p;
            }
            let mut prev = 1.0;
            for &beta in &grid {
                let p = law.maxloss_cdf(1.0, beta).unwrap();
                assert!(p <= prev, "{m}: cdf increasing in beta at {beta}");
                prev = p;
            }
            for &alpha in &[0.3, 1.0, 2.5] {
                let mut prev = 0.0;
                for &u in &grid {
                    let p = law.joint_maxloss_inf_cdf(u, alpha, 1.0).unwrap();
                    assert!(p >= prev - 1e-12, "{m}: joint decreasing in u at {u}");
                    prev = p;
                }
            }
            for &u in &[0.5, 1.5, 3.0] {
                let mut prev = 0.0;
                for &alpha in &grid {
                    let p = law.joint_maxloss_inf_cdf(u, alpha, 1.0).unwrap();
                    assert!(p >= prev - 1e-12, "{m}: joint decreasing in alpha at {alpha}");
                    prev = p;
                }
            }
        }
    }

    #[test]
    fn exp_time_tails() {
        let law = ExpTimeLaw::new(bm(), 0.5).unwrap();
        let sech1 = 1.0 / 1f64.cosh();
        assert!(close(law.maxloss_tail(1.0).unwrap(), sech1, 1e-12));
        assert!(close(law.maxgain_tail(1.0).unwrap(), sech1, 1e-12));
        assert!(close(law.maxgain_tail(2.0).unwrap(), 1.0 / 2f64.cosh(), 1e-12));
        assert!(law.maxloss_tail(1e-6).unwrap() > 1.0 - 1e-9);
        assert!(law.maxgain_tail(1e-9).unwrap() > 1.0 - 1e-9);
        assert!(law.maxloss_tail(15.0).unwrap() < 1e-5);
    }

    #[test]
    fn symmetric_tails_agree_for_driftless_brownian() {
        for gamma in [0.1, 0.5, 2.0] {
            let law = ExpTimeLaw::new(LevyModel::brownian(0.0, 1.3).unwrap(), gamma).unwrap();
            for a in [0.1, 0.5, 1.0, 2.0, 3.0] {
                let l = law.maxloss_tail(a).unwrap();
                let g = law.maxgain_tail(a).unwrap();
                assert!(close(l, g, 1e-9), "gamma {gamma} a {a}: {l} vs {g}");
            }
        }
    }

    #[test]
    fn sup_inf_examples() {
        let law = ExpTimeLaw::new(bm(), 0.5).unwrap();
        let (c1, c2, s1, s2) = (1f64.cosh(), 2f64.cosh(), 1f64.sinh(), 2f64.sinh());
        let expected = 1.0 - c1 + (c2 - 1.0) * s1 / s2;
        assert!(close(expected, 1.0 - 1.0 / c1, 1e-14));
        assert!(close(law.sup_inf_cdf(-1.0, 1.0).unwrap(), expected, 1e-12));
        assert!(law.sup_inf_cdf(-6.0, 6.0).unwrap() > 0.99);
        for c in [0.3, 1.0, 2.0] {
            let direct = law.sup_inf_cdf(-c, 0.5 * c).unwrap();
            let mirrored = law.sup_inf_cdf(-0.5 * c, c).unwrap();
            assert!(close(direct, mirrored, 1e-12));
        }
        assert!(matches!(law.sup_inf_cdf(0.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn h_examples() {
        let law = ExpTimeLaw::new(bm(), 0.5).unwrap();
        assert!(close(law.h(1.0).unwrap(), 1.0 - (-1f64).exp(), 1e-12));
        for (gamma, y) in [(0.5, 0.25), (2.0, 1.0), (2.0, 4.0)] {
            let law = ExpTimeLaw::new(bm(), gamma).unwrap();
            let expected = 1.0 - (-y * (2.0 * gamma).sqrt()).exp();
            let h = law.h(y).unwrap();
            // both terms grow like e^{y√(2γ)} and cancel
            assert!(close(h, expected, 1e-9), "gamma {gamma} y {y}: {h} vs {expected}");
        }
        assert!(law.h(1e-9).unwrap() < 1e-8);
        assert!(law.h(15.0).unwrap() > 1.0 - 1e-6);
    }

    #[test]
    fn h_is_probability_for_other_models() {
        let models = [
            LevyModel::jump_diffusion(0.1, 1.0, 1.0, 0.5).unwrap(),
            LevyModel::stable_sn(1.5, 1.0).unwrap(),
        ];
        for m in models {
            let law = ExpTimeLaw::new(m, 0.5).unwrap();
            let mut prev = 0.0;
            for y in [0.25, 1.0, 2.0, 4.0] {
                let h = law.h(y).unwrap();
                assert!(h > prev && h < 1.0, "{m}: h({y}) = {h}");
                prev = h;
            }
        }
    }

    #[test]
    fn numeric_backend_reproduces_closed_form_laws() {
        let m = LevyModel::brownian(0.2, 1.0).unwrap();
        let closed = ExpTimeLaw::new(m, 0.5).unwrap();
        let numeric =
            ExpTimeLaw::from_evaluator(ScaleEvaluator::with_backend(m, 0.5, Backend::NumericInversion).unwrap())
                .unwrap();
        for a in [0.5, 1.0, 2.0] {
            assert!(close(closed.maxloss_tail(a).unwrap(), numeric.maxloss_tail(a).unwrap(), 1e-6));
            assert!(close(closed.maxgain_tail(a).unwrap(), numeric.maxgain_tail(a).unwrap(), 1e-9));
            assert!(close(closed.h(a).unwrap(), numeric.h(a).unwrap(), 1e-9));
            assert!(close(closed.sup_inf_cdf(-a, 1.0).unwrap(), numeric.sup_inf_cdf(-a, 1.0).unwrap(), 1e-9));
        }
    }

    #[test]
    fn tilted_exponent_examples() {
        let m = bm();
        assert!(close(tilted_exponent(&m, 1.0, 0.5).unwrap(), 1.5, 1e-12));
        let phi = m.phi(0.5).unwrap();
        assert!(close(tilted_exponent(&m, -phi, 0.5).unwrap(), -0.5, 1e-12));
        assert!(matches!(tilted_exponent(&m, -1.5, 0.5), Err(Error::Domain(_))));
        let models = [
            m,
            LevyModel::brownian(0.7, 0.4).unwrap(),
            LevyModel::jump_diffusion(0.1, 1.0, 1.0, 0.5).unwrap(),
            LevyModel::jump_diffusion(-2.0, 0.0, 1.0, 1.0).unwrap(),
            LevyModel::stable_sn(1.5, 1.0).unwrap(),
            LevyModel::stable_sn(1.2, 0.3).unwrap(),
        ];
        for m in models {
            for gamma in [0.01, 0.5, 2.0, 10.0] {
                assert!(tilted_exponent(&m, 0.0, gamma).unwrap().abs() <= 1e-12 * gamma.max(1.0));
            }
        }
    }

    #[test]
    fn sup_rate_examples() {
        assert!(close(sup_exp_rate(&bm(), 0.5).unwrap(), 1.0, 1e-12));
        assert!(close(sup_exp_rate(&bm(), 2.0).unwrap(), 2.0, 1e-12));
        assert!(close(ExpTimeLaw::new(bm(), 2.0).unwrap().sup_rate(), 2.0, 1e-12));
    }

    #[test]
    fn clamp_policy() {
        assert_eq!(checked_probability(-5e-10, "p").unwrap(), 0.0);
        assert_eq!(checked_probability(1.0 + 5e-10, "p").unwrap(), 1.0);
        assert_eq!(checked_probability(0.25, "p").unwrap(), 0.25);
        assert!(matches!(checked_probability(-1e-6, "p"), Err(Error::Consistency(_))));
        assert!(matches!(checked_probability(1.1, "p"), Err(Error::Consistency(_))));
        assert!(matches!(checked_probability(f64::NAN, "p"), Err(Error::Consistency(_))));
    }

    #[test]
    fn constructors_check_q() {
        let ev = ScaleEvaluator::new(bm(), 0.5).unwrap();
        assert!(matches!(PassageLaw::from_evaluator(ev), Err(Error::Argument(_))));
        let ev = ScaleEvaluator::new(bm(), 0.0).unwrap();
        assert!(ExpTimeLaw::from_evaluator(ev).is_err());
        assert!(ExpTimeLaw::new(bm(), 0.0).is_err());
    }
}
