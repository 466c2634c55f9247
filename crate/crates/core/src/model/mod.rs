//! Lévy triplets and their Winsorised/truncated functionals.
//!
//! A [`LevyModel`] holds `(γ, σ², Π)` with `Π` drawn from a small set of
//! parametric families (plus a tabulated tail). All functionals are pure
//! and exact for the parametric families; see [`tails`] for the per-side
//! closed forms.

mod spec;
pub(crate) mod tails;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
pub use spec::{parse_model_spec, toml_error, ModelSpec};
pub(crate) use tails::SideTail;
pub use tails::TailTable;

/// Which tail of the Lévy measure to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
    Both,
}

/// Parametric jump measures.
///
/// Tails are right-continuous: a family whose tail is `f(x)` on `(0, x₀)`
/// and zero from `x₀` on carries an atom of mass `f(x₀-)` at `x₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum JumpMeasure {
    None,
    /// `Π̄±(x) = λ± e^{-α± x}`.
    ExponentialTails {
        lambda_plus: f64,
        alpha_plus: f64,
        lambda_minus: f64,
        alpha_minus: f64,
    },
    /// `Π̄±(x) = c± x^{-β±}` for `0 < x < cutoff`, zero beyond.
    ParetoTails {
        c_plus: f64,
        beta_plus: f64,
        c_minus: f64,
        beta_minus: f64,
        cutoff: f64,
    },
    /// Unit atom at `-1`: jumps of a rate-one Poisson process, negated.
    UnitRatePoissonNegative,
    /// `Π̄⁺(x) = 1 / (x log² x)` for `0 < x < e^{-1}`, zero beyond; `Π̄⁻ ≡ 0`.
    LogSquared,
    Table(TailTable),
}

impl JumpMeasure {
    pub fn exponential_plus(lambda: f64, alpha: f64) -> Self {
        JumpMeasure::ExponentialTails {
            lambda_plus: lambda,
            alpha_plus: alpha,
            lambda_minus: 0.0,
            alpha_minus: 1.0,
        }
    }

    pub fn exponential_minus(lambda: f64, alpha: f64) -> Self {
        JumpMeasure::ExponentialTails {
            lambda_plus: 0.0,
            alpha_plus: 1.0,
            lambda_minus: lambda,
            alpha_minus: alpha,
        }
    }

    pub(crate) fn side(&self, plus: bool) -> SideTail<'_> {
        match self {
            JumpMeasure::None => SideTail::Zero,
            JumpMeasure::ExponentialTails {
                lambda_plus,
                alpha_plus,
                lambda_minus,
                alpha_minus,
            } => {
                let (lambda, alpha) = if plus {
                    (*lambda_plus, *alpha_plus)
                } else {
                    (*lambda_minus, *alpha_minus)
                };
                if lambda > 0.0 {
                    SideTail::Exp { lambda, alpha }
                } else {
                    SideTail::Zero
                }
            }
            JumpMeasure::ParetoTails {
                c_plus,
                beta_plus,
                c_minus,
                beta_minus,
                cutoff,
            } => {
                let (c, beta) = if plus {
                    (*c_plus, *beta_plus)
                } else {
                    (*c_minus, *beta_minus)
                };
                if c > 0.0 {
                    SideTail::Pareto {
                        c,
                        beta,
                        cutoff: *cutoff,
                    }
                } else {
                    SideTail::Zero
                }
            }
            JumpMeasure::UnitRatePoissonNegative => {
                if plus {
                    SideTail::Zero
                } else {
                    SideTail::Atom { mass: 1.0, at: 1.0 }
                }
            }
            JumpMeasure::LogSquared => {
                if plus {
                    SideTail::LogSquared
                } else {
                    SideTail::Zero
                }
            }
            JumpMeasure::Table(t) => {
                let side = t.side(plus);
                if side.is_zero() {
                    SideTail::Zero
                } else {
                    SideTail::Table(side)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::domain("levy_model", msg));
        match *self {
            JumpMeasure::ExponentialTails {
                lambda_plus,
                alpha_plus,
                lambda_minus,
                alpha_minus,
            } => {
                for (l, a, s) in [(lambda_plus, alpha_plus, "plus"), (lambda_minus, alpha_minus, "minus")] {
                    if !(l >= 0.0 && l.is_finite()) {
                        return bad(format!("lambda_{s} must be finite and >= 0, got {l}"));
                    }
                    if l > 0.0 && !(a > 0.0 && a.is_finite()) {
                        return bad(format!("alpha_{s} must be finite and > 0, got {a}"));
                    }
                }
                Ok(())
            }
            JumpMeasure::ParetoTails {
                c_plus,
                beta_plus,
                c_minus,
                beta_minus,
                cutoff,
            } => {
                if !(cutoff > 0.0 && cutoff.is_finite()) {
                    return bad(format!("cutoff must be finite and > 0, got {cutoff}"));
                }
                for (c, beta, s) in [(c_plus, beta_plus, "plus"), (c_minus, beta_minus, "minus")] {
                    if !(c >= 0.0 && c.is_finite()) {
                        return bad(format!("c_{s} must be finite and >= 0, got {c}"));
                    }
                    if c > 0.0 && !(beta > 0.0 && beta < 2.0) {
                        return bad(format!("beta_{s} must lie in (0, 2) for ∫ x² Π(dx) < ∞, got {beta}"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// A Lévy process described by its triplet `(γ, σ², Π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyModel {
    gamma: f64,
    sigma2: f64,
    jumps: JumpMeasure,
}

impl LevyModel {
    pub fn new(gamma: f64, sigma2: f64, jumps: JumpMeasure) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::domain(
                "levy_model",
                format!("gamma must be finite, got {gamma}"),
            ));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(
                "levy_model",
                format!("sigma2 must be finite and >= 0, got {sigma2}"),
            ));
        }
        jumps.validate()?;
        Ok(LevyModel { gamma, sigma2, jumps })
    }

    /// Builds a bounded-variation model from its drift `d`, choosing
    /// `γ = d + ∫_{|x|≤1} x Π(dx)`.
    pub fn with_drift(drift: f64, jumps: JumpMeasure) -> Result<Self> {
        jumps.validate()?;
        let cp = jumps.side(true).compensator();
        let cm = jumps.side(false).compensator();
        if !(cp.is_finite() && cm.is_finite()) {
            return Err(Error::domain(
                "levy_model",
                "a drift parametrisation needs a bounded-variation jump measure",
            ));
        }
        LevyModel::new(drift + cp - cm, 0.0, jumps)
    }

    /// `X_t = γ t`.
    pub fn drift_only(gamma: f64) -> Result<Self> {
        LevyModel::new(gamma, 0.0, JumpMeasure::None)
    }

    /// `X_t = a t - N_t` with `N` a rate-one Poisson process.
    pub fn poisson_drift(a: f64) -> Result<Self> {
        LevyModel::with_drift(a, JumpMeasure::UnitRatePoissonNegative)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn jumps(&self) -> &JumpMeasure {
        &self.jumps
    }

    pub(crate) fn plus(&self) -> SideTail<'_> {
        self.jumps.side(true)
    }

    pub(crate) fn minus(&self) -> SideTail<'_> {
        self.jumps.side(false)
    }

    pub fn has_jumps(&self) -> bool {
        !(self.plus().is_zero() && self.minus().is_zero())
    }

    /// Short stable hash of the triplet, used to key experiment outputs.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("model serialises");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }

    /// `Π̄⁺(x)`, `Π̄⁻(x)` or their sum.
    pub fn tail(&self, x: f64, side: Side) -> Result<f64> {
        check_positive("tail", x)?;
        Ok(match side {
            Side::Plus => self.plus().tail(x),
            Side::Minus => self.minus().tail(x),
            Side::Both => self.plus().tail(x) + self.minus().tail(x),
        })
    }

    /// `A(x) = γ + Π̄⁺(1) − Π̄⁻(1) + ∫_1^x (Π̄⁺ − Π̄⁻)`, with `∫_1^x = −∫_x^1` below 1.
    pub fn winsorized_mean(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x <= 0.0 {
            return Err(Error::domain("winsorized_mean", format!("x must be > 0, got {x}")));
        }
        Ok(self.winsorized_mean_unchecked(x))
    }

    pub(crate) fn winsorized_mean_unchecked(&self, x: f64) -> f64 {
        let (p, m) = (self.plus(), self.minus());
        let base = self.gamma + p.tail(1.0) - m.tail(1.0);
        let diff = if x >= 1.0 {
            p.integral(1.0, x) - m.integral(1.0, x)
        } else {
            m.integral(x, 1.0) - p.integral(x, 1.0)
        };
        base + diff
    }

    /// `ν(x) = A(x) − x(Π̄⁺(x) − Π̄⁻(x))`.
    pub fn truncated_mean(&self, x: f64) -> Result<f64> {
        let a = self.winsorized_mean(x)?;
        Ok(a - x * (self.plus().tail(x) - self.minus().tail(x)))
    }

    /// `(U(x), V(x))` with `U(x) = σ² + 2∫_0^x y Π̄(y) dy` and `V = U − x² Π̄(x)`.
    pub fn winsorized_variance(&self, x: f64) -> Result<(f64, f64)> {
        check_positive("winsorized_variance", x)?;
        let u = self.sigma2 + 2.0 * (self.plus().first_moment(x)? + self.minus().first_moment(x)?);
        let tail = self.plus().tail(x) + self.minus().tail(x);
        Ok((u, u - x * x * tail))
    }

    pub fn is_bounded_variation(&self) -> bool {
        self.sigma2 == 0.0
            && self.plus().integral_from_zero(1.0).is_finite()
            && self.minus().integral_from_zero(1.0).is_finite()
    }

    /// Drift `d_X = γ − ∫_{|x|≤1} x Π(dx)` of a bounded-variation model.
    pub fn bv_drift(&self) -> Option<f64> {
        if !self.is_bounded_variation() {
            return None;
        }
        Some(self.gamma - self.plus().compensator() + self.minus().compensator())
    }

    /// `E X₁ = γ + ∫_{|x|>1} x Π(dx)` when finite.
    pub fn mean(&self) -> Option<f64> {
        let mu = self.winsorized_mean_unchecked(f64::INFINITY);
        mu.is_finite().then_some(mu)
    }

    /// Characteristic exponent `Ψ(θ)` with `E e^{iθX_t} = e^{tΨ(θ)}`.
    ///
    /// Bounded-variation models use the drift form `iθd + ∫(e^{iθx} − 1)Π(dx)`.
    pub fn char_exponent(&self, theta: f64) -> Result<Complex64> {
        if !theta.is_finite() {
            return Err(Error::domain(
                "char_exponent",
                format!("theta must be finite, got {theta}"),
            ));
        }
        let i = Complex64::i();
        match self.bv_drift() {
            Some(d) => Ok(i * theta * d
                + self.plus().levy_integral(theta, false)?
                + self.minus().levy_integral(-theta, false)?),
            None => Ok(i * theta * self.gamma - 0.5 * self.sigma2 * theta * theta
                + self.plus().levy_integral(theta, true)?
                + self.minus().levy_integral(-theta, true)?),
        }
    }

    /// Lévy–Khintchine form with the compensated integral, regardless of
    /// variation. Cross-checks [`Self::char_exponent`] on bounded-variation
    /// models.
    pub fn char_exponent_compensated(&self, theta: f64) -> Result<Complex64> {
        let i = Complex64::i();
        Ok(i * theta * self.gamma - 0.5 * self.sigma2 * theta * theta
            + self.plus().levy_integral(theta, true)?
            + self.minus().levy_integral(-theta, true)?)
    }
}

fn check_positive(op: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("x must be > 0, got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn log_squared(gamma: f64) -> LevyModel {
        LevyModel::new(gamma, 0.0, JumpMeasure::LogSquared).unwrap()
    }

    #[test]
    fn tail_examples() {
        let m = log_squared(1.0);
        let x = (-2.0f64).exp();
        assert!((m.tail(x, Side::Plus).unwrap() - E * E / 4.0).abs() < 1e-12);

        let p = LevyModel::poisson_drift(1.0).unwrap();
        assert_eq!(p.tail(0.5, Side::Minus).unwrap(), 1.0);
        assert_eq!(p.tail(1.5, Side::Minus).unwrap(), 0.0);

        let e = LevyModel::new(0.0, 0.0, JumpMeasure::exponential_plus(1.0, 1.0)).unwrap();
        assert!((e.tail(1.0, Side::Both).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_x_is_a_domain_error() {
        let m = log_squared(1.0);
        for x in [0.0, -1.0, f64::NAN] {
            assert!(matches!(m.tail(x, Side::Plus), Err(Error::Domain { .. })));
            assert!(matches!(m.winsorized_mean(x), Err(Error::Domain { .. })));
            assert!(matches!(m.truncated_mean(x), Err(Error::Domain { .. })));
            assert!(matches!(m.winsorized_variance(x), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn winsorized_mean_examples() {
        let x = (-2.0f64).exp();
        assert!((log_squared(1.0).winsorized_mean(x).unwrap() - 0.5).abs() < 1e-14);
        let drift = LevyModel::drift_only(3.0).unwrap();
        for x in [1e-5, 0.3, 1.0, 7.0] {
            assert_eq!(drift.winsorized_mean(x).unwrap(), 3.0);
            assert_eq!(drift.truncated_mean(x).unwrap(), 3.0);
        }
        // symbolic: e^{-1} + ∫_1^2 e^{-y} dy
        let e = LevyModel::new(0.0, 0.0, JumpMeasure::exponential_plus(1.0, 1.0)).unwrap();
        let want = (-1.0f64).exp() + ((-1.0f64).exp() - (-2.0f64).exp());
        assert!((e.winsorized_mean(2.0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn winsorized_mean_log_squared_closed_form() {
        let m = log_squared(0.7);
        for &x in &[1e-9, 1e-4, 0.01, 0.2, INV_E_TEST] {
            let want = 0.7 - 1.0 - 1.0 / x.ln();
            assert!((m.winsorized_mean(x).unwrap() - want).abs() < 1e-13, "x={x}");
        }
    }

    const INV_E_TEST: f64 = 0.367_879_441_171_442_33;

    #[test]
    fn truncated_mean_examples() {
        let x = (-2.0f64).exp();
        assert!((log_squared(1.0).truncated_mean(x).unwrap() - 0.25).abs() < 1e-14);
        let models = [
            log_squared(1.3),
            LevyModel::poisson_drift(2.0).unwrap(),
            LevyModel::new(0.4, 0.0, JumpMeasure::exponential_plus(2.0, 3.0)).unwrap(),
            LevyModel::new(
                -0.2,
                1.0,
                JumpMeasure::ParetoTails {
                    c_plus: 1.0,
                    beta_plus: 1.5,
                    c_minus: 0.5,
                    beta_minus: 0.5,
                    cutoff: 3.0,
                },
            )
            .unwrap(),
        ];
        for m in &models {
            assert!((m.truncated_mean(1.0).unwrap() - m.gamma()).abs() < 1e-14, "{m:?}");
        }
    }

    #[test]
    fn winsorized_variance_examples() {
        let g = LevyModel::new(0.0, 2.0, JumpMeasure::None).unwrap();
        assert_eq!(g.winsorized_variance(5.0).unwrap(), (2.0, 2.0));
        let p = LevyModel::poisson_drift(1.0).unwrap();
        let (u, v) = p.winsorized_variance(0.5).unwrap();
        assert!((u - 0.25).abs() < 1e-15);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn char_exponent_examples() {
        let d = LevyModel::drift_only(2.0).unwrap();
        let z = d.char_exponent(1.0).unwrap();
        assert!((z - Complex64::new(0.0, 2.0)).norm() < 1e-15);

        let p = LevyModel::poisson_drift(1.0).unwrap();
        let z = p.char_exponent(PI).unwrap();
        assert!((z - Complex64::new(-2.0, PI)).norm() < 1e-14, "{z}");

        let g = LevyModel::new(0.0, 1.0, JumpMeasure::None).unwrap();
        let z = g.char_exponent(2.0).unwrap();
        assert!((z - Complex64::new(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn drift_and_compensated_forms_agree() {
        let models = [
            LevyModel::poisson_drift(1.5).unwrap(),
            LevyModel::new(0.3, 0.0, JumpMeasure::exponential_minus(2.0, 0.7)).unwrap(),
            log_squared(1.0),
            LevyModel::new(
                0.1,
                0.0,
                JumpMeasure::ParetoTails {
                    c_plus: 1.0,
                    beta_plus: 0.6,
                    c_minus: 2.0,
                    beta_minus: 0.3,
                    cutoff: 2.5,
                },
            )
            .unwrap(),
        ];
        for m in &models {
            assert!(m.bv_drift().is_some());
            for theta in [-3.0, 0.5, 2.0, 7.0] {
                let a = m.char_exponent(theta).unwrap();
                let b = m.char_exponent_compensated(theta).unwrap();
                assert!((a - b).norm() < 1e-8 * (1.0 + a.norm()), "{m:?} θ={theta}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn exponential_char_exponent_closed_form() {
        // zero drift: Ψ(θ) = ∫(e^{iθy} − 1) 2e^{-2y} dy = iθ / (2 − iθ)
        let m = LevyModel::with_drift(0.0, JumpMeasure::exponential_plus(1.0, 2.0)).unwrap();
        let theta = 1.7;
        let want = Complex64::new(0.0, theta) / Complex64::new(2.0, -theta);
        assert!((m.char_exponent(theta).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn bv_drift_examples() {
        assert!((LevyModel::poisson_drift(1.0).unwrap().bv_drift().unwrap() - 1.0).abs() < 1e-15);
        assert!(LevyModel::new(1.0, 1.0, JumpMeasure::None)
            .unwrap()
            .bv_drift()
            .is_none());
        // γ = 1 and ∫_0^1 x Π(dx) = 1 for the log-squared family
        assert!(log_squared(1.0).bv_drift().unwrap().abs() < 1e-14);
        let pareto = LevyModel::new(
            0.0,
            0.0,
            JumpMeasure::ParetoTails {
                c_plus: 1.0,
                beta_plus: 1.2,
                c_minus: 0.0,
                beta_minus: 1.0,
                cutoff: 1.0,
            },
        )
        .unwrap();
        assert!(pareto.bv_drift().is_none());
    }

    #[test]
    fn mean_examples() {
        assert_eq!(LevyModel::poisson_drift(2.0).unwrap().mean(), Some(1.0));
        let e = LevyModel::new(0.5, 0.0, JumpMeasure::exponential_plus(2.0, 4.0)).unwrap();
        // γ + Π̄⁺(1) + ∫_1^∞ Π̄⁺ = 0.5 + 2e^{-4} + 0.5 e^{-4}
        let want = 0.5 + 2.5 * (-4.0f64).exp();
        assert!((e.mean().unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(LevyModel::new(f64::NAN, 0.0, JumpMeasure::None).is_err());
        assert!(LevyModel::new(0.0, -1.0, JumpMeasure::None).is_err());
        assert!(LevyModel::new(0.0, 0.0, JumpMeasure::exponential_plus(1.0, 0.0)).is_err());
        let bad_beta = JumpMeasure::ParetoTails {
            c_plus: 1.0,
            beta_plus: 2.0,
            c_minus: 0.0,
            beta_minus: 1.0,
            cutoff: 1.0,
        };
        assert!(LevyModel::new(0.0, 0.0, bad_beta).is_err());
        let non_bv = JumpMeasure::ParetoTails {
            c_plus: 1.0,
            beta_plus: 1.5,
            c_minus: 0.0,
            beta_minus: 1.0,
            cutoff: 1.0,
        };
        assert!(LevyModel::with_drift(1.0, non_bv).is_err());
    }

    #[test]
    fn serde_round_trip_preserves_fingerprint() {
        let m = LevyModel::new(
            0.2,
            0.0,
            JumpMeasure::Table(TailTable::new(vec![0.1, 1.0], vec![3.0, 1.0], vec![1.0, 0.0]).unwrap()),
        )
        .unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: LevyModel = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
        assert_eq!(m.fingerprint(), back.fingerprint());
    }

    #[test]
    fn one_sided_table_matches_unit_atom() {
        let table = TailTable::new(vec![1.0], vec![1.0], vec![0.0]).unwrap();
        let m = LevyModel::with_drift(-1.0, JumpMeasure::Table(table)).unwrap();
        assert_eq!(m.minus().mass(), 0.0);
        assert_eq!(m.plus().mass(), 1.0);
        assert_eq!(m.bv_drift(), Some(-1.0));
        assert!(crate::pathsim::JumpSampler::new(&m, 0.0).is_ok());
    }
}
