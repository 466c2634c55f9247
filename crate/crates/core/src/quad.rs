//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used for the few functionals without a closed form (the variance
//! functional of the log-squared family and the characteristic exponent
//! of infinite-activity families). Subintervals with the largest error
//! estimate are bisected until the global estimate meets
//! `max(abs, rel * |value|)`.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-10,
            abs: 1e-14,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
    pub evaluations: usize,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integrate", format!("non-finite limits [{a}, {b}]")));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let (v, e) = kronrod(&f, lo, hi);
    let mut parts = vec![(lo, hi, v, e)];
    let mut evaluations = 15;
    loop {
        let value: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if !value.is_finite() {
            return Err(Error::numerical(
                "integrate",
                format!("non-finite integrand on [{lo}, {hi}] after {evaluations} evaluations"),
            ));
        }
        if err <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(Quadrature {
                value: sign * value,
                abs_error: err,
                intervals: parts.len(),
                evaluations,
            });
        }
        if parts.len() >= tol.max_intervals {
            return Err(Error::numerical(
                "integrate",
                format!(
                    "no convergence on [{lo}, {hi}]: estimate {value:e}, error {err:e}, \
                     {} intervals, {evaluations} evaluations",
                    parts.len()
                ),
            ));
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (a0, b0, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (a0 + b0);
        if mid <= a0 || mid >= b0 {
            return Err(Error::numerical(
                "integrate",
                format!("interval [{a0}, {b0}] cannot be split further; estimate {value:e}, error {err:e}"),
            ));
        }
        let (v1, e1) = kronrod(&f, a0, mid);
        let (v2, e2) = kronrod(&f, mid, b0);
        evaluations += 30;
        parts.push((a0, mid, v1, e1));
        parts.push((mid, b0, v2, e2));
    }
}

/// Integrates `f` over `[a, ∞)` through the map `u = a + s / (1 - s)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Result<Quadrature> {
    let g = |s: f64| {
        let one_minus = 1.0 - s;
        let u = a + s / one_minus;
        let v = f(u);
        if v == 0.0 {
            0.0
        } else {
            v / (one_minus * one_minus)
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| 3.0 * x * x + 1.0, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((q.value - 10.0).abs() < 1e-13);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = integrate(|x| x.exp(), 1.0, 0.0, Tolerance::default()).unwrap();
        assert!((q.value + (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let q = integrate(|x| x.powf(-0.5), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((q.value - 2.0).abs() < 1e-8, "{q:?}");
    }

    #[test]
    fn semi_infinite() {
        let q = integrate_to_infinity(|u| (-u).exp(), 2.0, Tolerance::default()).unwrap();
        assert!((q.value - (-2f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn non_convergence_reports_diagnostics() {
        let tol = Tolerance {
            rel: 1e-15,
            abs: 0.0,
            max_intervals: 4,
        };
        let err = integrate(|x| (1.0 / x).sin(), 1e-6, 1.0, tol).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
        assert!(err.to_string().contains("intervals"));
    }
}
