//! Test-side reference computations, independent of the library's
//! closed forms and quadrature.
#![allow(dead_code)]

use levy_passage::{JumpMeasure, LevyModel, Side, TailTable};

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `∫_a^b f(y) dy` for `0 < a < b`, integrated in `u = ln y` on panels of
/// width at most 0.5, split at `breaks`.
pub fn log_integral(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    if b <= a {
        return 0.0;
    }
    let rule = gauss_legendre(20);
    let mut cuts: Vec<f64> = vec![a.ln()];
    cuts.extend(breaks.iter().filter(|&&x| x > a && x < b).map(|x| x.ln()));
    cuts.push(b.ln());
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let panels = ((w[1] - w[0]) / 0.5).ceil().max(1.0) as usize;
        let width = (w[1] - w[0]) / panels as f64;
        for p in 0..panels {
            let lo = w[0] + p as f64 * width;
            let mid = lo + 0.5 * width;
            for &(x, wt) in &rule {
                let u = mid + 0.5 * width * x;
                let y = u.exp();
                total += 0.5 * width * wt * f(y) * y;
            }
        }
    }
    total
}

/// Points where a family's tail is not smooth.
pub fn breakpoints(model: &LevyModel) -> Vec<f64> {
    match model.jumps() {
        JumpMeasure::ParetoTails { cutoff, .. } => vec![*cutoff, 1.0],
        JumpMeasure::UnitRatePoissonNegative => vec![1.0],
        JumpMeasure::LogSquared => vec![(-2.0f64).exp(), (-1.0f64).exp(), 1.0],
        JumpMeasure::Table(t) => {
            let mut v = t.knots().to_vec();
            v.push(1.0);
            v
        }
        _ => vec![1.0],
    }
}

fn tail(model: &LevyModel, side: Side) -> impl Fn(f64) -> f64 + '_ {
    move |y| model.tail(y, side).unwrap()
}

/// `∫_{(lo, hi]} y Π_side(dy)` by parts from the tail alone.
fn first_moment_between(model: &LevyModel, side: Side, lo: f64, hi: f64) -> f64 {
    let t = tail(model, side);
    lo * t(lo) - hi * t(hi) + log_integral(&t, lo, hi, &breakpoints(model))
}

/// `ν(x) = γ − ∫_{x<|y|≤1} y Π(dy)` for `x < 1`, `γ + ∫_{1<|y|≤x} y Π(dy)` above.
pub fn truncated_mean_ref(model: &LevyModel, x: f64) -> f64 {
    let signed =
        |lo, hi| first_moment_between(model, Side::Plus, lo, hi) - first_moment_between(model, Side::Minus, lo, hi);
    if x < 1.0 {
        model.gamma() - signed(x, 1.0)
    } else {
        model.gamma() + signed(1.0, x)
    }
}

/// `U(x) = σ² + 2 ∫_0^x y Π̄(y) dy`.
pub fn winsorized_variance_ref(model: &LevyModel, x: f64) -> f64 {
    let t = tail(model, Side::Both);
    let f = |y: f64| 2.0 * y * t(y);
    // y² Π̄(y) ~ y^{2-β} is negligible below 1e-150 for the families tested
    model.sigma2() + log_integral(&f, 1e-150, x, &breakpoints(model))
}

/// One model per built-in jump family, plus a Gaussian one.
pub fn family_zoo() -> Vec<(&'static str, LevyModel)> {
    vec![
        ("gaussian", LevyModel::new(0.7, 1.3, JumpMeasure::None).unwrap()),
        (
            "exponential",
            LevyModel::new(
                0.3,
                0.5,
                JumpMeasure::ExponentialTails {
                    lambda_plus: 2.0,
                    alpha_plus: 1.5,
                    lambda_minus: 0.7,
                    alpha_minus: 3.0,
                },
            )
            .unwrap(),
        ),
        (
            "pareto",
            LevyModel::new(
                -0.4,
                0.0,
                JumpMeasure::ParetoTails {
                    c_plus: 1.0,
                    beta_plus: 0.5,
                    c_minus: 0.3,
                    beta_minus: 1.5,
                    cutoff: 5.0,
                },
            )
            .unwrap(),
        ),
        ("poisson_negative", LevyModel::poisson_drift(1.0).unwrap()),
        (
            "log_squared",
            LevyModel::new(1.0, 0.0, JumpMeasure::LogSquared).unwrap(),
        ),
        (
            "table",
            LevyModel::new(
                0.2,
                0.0,
                JumpMeasure::Table(
                    TailTable::new(vec![0.5, 1.0, 2.0], vec![2.0, 1.0, 0.3], vec![1.0, 0.5, 0.0]).unwrap(),
                ),
            )
            .unwrap(),
        ),
    ]
}

pub fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}
