//! Relative-stability classification and the norming functions `B`, `C`.
//!
//! In probability, a model is relatively stable (small or large time) when
//! `A(x) / (x Π̄(x))` diverges to `±∞` (with `σ² = 0` at small times); the
//! sign picks PRS or NRS. A finite probe cannot see a limit, so
//! [`classify`] evaluates the ratio on a fixed geometric grid and applies
//! the decision rule documented on [`decide`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{JumpMeasure, LevyModel, Side};
use crate::roots::bisect_log;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SmallTime,
    LargeTime,
}

/// Relative stability in probability. Two-sided relative stability
/// coincides with PRS-or-NRS, so it is reported as a flag rather than a
/// separate class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbClass {
    #[serde(rename = "PRS")]
    Prs,
    #[serde(rename = "NRS")]
    Nrs,
    #[serde(rename = "none")]
    None,
    #[serde(rename = "unknown")]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsClass {
    Stable,
    NotStable,
    Unknown,
}

/// One probe evaluation; `ratio` is `±∞` where `Π̄(x) = 0` (serialised as
/// `null` in JSON).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub x: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub regime: Regime,
    pub class_in_probability: ProbClass,
    pub two_sided_rs: bool,
    pub class_almost_sure: AsClass,
    pub certificate: String,
    pub probe: Vec<ProbePoint>,
    pub diagnostic: Option<String>,
}

/// Magnitude at which the probe counts as divergent outright.
pub const DIVERGENCE_THRESHOLD: f64 = 1e3;
/// Growth factor between the `10^{∓10}` and deepest probe points that
/// counts as (slow) divergence.
pub const SLOW_GROWTH_FACTOR: f64 = 1.5;

/// Probe exponents: `k = 1..=10`, then `20, 30, ..., 300`.
pub fn probe_exponents() -> Vec<i32> {
    (1..=10).chain((2..=30).map(|j| 10 * j)).collect()
}

fn probe_points(model: &LevyModel, regime: Regime) -> Vec<ProbePoint> {
    probe_exponents()
        .into_iter()
        .map(|k| {
            let x = match regime {
                Regime::SmallTime => 10f64.powi(-k),
                Regime::LargeTime => 10f64.powi(k),
            };
            let a = model.winsorized_mean_unchecked(x);
            let tail = model.tail(x, Side::Both).expect("x > 0");
            let ratio = if tail > 0.0 {
                a / (x * tail)
            } else if a == 0.0 {
                0.0
            } else {
                a.signum() * f64::INFINITY
            };
            ProbePoint { x, ratio }
        })
        .collect()
}

/// Decision rule on probe values (grid order, i.e. `|log x|` increasing).
///
/// Over the points with `k >= 6` the ratio must keep one sign and its
/// magnitude must be nondecreasing; it then counts as divergent if the
/// deepest value reaches [`DIVERGENCE_THRESHOLD`] or exceeds the `k = 10`
/// value by [`SLOW_GROWTH_FACTOR`]. Logarithmic divergence cannot reach
/// `10³` inside double precision, hence the second branch. A ratio that
/// stays below the threshold without that growth is bounded (`None`);
/// anything else is `Unknown`.
pub fn decide(values: &[f64]) -> ProbClass {
    let tail = &values[5..];
    let mags: Vec<f64> = tail.iter().map(|v| v.abs()).collect();
    let last = *mags.last().expect("probe grid is non-empty");
    let mid = mags[4];
    let positive = tail.iter().all(|&v| v > 0.0);
    let negative = tail.iter().all(|&v| v < 0.0);
    let monotone = mags.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    let growing = last >= DIVERGENCE_THRESHOLD || (last > 0.0 && last >= SLOW_GROWTH_FACTOR * mid);
    if (positive || negative) && monotone && growing {
        return if positive { ProbClass::Prs } else { ProbClass::Nrs };
    }
    let max = mags.iter().cloned().fold(0.0, f64::max);
    if max < DIVERGENCE_THRESHOLD && !growing {
        ProbClass::None
    } else {
        ProbClass::Unknown
    }
}

/// Classifies relative stability of `model` in `regime`.
pub fn classify(model: &LevyModel, regime: Regime) -> StabilityReport {
    let probe = probe_points(model, regime);
    let (as_class, certificate, as_sign) = almost_sure(model, regime);
    let mut diagnostic = None;

    let mut class = if regime == Regime::SmallTime && model.sigma2() > 0.0 {
        ProbClass::None
    } else if !model.has_jumps() {
        match model.gamma() {
            g if g > 0.0 => ProbClass::Prs,
            g if g < 0.0 => ProbClass::Nrs,
            _ => ProbClass::None,
        }
    } else {
        let values: Vec<f64> = probe.iter().map(|p| p.ratio).collect();
        decide(&values)
    };

    if let (JumpMeasure::Table(t), Regime::SmallTime) = (model.jumps(), regime) {
        let first = t.knots()[0];
        if first > 1e-6 && model.sigma2() == 0.0 {
            diagnostic = Some(format!(
                "table starts at x = {first:e}; the probe below 1e-6 only sees the power-law extrapolation"
            ));
            class = ProbClass::Unknown;
        }
    }

    // An a.s. certificate is exact and implies stability in probability.
    if as_class == AsClass::Stable && !matches!(class, ProbClass::Prs | ProbClass::Nrs) {
        class = if as_sign > 0.0 { ProbClass::Prs } else { ProbClass::Nrs };
        let note = "probe inconclusive; class taken from the almost-sure certificate".to_string();
        diagnostic = Some(match diagnostic {
            Some(d) => format!("{d}; {note}"),
            None => note,
        });
    }

    StabilityReport {
        regime,
        class_in_probability: class,
        two_sided_rs: matches!(class, ProbClass::Prs | ProbClass::Nrs),
        class_almost_sure: as_class,
        certificate,
        probe,
        diagnostic,
    }
}

fn almost_sure(model: &LevyModel, regime: Regime) -> (AsClass, String, f64) {
    match regime {
        Regime::SmallTime => {
            if model.sigma2() > 0.0 {
                return (AsClass::NotStable, format!("sigma2 = {} > 0", model.sigma2()), 0.0);
            }
            match model.bv_drift() {
                Some(d) if d > 0.0 => (AsClass::Stable, format!("bounded variation, d_X = {d} > 0"), 1.0),
                Some(d) if d < 0.0 => (AsClass::Stable, format!("bounded variation, d_X = {d} < 0"), -1.0),
                Some(_) => (AsClass::NotStable, "bounded variation, d_X = 0".into(), 0.0),
                None => (AsClass::NotStable, "unbounded variation".into(), 0.0),
            }
        }
        Regime::LargeTime => match model.mean() {
            Some(mu) if mu > 0.0 => (AsClass::Stable, format!("E|X_1| < inf, mu = {mu} > 0"), 1.0),
            Some(mu) if mu < 0.0 => (AsClass::Stable, format!("E|X_1| < inf, mu = {mu} < 0"), -1.0),
            Some(_) => (AsClass::NotStable, "E|X_1| < inf, mu = 0".into(), 0.0),
            None => (AsClass::NotStable, "E|X_1| = inf".into(), 0.0),
        },
    }
}

/// Solves `B = t |A(B)|`: damped fixed-point iteration from `t |A(t)|`,
/// falling back to bisection on `φ(B) = B − t|A(B)|` over `[1e-300, 1e6 t]`.
pub fn solve_norming_b(model: &LevyModel, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(
            "solve_norming_b",
            format!("t must be finite and > 0, got {t}"),
        ));
    }
    let map = |b: f64| t * model.winsorized_mean_unchecked(b).abs();
    let mut trace = Vec::new();
    let mut b = map(t);
    if b > 0.0 && b.is_finite() {
        trace.push(b);
        for _ in 0..400 {
            let next = 0.5 * b + 0.5 * map(b);
            if !(next > 0.0 && next.is_finite()) {
                break;
            }
            if trace.len() < 64 {
                trace.push(next);
            }
            if (next - b).abs() <= 1e-15 * next {
                return Ok(next);
            }
            b = next;
        }
    }
    let phi = |b: f64| b - map(b);
    bisect_log("solve_norming_b", phi, 1e-300, 1e6 * t, 1e-14).map_err(|e| match e {
        Error::Solver { msg, trace: bt, .. } => Error::Solver {
            op: "solve_norming_b",
            msg: format!("fixed point did not converge and {msg}"),
            trace: trace.into_iter().chain(bt).collect(),
        },
        other => other,
    })
}

/// How `B` (and hence `C`) is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormingRule {
    /// Numerical fixed point of `B = t|A(B)|`.
    Solver,
    /// `B(t) = |d_X| t` for a bounded-variation model with nonzero drift.
    DriftClosedForm,
    /// `B(t) = |μ| t` for a model with finite nonzero mean.
    MeanClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub t: f64,
    pub b_t: f64,
    /// `B(t) / t^b`, i.e. the `r` with `C(r) = t`.
    pub r: f64,
}

/// `B(t)` and its inverse `C(r)` of `t ↦ B(t)/t^b` for fixed `b` and regime.
#[derive(Debug, Clone)]
pub struct NormingPair {
    model: LevyModel,
    b: f64,
    regime: Regime,
    rule: NormingRule,
    scale: f64,
    grid: Vec<GridPoint>,
}

const GRID_DECADES: i32 = 12;
const GRID_PER_DECADE: i32 = 4;

impl NormingPair {
    pub fn new(model: &LevyModel, b: f64, regime: Regime, rule: NormingRule) -> Result<Self> {
        if !(0.0..1.0).contains(&b) {
            return Err(Error::domain("norming", format!("b must lie in [0, 1), got {b}")));
        }
        let scale = match rule {
            NormingRule::Solver => f64::NAN,
            NormingRule::DriftClosedForm => match model.bv_drift() {
                Some(d) if d != 0.0 => d.abs(),
                _ => {
                    return Err(Error::contract(
                        "norming",
                        "drift closed form needs bounded variation with d_X != 0",
                    ))
                }
            },
            NormingRule::MeanClosedForm => match model.mean() {
                Some(mu) if mu != 0.0 => mu.abs(),
                _ => {
                    return Err(Error::contract(
                        "norming",
                        "mean closed form needs a finite nonzero mean",
                    ))
                }
            },
        };
        let mut pair = NormingPair {
            model: model.clone(),
            b,
            regime,
            rule,
            scale,
            grid: Vec::new(),
        };
        let n = GRID_DECADES * GRID_PER_DECADE;
        for j in 0..=n {
            let e = f64::from(j) / f64::from(GRID_PER_DECADE);
            let t = match regime {
                Regime::SmallTime => 10f64.powf(-e),
                Regime::LargeTime => 10f64.powf(e),
            };
            let b_t = pair.b_of(t)?;
            pair.grid.push(GridPoint {
                t,
                b_t,
                r: b_t / t.powf(b),
            });
        }
        pair.grid.sort_by(|x, y| x.t.total_cmp(&y.t));
        if let Some(w) = pair.grid.windows(2).find(|w| w[1].r <= w[0].r) {
            return Err(Error::Solver {
                op: "norming",
                msg: "B(t)/t^b is not strictly increasing on the grid".into(),
                trace: vec![w[0].t, w[0].r, w[1].t, w[1].r],
            });
        }
        Ok(pair)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn rule(&self) -> NormingRule {
        self.rule
    }

    /// Cached `(t, B(t), B(t)/t^b)` grid, `t` ascending.
    pub fn grid(&self) -> &[GridPoint] {
        &self.grid
    }

    /// `B(t)`.
    pub fn b_of(&self, t: f64) -> Result<f64> {
        match self.rule {
            NormingRule::Solver => solve_norming_b(&self.model, t),
            _ => {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::domain("norming", format!("t must be finite and > 0, got {t}")));
                }
                Ok(self.scale * t)
            }
        }
    }

    fn t_range(&self) -> (f64, f64) {
        match self.regime {
            Regime::SmallTime => (1e-250, 1e3),
            Regime::LargeTime => (1e-3, 1e250),
        }
    }

    /// `C(r)`: the `t` with `B(t)/t^b = r`.
    pub fn c_of(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain("invert_c", format!("r must be finite and > 0, got {r}")));
        }
        if self.rule != NormingRule::Solver {
            return Ok((r / self.scale).powf(1.0 / (1.0 - self.b)));
        }
        let ratio = |t: f64| -> f64 {
            match self.b_of(t) {
                Ok(bt) => bt / t.powf(self.b) - r,
                Err(_) => f64::NAN,
            }
        };
        let i = self.grid.partition_point(|g| g.r < r);
        let (lo, hi) = if i > 0 && i < self.grid.len() {
            (self.grid[i - 1].t, self.grid[i].t)
        } else {
            let (lo, hi) = self.t_range();
            let r_lo = ratio(lo) + r;
            let r_hi = ratio(hi) + r;
            if !(r >= r_lo && r <= r_hi) {
                return Err(Error::Range {
                    op: "invert_c",
                    value: r,
                    lo: r_lo,
                    hi: r_hi,
                });
            }
            if i == 0 {
                (lo, self.grid[0].t)
            } else {
                (self.grid[self.grid.len() - 1].t, hi)
            }
        };
        if r == self.grid.get(i).map_or(f64::NAN, |g| g.r) {
            return Ok(self.grid[i].t);
        }
        bisect_log("invert_c", ratio, lo, hi, 1e-13)
    }
}

/// Least-squares slope of `log f` against `log x`.
pub fn rv_index_estimate(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 5 {
        return Err(Error::domain(
            "rv_index_estimate",
            format!("need at least 5 points, got {}", samples.len()),
        ));
    }
    if let Some(&(x, y)) = samples.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::domain(
            "rv_index_estimate",
            format!("points must be positive, got ({x}, {y})"),
        ));
    }
    let n = samples.len() as f64;
    let (mx, my) = samples
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln() / n, b + y.ln() / n));
    let (sxy, sxx) = samples.iter().fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        let dx = x.ln() - mx;
        (sxy + dx * (y.ln() - my), sxx + dx * dx)
    });
    if sxx == 0.0 {
        return Err(Error::domain("rv_index_estimate", "all x values coincide"));
    }
    Ok(sxy / sxx)
}

/// `g(x) = ((1+x)^b − 1) / x^b`, strictly increasing from 0 to 1 on `(0, ∞)`.
pub fn g_func(b: f64, x: f64) -> Result<f64> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::domain("g_func", format!("b must lie in (0, 1), got {b}")));
    }
    if !(x > 0.0) {
        return Err(Error::domain("g_func", format!("x must be > 0, got {x}")));
    }
    Ok(g_unchecked(b, x))
}

fn g_unchecked(b: f64, x: f64) -> f64 {
    if x.is_infinite() {
        return 1.0;
    }
    // (1+x)^b − 1 = expm1(b log1p x); divide in log space to avoid overflow
    (b * x.ln_1p()).exp_m1() * (-b * x.ln()).exp()
}

/// `c(α) = g⁻¹(α)`.
pub fn c_alpha(b: f64, alpha: f64) -> Result<f64> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::domain("c_alpha", format!("b must lie in (0, 1), got {b}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(
            "c_alpha",
            format!("alpha must lie in (0, 1), got {alpha}"),
        ));
    }
    let g = |x: f64| g_unchecked(b, x) - alpha;
    let (mut lo, mut hi) = (1.0_f64, 1.0_f64);
    let mut trace = Vec::new();
    while g(hi) < 0.0 {
        hi *= 2.0;
        trace.push(hi);
        if hi > 1e12 {
            return Err(Error::Solver {
                op: "c_alpha",
                msg: format!("bracket grew past 1e12 without reaching g = {alpha}"),
                trace,
            });
        }
    }
    while g(lo) > 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Solver {
                op: "c_alpha",
                msg: format!("bracket shrank below 1e-300 without reaching g = {alpha}"),
                trace: vec![lo],
            });
        }
    }
    bisect_log("c_alpha", g, lo, hi.max(lo * 2.0), 1e-15)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_squared() -> LevyModel {
        LevyModel::new(1.0, 0.0, JumpMeasure::LogSquared).unwrap()
    }

    #[test]
    fn drift_only_classification() {
        let up = classify(&LevyModel::drift_only(1.0).unwrap(), Regime::SmallTime);
        assert_eq!(up.class_in_probability, ProbClass::Prs);
        assert_eq!(up.class_almost_sure, AsClass::Stable);
        let down = classify(&LevyModel::drift_only(-1.0).unwrap(), Regime::LargeTime);
        assert_eq!(down.class_in_probability, ProbClass::Nrs);
        let zero = classify(&LevyModel::drift_only(0.0).unwrap(), Regime::SmallTime);
        assert_eq!(zero.class_in_probability, ProbClass::None);
    }

    #[test]
    fn gaussian_component_rules_out_small_time_stability() {
        let m = LevyModel::new(1.0, 1.0, JumpMeasure::exponential_plus(1.0, 1.0)).unwrap();
        let r = classify(&m, Regime::SmallTime);
        assert_eq!(r.class_in_probability, ProbClass::None);
        assert!(!r.two_sided_rs);
        assert_eq!(r.class_almost_sure, AsClass::NotStable);
    }

    #[test]
    fn log_squared_is_prs_but_not_as_stable() {
        let r = classify(&log_squared(), Regime::SmallTime);
        assert_eq!(r.class_in_probability, ProbClass::Prs);
        assert_eq!(r.class_almost_sure, AsClass::NotStable);
        for p in &r.probe {
            assert!((p.ratio - p.x.ln().abs()).abs() < 1e-9 * p.ratio, "{p:?}");
        }
    }

    #[test]
    fn symmetric_cauchy_like_is_not_rs() {
        let m = LevyModel::new(
            0.0,
            0.0,
            JumpMeasure::ParetoTails {
                c_plus: 1.0,
                beta_plus: 1.5,
                c_minus: 1.0,
                beta_minus: 1.5,
                cutoff: 1.0,
            },
        )
        .unwrap();
        assert_eq!(classify(&m, Regime::SmallTime).class_in_probability, ProbClass::None);
    }

    #[test]
    fn poisson_drift_classes() {
        let m = LevyModel::poisson_drift(1.0).unwrap();
        let small = classify(&m, Regime::SmallTime);
        assert_eq!(small.class_in_probability, ProbClass::Prs);
        assert_eq!(small.class_almost_sure, AsClass::Stable);
        let m = LevyModel::poisson_drift(0.5).unwrap();
        let large = classify(&m, Regime::LargeTime);
        assert_eq!(large.class_in_probability, ProbClass::Nrs);
        assert_eq!(large.class_almost_sure, AsClass::Stable);
    }

    #[test]
    fn norming_b_examples() {
        let m = LevyModel::drift_only(2.0).unwrap();
        for t in [1e-8, 1e-3, 0.5] {
            assert_eq!(solve_norming_b(&m, t).unwrap(), 2.0 * t);
        }
        let p = LevyModel::poisson_drift(1.0).unwrap();
        let t = 1e-6;
        let b = solve_norming_b(&p, t).unwrap();
        let a = p.winsorized_mean(b).unwrap();
        assert!((b - t * a.abs()).abs() <= 1e-10 * b);
        assert!((b / t - 1.0).abs() < 1e-5);
    }

    #[test]
    fn c_closed_forms() {
        let m = LevyModel::drift_only(1.0).unwrap();
        let pair = NormingPair::new(&m, 0.5, Regime::SmallTime, NormingRule::Solver).unwrap();
        assert!((pair.c_of(0.01).unwrap() / 1e-4 - 1.0).abs() < 1e-10);
        let m = LevyModel::drift_only(2.0).unwrap();
        let pair = NormingPair::new(&m, 0.0, Regime::SmallTime, NormingRule::Solver).unwrap();
        assert!((pair.c_of(0.3).unwrap() / 0.15 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn c_round_trip_on_grid() {
        for model in [log_squared(), LevyModel::poisson_drift(1.0).unwrap()] {
            for b in [0.0, 0.5] {
                let pair = NormingPair::new(&model, b, Regime::SmallTime, NormingRule::Solver).unwrap();
                for g in pair.grid() {
                    let t = pair.c_of(g.r).unwrap();
                    assert!((t - g.t).abs() <= 1e-8 * g.t, "b={b} t={} back={t}", g.t);
                }
            }
        }
    }

    #[test]
    fn c_out_of_range_is_range_error() {
        let m = LevyModel::drift_only(1.0).unwrap();
        let pair = NormingPair::new(&m, 0.5, Regime::SmallTime, NormingRule::Solver).unwrap();
        assert!(matches!(pair.c_of(1e10), Err(Error::Range { .. })));
    }

    #[test]
    fn closed_form_rules_require_their_certificate() {
        let g = LevyModel::new(0.0, 1.0, JumpMeasure::None).unwrap();
        assert!(matches!(
            NormingPair::new(&g, 0.0, Regime::SmallTime, NormingRule::DriftClosedForm),
            Err(Error::Contract { .. })
        ));
        let m = LevyModel::poisson_drift(2.0).unwrap();
        let pair = NormingPair::new(&m, 0.0, Regime::LargeTime, NormingRule::MeanClosedForm).unwrap();
        assert_eq!(pair.c_of(1e3).unwrap(), 1e3);
    }

    #[test]
    fn rv_index_of_power_law() {
        let s: Vec<(f64, f64)> = (0..8).map(|k| 10f64.powi(-k)).map(|x| (x, x * x)).collect();
        assert!((rv_index_estimate(&s).unwrap() - 2.0).abs() < 1e-9);
        assert!(rv_index_estimate(&s[..4]).is_err());
        let mut bad = s.clone();
        bad[2].1 = 0.0;
        assert!(matches!(rv_index_estimate(&bad), Err(Error::Domain { .. })));
    }

    #[test]
    fn g_examples() {
        assert!((g_func(0.5, 1.0).unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let c = c_alpha(0.5, 2f64.sqrt() - 1.0).unwrap();
        assert!((c - 1.0).abs() < 1e-10);
        assert!(g_func(1.0, 1.0).is_err());
        assert!(g_func(0.5, 0.0).is_err());
    }

    #[test]
    fn c_alpha_bracket_limit() {
        // g(1e12) < 0.99 for b = 0.1, so the bracket must give up
        assert!(matches!(c_alpha(0.1, 0.99), Err(Error::Solver { .. })));
    }
}
