//! Uniform-in-time path probes.
//!
//! With `Y_t(λ) = s·X_{λt} / B(t)` (`s` the sign of `A(B(t))`), the
//! sup-deviation probe estimates
//! `P(sup_{η≤λ≤T} |λ^{-b} Y_t(λ) − λ^{1-b}| > δ)` for each `t`. Between jumps
//! `Y_t` is affine, so the sup over each piece is taken at its ends or the
//! single interior critical point.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{stats, with_workers};
use crate::error::{Error, Result};
use crate::model::LevyModel;
use crate::pathsim::{Jump, JumpSampler};
use crate::rng::path_rng;
use crate::stability::solve_norming_b;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupProbeSettings {
    pub b: f64,
    pub t_grid: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub eta: f64,
    pub t_upper: f64,
    pub delta: f64,
    pub cutoff_h: f64,
    /// Evaluate on a uniform grid of this many steps over `[0, T t]`
    /// instead of the exact skeleton. Required when `σ² > 0`.
    pub euler_steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupProbeRow {
    pub t: f64,
    pub b_t: f64,
    pub exceedance: f64,
    pub stderr: f64,
}

/// `sup_{λ∈[l0,l1]} |a λ^{-b} + c λ^{1-b}|`.
fn piece_sup(a: f64, c: f64, b: f64, l0: f64, l1: f64) -> f64 {
    let f = |l: f64| (a * l.powf(-b) + c * l.powf(1.0 - b)).abs();
    let mut best = f(l0).max(f(l1));
    if b > 0.0 && c != 0.0 {
        let crit = b * a / ((1.0 - b) * c);
        if crit > l0 && crit < l1 {
            best = best.max(f(crit));
        }
    }
    best
}

/// Exact sup-deviation of one skeleton path (drift `slope`, jumps in
/// original time) scaled by `t`, `B(t)` and sign `s`.
#[allow(clippy::too_many_arguments)]
fn skeleton_deviation(jumps: &[Jump], slope: f64, t: f64, bt: f64, s: f64, b: f64, eta: f64, upper: f64) -> f64 {
    // Y(λ) = s(slope·λt + J)/B = a' + kλ on each piece; deviation
    // λ^{-b}(a' + kλ) − λ^{1-b} = a'λ^{-b} + (k−1)λ^{1-b}
    let k = s * slope * t / bt;
    let mut level = 0.0;
    let mut start = eta;
    let mut sup = 0.0_f64;
    for j in jumps {
        let lj = j.time / t;
        if lj > upper {
            break;
        }
        if lj > start {
            sup = sup.max(piece_sup(s * level / bt, k - 1.0, b, start, lj));
            start = lj;
        }
        level += j.size;
    }
    sup.max(piece_sup(s * level / bt, k - 1.0, b, start, upper))
}

fn sign_at(model: &LevyModel, bt: f64) -> Result<f64> {
    let a = model.winsorized_mean(bt)?;
    Ok(if a < 0.0 { -1.0 } else { 1.0 })
}

fn check(settings: &SupProbeSettings) -> Result<()> {
    let s = settings;
    if !(0.0..1.0).contains(&s.b) {
        return Err(Error::domain(
            "skorohod_sup_probe",
            format!("b must lie in [0, 1), got {}", s.b),
        ));
    }
    if !(s.eta > 0.0 && s.t_upper > s.eta && s.t_upper.is_finite()) {
        return Err(Error::domain("skorohod_sup_probe", "need 0 < eta < T_upper < ∞"));
    }
    if !(s.delta > 0.0) || s.n_paths == 0 || s.t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::domain(
            "skorohod_sup_probe",
            "need delta > 0, n_paths > 0 and finite positive t values",
        ));
    }
    if s.euler_steps == Some(0) {
        return Err(Error::domain("skorohod_sup_probe", "euler_steps must be positive"));
    }
    Ok(())
}

/// Per-`t` fraction of paths whose normalised sup-deviation exceeds `δ`.
pub fn skorohod_sup_probe(model: &LevyModel, settings: &SupProbeSettings, workers: usize) -> Result<Vec<SupProbeRow>> {
    check(settings)?;
    let s = settings;
    let sigma = model.sigma2().sqrt();
    if sigma > 0.0 && s.euler_steps.is_none() {
        return Err(Error::contract(
            "skorohod_sup_probe",
            "a Gaussian component needs the Euler-grid diagnostic mode (set euler_steps)",
        ));
    }
    // jumps are drawn from the model without its Gaussian part
    let jump_model = LevyModel::new(model.gamma(), 0.0, model.jumps().clone())?;
    let sampler = JumpSampler::new(&jump_model, s.cutoff_h)?;
    let slope = sampler.drift_slope();
    let mut rows = Vec::with_capacity(s.t_grid.len());
    for &t in &s.t_grid {
        let bt = solve_norming_b(model, t)?;
        let sign = sign_at(model, bt)?;
        let span = s.t_upper * t;
        let exceed: Vec<bool> = with_workers(workers, || {
            (0..s.n_paths as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = path_rng(s.seed, i);
                    let jumps: Vec<Jump> = sampler.stream(&mut rng).take_while(|j| j.time <= span).collect();
                    let dev = match s.euler_steps {
                        None => skeleton_deviation(&jumps, slope, t, bt, sign, s.b, s.eta, s.t_upper),
                        Some(m) => euler_deviation(&jumps, slope, sigma, &mut rng, t, bt, sign, s, m),
                    };
                    dev > s.delta
                })
                .collect()
        })?;
        let frac = exceed.iter().filter(|&&e| e).count() as f64 / s.n_paths as f64;
        rows.push(SupProbeRow {
            t,
            b_t: bt,
            exceedance: frac,
            stderr: stats::fraction_stderr(frac, s.n_paths),
        });
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn euler_deviation(
    jumps: &[Jump],
    slope: f64,
    sigma: f64,
    rng: &mut crate::rng::PathRng,
    t: f64,
    bt: f64,
    sign: f64,
    s: &SupProbeSettings,
    steps: usize,
) -> f64 {
    let dl = s.t_upper / steps as f64;
    let sd = sigma * (dl * t).sqrt();
    let mut w = 0.0;
    let mut next = 0;
    let mut jsum = 0.0;
    let mut sup = 0.0_f64;
    for i in 1..=steps {
        let l = i as f64 * dl;
        let z: f64 = rng.sample(StandardNormal);
        w += sd * z;
        while next < jumps.len() && jumps[next].time <= l * t {
            jsum += jumps[next].size;
            next += 1;
        }
        if l >= s.eta {
            let y = sign * (slope * l * t + jsum + w) / bt;
            sup = sup.max((l.powf(-s.b) * y - l.powf(1.0 - s.b)).abs());
        }
    }
    sup
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferRow {
    pub t: f64,
    pub b_t: f64,
    /// Fraction with `|s X_t / B(t) − 1| > δ`.
    pub dev_value: f64,
    /// Fraction with `|sup_{u≤t} s X_u / B(t) − 1| > δ`.
    pub dev_sup: f64,
}

/// Compares how fast `X_t/B(t)` and its running maximum concentrate at 1.
pub fn sup_transfer_probe(
    model: &LevyModel,
    t_grid: &[f64],
    n_paths: usize,
    seed: u64,
    delta: f64,
    cutoff_h: f64,
    workers: usize,
) -> Result<Vec<TransferRow>> {
    if n_paths == 0 || !(delta > 0.0) {
        return Err(Error::domain("sup_transfer_probe", "need n_paths > 0 and delta > 0"));
    }
    let sampler = JumpSampler::new(model, cutoff_h)?;
    let slope = sampler.drift_slope();
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let bt = solve_norming_b(model, t)?;
        let sign = sign_at(model, bt)?;
        let pairs: Vec<(f64, f64)> = with_workers(workers, || {
            (0..n_paths as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = path_rng(seed, i);
                    let (mut x, mut at, mut best) = (0.0_f64, 0.0_f64, 0.0_f64);
                    for j in sampler.stream(&mut rng).take_while(|j| j.time <= t) {
                        x += slope * (j.time - at);
                        best = best.max(sign * x);
                        x += j.size;
                        best = best.max(sign * x);
                        at = j.time;
                    }
                    x += slope * (t - at);
                    (sign * x / bt, best.max(sign * x) / bt)
                })
                .collect()
        })?;
        let n = n_paths as f64;
        let frac = |f: fn(&(f64, f64)) -> f64| pairs.iter().filter(|p| (f(p) - 1.0).abs() > delta).count() as f64 / n;
        rows.push(TransferRow {
            t,
            b_t: bt,
            dev_value: frac(|p| p.0),
            dev_sup: frac(|p| p.1),
        });
    }
    Ok(rows)
}
