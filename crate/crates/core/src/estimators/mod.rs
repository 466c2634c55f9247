//! Monte-Carlo estimators for passage-time limit statements.
//!
//! [`passage_sweep`] simulates `n_paths` paths per boundary level `r` and
//! summarises `T/C(r)`, the overshoot, the one/two-sided equality and any
//! requested truncated moments. Path `i` always uses stream `i` of the
//! seed, at every `r`, so the levels share common random numbers and the
//! output does not depend on the worker count.

mod output;
mod probes;
pub mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LevyModel;
use crate::pathsim::{scan, Boundary, JumpSampler, Passage, Sided};
use crate::rng::path_rng;
use crate::stability::{NormingPair, NormingRule, Regime};
pub use output::{long_csv, wide_csv, wide_csv_header};
pub use probes::{skorohod_sup_probe, sup_transfer_probe, SupProbeRow, SupProbeSettings, TransferRow};

/// Default `δ` values for deviation fractions.
pub const DEFAULT_DELTAS: [f64; 2] = [0.1, 0.01];
/// Verdict threshold on `prob_dev` at the smallest `r`.
pub const CONVERGENCE_LEVEL: f64 = 0.01;

/// Geometric grid from `r_max` down to `r_min` with `points` entries.
pub fn geometric_grid(r_max: f64, r_min: f64, points: usize) -> Result<Vec<f64>> {
    if !(r_max > 0.0 && r_min > 0.0 && r_max.is_finite() && r_min.is_finite()) || points == 0 {
        return Err(Error::domain(
            "r_grid",
            "need finite positive end points and at least one point",
        ));
    }
    if points == 1 {
        return Ok(vec![r_max]);
    }
    let (a, b) = (r_max.ln(), r_min.ln());
    Ok((0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

/// The default grid: 8 points from `10^{-1}` with ratio `10^{-1/2}`.
pub fn default_r_grid() -> Vec<f64> {
    (0..8).map(|i| 10f64.powf(-1.0 - 0.5 * i as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HorizonRule {
    /// `max(factor · C(r), floor)`.
    Scaled {
        factor: f64,
        floor: f64,
    },
    Fixed {
        horizon: f64,
    },
}

impl HorizonRule {
    pub fn default_for(regime: Regime) -> Self {
        match regime {
            Regime::SmallTime => HorizonRule::Scaled {
                factor: 10.0,
                floor: 0.0,
            },
            Regime::LargeTime => HorizonRule::Scaled {
                factor: 10.0,
                floor: 2.0,
            },
        }
    }

    fn horizon(&self, c_r: Option<f64>) -> Result<f64> {
        let h = match (*self, c_r) {
            (HorizonRule::Fixed { horizon }, _) => horizon,
            (HorizonRule::Scaled { factor, floor }, Some(c)) => (factor * c).max(floor),
            (HorizonRule::Scaled { .. }, None) => {
                return Err(Error::contract(
                    "passage_sweep",
                    "a median scale needs a fixed horizon rule",
                ))
            }
        };
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::domain(
                "passage_sweep",
                format!("horizon must be finite and > 0, got {h}"),
            ));
        }
        Ok(h)
    }
}

/// How `T` is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rule", rename_all = "snake_case")]
pub enum Scale {
    /// `C(r)` from a norming pair.
    Norming(NormingRule),
    /// Empirical median of the uncensored passage times at each `r`.
    Median,
}

/// Closed-form norming where the model provides one, the solver otherwise.
pub fn default_rule(model: &LevyModel, regime: Regime) -> NormingRule {
    match regime {
        Regime::SmallTime => match model.bv_drift() {
            Some(d) if d != 0.0 => NormingRule::DriftClosedForm,
            _ => NormingRule::Solver,
        },
        Regime::LargeTime => match model.mean() {
            Some(mu) if mu != 0.0 => NormingRule::MeanClosedForm,
            _ => NormingRule::Solver,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub p: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub b: f64,
    pub sided: Sided,
    pub regime: Regime,
    pub r_grid: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    /// Jumps of size `<= cutoff_h` are replaced by their compensated mean.
    pub cutoff_h: f64,
    /// If set, overrides `cutoff_h` per row with `cutoff_rel · r C(r)^b`.
    #[serde(default)]
    pub cutoff_rel: Option<f64>,
    pub horizon: HorizonRule,
    pub scale: Scale,
    pub deltas: Vec<f64>,
    pub moments: Vec<MomentSpec>,
}

impl SweepConfig {
    /// Defaults for everything but the model-dependent scale.
    pub fn new(model: &LevyModel, b: f64, sided: Sided, regime: Regime) -> Self {
        SweepConfig {
            b,
            sided,
            regime,
            r_grid: default_r_grid(),
            n_paths: 100_000,
            seed: 0,
            cutoff_h: 0.0,
            cutoff_rel: None,
            horizon: HorizonRule::default_for(regime),
            scale: Scale::Norming(default_rule(model, regime)),
            deltas: DEFAULT_DELTAS.to_vec(),
            moments: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevFraction {
    pub delta: f64,
    pub fraction: f64,
}

/// Summary of `X_T / (r T^b)` (absolute value when two-sided) over
/// uncensored paths, and the three alternative normalisations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OvershootSummary {
    pub mean: f64,
    pub stderr: f64,
    pub q50: f64,
    pub q95: f64,
    /// Mean of `X_T / B(T)`.
    pub x_over_b_t: f64,
    /// Mean of `X_T / B(C(r))`.
    pub x_over_b_c: f64,
    /// Mean of `X_T / (r C(r)^b)`.
    pub x_over_r_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub p: f64,
    pub eps: f64,
    /// Estimate of `E (T ∧ ε)^p`.
    pub mean: f64,
    pub stderr: f64,
    /// `mean / C(r)^p`.
    pub normalized: f64,
    pub normalized_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowStats {
    pub r: f64,
    /// `C(r)`, or the median passage time under [`Scale::Median`].
    pub c_r: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub n_censored: usize,
    /// More than half the paths were censored.
    pub censor_warning: bool,
    /// Mean of `T/C(r)` over uncensored paths.
    pub mean: f64,
    pub stderr: f64,
    /// 5, 25, 50, 75 and 95% quantiles of `T/C(r)`.
    pub quantiles: [f64; 5],
    /// Fraction of all paths with `|T/C − 1| > δ`; censored paths count as deviating.
    pub prob_dev: Vec<DevFraction>,
    pub equality_fraction: f64,
    pub overshoot: OvershootSummary,
    pub moments: Vec<MomentEstimate>,
    pub cutoff_h: f64,
    pub bias_bound: f64,
    /// `bias_bound` exceeds [`BIAS_WARNING_FRACTION`] of `r C(r)^b`.
    pub bias_warning: bool,
}

/// Share of the boundary level `r C(r)^b` the small-jump bias may reach
/// before a row is flagged.
pub const BIAS_WARNING_FRACTION: f64 = 0.1;

impl RowStats {
    pub fn prob_dev_at(&self, delta: f64) -> Option<f64> {
        self.prob_dev.iter().find(|d| d.delta == delta).map(|d| d.fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub model: LevyModel,
    pub model_fingerprint: String,
    pub config: SweepConfig,
    pub rows: Vec<RowStats>,
}

/// Runs `f` on a pool of `workers` threads (`0`: the global pool).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::contract("workers", e.to_string()))?;
    Ok(pool.install(f))
}

/// Simulates paths `0..n` with per-path streams and scans each against `boundary`.
pub fn simulate_passages(
    sampler: &JumpSampler,
    seed: u64,
    n: usize,
    horizon: f64,
    boundary: Boundary,
    regime: Regime,
) -> Result<Vec<Passage>> {
    let slope = sampler.drift_slope();
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            scan(sampler.stream(&mut rng), slope, horizon, boundary, regime)
        })
        .collect()
}

fn validate(config: &SweepConfig) -> Result<()> {
    if config.r_grid.is_empty() || config.r_grid.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::domain(
            "passage_sweep",
            "r_grid must be non-empty with finite positive entries",
        ));
    }
    if config.n_paths == 0 {
        return Err(Error::domain("passage_sweep", "n_paths must be positive"));
    }
    if config.deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::domain("passage_sweep", "deltas must be positive"));
    }
    if config.cutoff_rel.is_some_and(|k| !(k > 0.0 && k.is_finite())) {
        return Err(Error::domain("passage_sweep", "cutoff_rel must be finite and > 0"));
    }
    if config.moments.iter().any(|m| !(m.p > 0.0 && m.eps > 0.0)) {
        return Err(Error::domain("passage_sweep", "moment p and eps must be positive"));
    }
    Ok(())
}

/// Monte-Carlo sweep over `config.r_grid`.
pub fn passage_sweep(model: &LevyModel, config: &SweepConfig, workers: usize) -> Result<ExperimentResult> {
    validate(config)?;
    let fixed = match config.cutoff_rel {
        None => Some(JumpSampler::new(model, config.cutoff_h)?),
        Some(_) => None,
    };
    let pair = match config.scale {
        Scale::Norming(rule) => Some(NormingPair::new(model, config.b, config.regime, rule)?),
        Scale::Median => None,
    };
    let mut rows = Vec::with_capacity(config.r_grid.len());
    for &r in &config.r_grid {
        let c_norm = pair.as_ref().map(|p| p.c_of(r)).transpose()?;
        let horizon = config.horizon.horizon(c_norm)?;
        if let Some(m) = config.moments.iter().find(|m| horizon < m.eps) {
            return Err(Error::contract(
                "truncated_moment",
                format!("horizon {horizon} at r = {r} is below eps = {}", m.eps),
            ));
        }
        let boundary = Boundary::new(r, config.b)?;
        let sampler = match (&fixed, config.cutoff_rel) {
            (Some(s), _) => s.clone(),
            (None, Some(k)) => {
                let c = c_norm.ok_or_else(|| {
                    Error::contract(
                        "passage_sweep",
                        "a relative cutoff needs a norming scale, not the median",
                    )
                })?;
                JumpSampler::new(model, k * r * c.powf(config.b))?
            }
            (None, None) => unreachable!("one cutoff rule is always set"),
        };
        let passages = with_workers(workers, || {
            simulate_passages(&sampler, config.seed, config.n_paths, horizon, boundary, config.regime)
        })??;
        rows.push(summarise(
            &passages,
            config,
            pair.as_ref(),
            r,
            c_norm,
            horizon,
            &sampler,
        )?);
    }
    Ok(ExperimentResult {
        model: model.clone(),
        model_fingerprint: model.fingerprint(),
        config: config.clone(),
        rows,
    })
}

fn summarise(
    passages: &[Passage],
    config: &SweepConfig,
    pair: Option<&NormingPair>,
    r: f64,
    c_norm: Option<f64>,
    horizon: f64,
    sampler: &JumpSampler,
) -> Result<RowStats> {
    let bias_bound = sampler.bias_bound(horizon);
    let n = passages.len();
    let boundary = Boundary::new(r, config.b)?;
    let records: Vec<_> = passages.iter().map(|p| p.record(boundary, config.sided)).collect();
    let times: Vec<f64> = records.iter().filter_map(|rec| rec.passage_time).collect();
    let n_censored = n - times.len();
    let c_r = match c_norm {
        Some(c) => c,
        None => stats::quantile_sorted(&stats::sorted(&times), 0.5),
    };
    let ratios: Vec<f64> = times.iter().map(|t| t / c_r).collect();
    let sorted_ratios = stats::sorted(&ratios);
    let quantiles = [0.05, 0.25, 0.5, 0.75, 0.95].map(|q| stats::quantile_sorted(&sorted_ratios, q));
    let prob_dev = config
        .deltas
        .iter()
        .map(|&delta| {
            let dev = ratios.iter().filter(|&&x| (x - 1.0).abs() > delta).count() + n_censored;
            DevFraction {
                delta,
                fraction: dev as f64 / n as f64,
            }
        })
        .collect();
    let equality_fraction = records.iter().filter(|rec| rec.two_sided_equal).count() as f64 / n as f64;

    let hit: Vec<_> = records.iter().filter(|rec| !rec.censored).collect();
    let over: Vec<f64> = hit.iter().map(|rec| rec.overshoot_ratio).collect();
    let sorted_over = stats::sorted(&over);
    let x_of = |pos: f64| match config.sided {
        Sided::One => pos,
        Sided::Two => pos.abs(),
    };
    let (x_over_b_t, x_over_b_c, x_over_r_c) = match pair {
        Some(pair) => {
            let b_c = pair.b_of(c_r)?;
            let r_c = r * c_r.powf(config.b);
            let by_b_t: Vec<f64> = hit
                .iter()
                .map(|rec| {
                    let t = rec.passage_time.expect("uncensored");
                    pair.b_of(t).map_or(f64::NAN, |bt| x_of(rec.position) / bt)
                })
                .collect();
            let by_b_c: Vec<f64> = hit.iter().map(|rec| x_of(rec.position) / b_c).collect();
            let by_r_c: Vec<f64> = hit.iter().map(|rec| x_of(rec.position) / r_c).collect();
            (stats::mean(&by_b_t), stats::mean(&by_b_c), stats::mean(&by_r_c))
        }
        None => (f64::NAN, f64::NAN, f64::NAN),
    };
    let overshoot = OvershootSummary {
        mean: stats::mean(&over),
        stderr: stats::stderr(&over),
        q50: stats::quantile_sorted(&sorted_over, 0.5),
        q95: stats::quantile_sorted(&sorted_over, 0.95),
        x_over_b_t,
        x_over_b_c,
        x_over_r_c,
    };

    let moments = config
        .moments
        .iter()
        .map(|m| {
            // censored paths have T > horizon >= eps
            let vals: Vec<f64> = records
                .iter()
                .map(|rec| rec.passage_time.map_or(m.eps, |t| t.min(m.eps)).powf(m.p))
                .collect();
            let mean = stats::mean(&vals);
            let se = stats::stderr(&vals);
            let cp = c_r.powf(m.p);
            MomentEstimate {
                p: m.p,
                eps: m.eps,
                mean,
                stderr: se,
                normalized: mean / cp,
                normalized_stderr: se / cp,
            }
        })
        .collect();

    Ok(RowStats {
        r,
        c_r,
        horizon,
        n_paths: n,
        n_censored,
        censor_warning: 2 * n_censored > n,
        mean: stats::mean(&ratios),
        stderr: stats::stderr(&ratios),
        quantiles,
        prob_dev,
        equality_fraction,
        overshoot,
        moments,
        cutoff_h: sampler.cutoff(),
        bias_bound,
        bias_warning: bias_bound > BIAS_WARNING_FRACTION * r * c_r.powf(config.b),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// `prob_dev` at the smallest `r` is below [`CONVERGENCE_LEVEL`].
    ConsistentWithConvergence,
    /// `prob_dev` stays above [`NOT_STABLE_LEVEL`] over the whole grid.
    NotStable,
    Inconclusive,
}

/// Floor on `prob_dev` across the grid that flags non-stability.
pub const NOT_STABLE_LEVEL: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub delta: f64,
    /// `(r, prob_dev(δ))` ordered by decreasing `r`.
    pub per_r: Vec<(f64, f64)>,
    /// `prob_dev` is nonincreasing as `r` decreases.
    pub trend_decreasing: bool,
    pub verdict: Verdict,
}

/// Per-`r` deviation fractions at `delta` with a trend test and verdict.
pub fn convergence_probe(result: &ExperimentResult, delta: f64) -> Result<ConvergenceReport> {
    let mut per_r = result
        .rows
        .iter()
        .map(|row| {
            row.prob_dev_at(delta)
                .map(|f| (row.r, f))
                .ok_or_else(|| Error::contract("convergence_probe", format!("delta {delta} was not part of the sweep")))
        })
        .collect::<Result<Vec<_>>>()?;
    per_r.sort_by(|a, b| b.0.total_cmp(&a.0));
    let trend_decreasing = per_r.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    let smallest = per_r.last().map_or(f64::NAN, |p| p.1);
    let verdict = if smallest < CONVERGENCE_LEVEL {
        Verdict::ConsistentWithConvergence
    } else if per_r.iter().all(|p| p.1 > NOT_STABLE_LEVEL) {
        Verdict::NotStable
    } else {
        Verdict::Inconclusive
    };
    Ok(ConvergenceReport {
        delta,
        per_r,
        trend_decreasing,
        verdict,
    })
}

/// Fraction of paths with `T*(r) = T̄(r)` at each `r`.
pub fn equality_prob(
    model: &LevyModel,
    b: f64,
    r_grid: &[f64],
    n_paths: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<(f64, f64)>> {
    let mut config = SweepConfig::new(model, b, Sided::Two, Regime::SmallTime);
    config.r_grid = r_grid.to_vec();
    config.n_paths = n_paths;
    config.seed = seed;
    let result = passage_sweep(model, &config, workers)?;
    Ok(result.rows.iter().map(|row| (row.r, row.equality_fraction)).collect())
}

/// Per-`r` overshoot summaries of a sweep.
pub fn overshoot_stats(result: &ExperimentResult) -> Vec<(f64, OvershootSummary)> {
    result.rows.iter().map(|row| (row.r, row.overshoot)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub r: f64,
    pub c_r: f64,
    pub estimate: MomentEstimate,
}

/// Estimates `E (T*(r) ∧ ε)^p` for a bounded-variation model with positive
/// drift, with horizon `max(10 C(r), ε)`.
#[allow(clippy::too_many_arguments)]
pub fn truncated_moment(
    model: &LevyModel,
    b: f64,
    p: f64,
    eps: f64,
    r_grid: &[f64],
    n_paths: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<MomentRow>> {
    match model.bv_drift() {
        Some(d) if d > 0.0 => {}
        _ => {
            return Err(Error::contract(
                "truncated_moment",
                "needs a bounded-variation model with positive drift",
            ))
        }
    }
    let mut config = SweepConfig::new(model, b, Sided::One, Regime::SmallTime);
    config.r_grid = r_grid.to_vec();
    config.n_paths = n_paths;
    config.seed = seed;
    config.horizon = HorizonRule::Scaled {
        factor: 10.0,
        floor: eps,
    };
    config.moments = vec![MomentSpec { p, eps }];
    let result = passage_sweep(model, &config, workers)?;
    Ok(result
        .rows
        .iter()
        .map(|row| MomentRow {
            r: row.r,
            c_r: row.c_r,
            estimate: row.moments[0],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = geometric_grid(1e-1, 1e-3, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[2] / 1e-2 - 1.0).abs() < 1e-12);
        let d = default_r_grid();
        assert_eq!(d.len(), 8);
        assert!((d[1] / d[0] - 10f64.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn drift_only_sweep_is_exact() {
        let m = LevyModel::drift_only(1.0).unwrap();
        let mut cfg = SweepConfig::new(&m, 0.0, Sided::One, Regime::SmallTime);
        cfg.n_paths = 50;
        cfg.r_grid = vec![0.1, 0.01];
        let res = passage_sweep(&m, &cfg, 0).unwrap();
        for row in &res.rows {
            assert_eq!(row.mean, 1.0);
            assert_eq!(row.prob_dev_at(0.01), Some(0.0));
            assert_eq!(row.equality_fraction, 1.0);
            assert_eq!(row.overshoot.mean, 1.0);
            assert_eq!(row.n_censored, 0);
        }
        let probe = convergence_probe(&res, 0.1).unwrap();
        assert_eq!(probe.verdict, Verdict::ConsistentWithConvergence);
        assert!(convergence_probe(&res, 0.3).is_err());
    }

    #[test]
    fn censoring_counts_as_deviation() {
        let m = LevyModel::drift_only(-1.0).unwrap();
        let mut cfg = SweepConfig::new(&m, 0.0, Sided::One, Regime::SmallTime);
        cfg.n_paths = 10;
        cfg.r_grid = vec![0.1];
        cfg.scale = Scale::Norming(NormingRule::DriftClosedForm);
        let row = &passage_sweep(&m, &cfg, 0).unwrap().rows[0];
        assert_eq!(row.n_censored, 10);
        assert!(row.censor_warning);
        assert_eq!(row.prob_dev_at(0.1), Some(1.0));
        assert!(row.mean.is_nan());
    }

    #[test]
    fn moments_need_horizon_past_eps() {
        let m = LevyModel::poisson_drift(1.0).unwrap();
        let mut cfg = SweepConfig::new(&m, 0.0, Sided::One, Regime::SmallTime);
        cfg.n_paths = 10;
        cfg.r_grid = vec![1e-3];
        cfg.moments = vec![MomentSpec { p: 1.0, eps: 0.5 }];
        assert!(matches!(passage_sweep(&m, &cfg, 0), Err(Error::Contract { .. })));
        let rows = truncated_moment(&m, 0.0, 1.0, 0.5, &[1e-3], 10, 0, 0).unwrap();
        assert_eq!(rows[0].estimate.eps, 0.5);
    }

    #[test]
    fn median_scale_needs_fixed_horizon() {
        let m = LevyModel::poisson_drift(1.0).unwrap();
        let mut cfg = SweepConfig::new(&m, 0.0, Sided::One, Regime::SmallTime);
        cfg.scale = Scale::Median;
        cfg.n_paths = 10;
        assert!(matches!(passage_sweep(&m, &cfg, 0), Err(Error::Contract { .. })));
        cfg.horizon = HorizonRule::Fixed { horizon: 5.0 };
        let res = passage_sweep(&m, &cfg, 0).unwrap();
        assert!(res.rows.iter().all(|row| row.quantiles[2] == 1.0));
    }
}
