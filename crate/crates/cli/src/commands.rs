use std::fs;
use std::path::Path;

use levy_passage::estimators::{
    convergence_probe, long_csv, overshoot_stats, passage_sweep, skorohod_sup_probe, stats, sup_transfer_probe,
    wide_csv, ExperimentResult, Scale,
};
use levy_passage::oracles::{
    brute_force_small_instance, catalogue, drift_passage_exact, log_example_c, poisson_drift_truncated_moment,
    reference_evaluations, OracleEvaluation,
};
use levy_passage::pathsim::{write_path_csv, JumpSampler};
use levy_passage::rng::path_rng;
use levy_passage::stability::{classify, NormingPair, Regime};
use levy_passage::{Error, JumpMeasure, LevyModel};
use serde::Serialize;
use serde_json::json;

use crate::artifacts::{cell, opt_cell, table, Sink};
use crate::config::ExperimentConfig;
use crate::error::CliError;

/// `γ` of a pure positive drift.
pub fn drift_only_gamma(model: &LevyModel) -> Option<f64> {
    (matches!(model.jumps(), JumpMeasure::None) && model.sigma2() == 0.0 && model.gamma() > 0.0)
        .then_some(model.gamma())
}

/// `a` of `X_t = a t − N_t` with `a > 0`.
pub fn poisson_drift_rate(model: &LevyModel) -> Option<f64> {
    if !matches!(model.jumps(), JumpMeasure::UnitRatePoissonNegative) {
        return None;
    }
    model.bv_drift().filter(|&a| a > 0.0)
}

fn sink(cfg: &ExperimentConfig, out: &Path, sub: &'static str) -> Result<Sink, CliError> {
    Sink::new(out, sub, &cfg.hash, &cfg.source)
}

fn sweep(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentResult, CliError> {
    Ok(passage_sweep(&cfg.model, &cfg.sweep, workers)?)
}

pub fn classify_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let report = classify(&cfg.model, cfg.sweep.regime);
    let s = sink(cfg, out, "classify")?;
    let rows: Vec<Vec<String>> = report.probe.iter().map(|p| vec![cell(p.x), cell(p.ratio)]).collect();
    s.csv(".csv", |w| table(w, &["x", "ratio"], &rows))?;
    s.json(None, Some(&cfg.model), &report)
}

#[derive(Serialize)]
struct NormingRow {
    r: f64,
    c_r: f64,
    b_of_c_r: f64,
    /// Closed-form reference where one exists.
    oracle: Option<f64>,
    /// `exact` references must match to 1e-9; `asymptotic` ones only as `r → 0`.
    oracle_kind: Option<&'static str>,
}

pub fn norming_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let rule = match cfg.sweep.scale {
        Scale::Norming(rule) => rule,
        Scale::Median => {
            return Err(Error::Config {
                key: "norming".into(),
                line: 0,
                msg: "the norming subcommand needs a norming rule, not median".into(),
            }
            .into())
        }
    };
    let pair = NormingPair::new(&cfg.model, cfg.sweep.b, cfg.sweep.regime, rule)?;
    let gamma = drift_only_gamma(&cfg.model);
    let log_example = matches!(cfg.model.jumps(), JumpMeasure::LogSquared) && cfg.sweep.regime == Regime::SmallTime;
    let mut rows = Vec::new();
    for &r in &cfg.sweep.r_grid {
        let c = pair.c_of(r)?;
        let (oracle, kind) = match (gamma, log_example) {
            (Some(g), _) if cfg.sweep.regime == Regime::SmallTime => {
                (Some(drift_passage_exact(g, cfg.sweep.b, r)?), Some("exact"))
            }
            (_, true) if r < 1.0 => (Some(log_example_c(cfg.sweep.b, r)?), Some("asymptotic")),
            _ => (None, None),
        };
        rows.push(NormingRow {
            r,
            c_r: c,
            b_of_c_r: pair.b_of(c)?,
            oracle,
            oracle_kind: kind,
        });
    }
    let s = sink(cfg, out, "norming")?;
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                cell(r.r),
                cell(r.c_r),
                cell(r.b_of_c_r),
                opt_cell(r.oracle),
                r.oracle_kind.unwrap_or("").to_string(),
            ]
        })
        .collect();
    s.csv(".csv", |w| {
        table(w, &["r", "c_r", "b_of_c_r", "oracle", "oracle_kind"], &cells)
    })?;
    s.json(
        None,
        Some(&cfg.model),
        json!({
            "b": cfg.sweep.b,
            "regime": cfg.sweep.regime,
            "rule": rule,
            "rows": rows,
            "grid": pair.grid(),
        }),
    )
}

fn sweep_outputs(s: &Sink, res: &ExperimentResult) -> Result<(), CliError> {
    s.csv(".csv", |w| wide_csv(w, res))?;
    s.csv(".long.csv", |w| long_csv(w, res))
}

pub fn simulate_cmd(cfg: &ExperimentConfig, out: &Path, workers: usize, dump: Option<usize>) -> Result<(), CliError> {
    let res = sweep(cfg, workers)?;
    let s = sink(cfg, out, "simulate")?;
    sweep_outputs(&s, &res)?;
    if let Some(n) = dump {
        let dir = s.path("-paths");
        fs::create_dir_all(&dir).map_err(|source| CliError::Write {
            path: dir.clone(),
            source,
        })?;
        let sampler = JumpSampler::new(&cfg.model, cfg.sweep.cutoff_h)?;
        let horizon = res.rows.iter().map(|r| r.horizon).fold(0.0, f64::max);
        for i in 0..n as u64 {
            let path = sampler.sample_path(&mut path_rng(cfg.sweep.seed, i), horizon);
            let file = dir.join(format!("path-{i}.csv"));
            let mut buf = Vec::new();
            write_path_csv(&mut buf, &path, cfg.sweep.seed, i).expect("writing to memory");
            fs::write(&file, buf).map_err(|source| CliError::Write { path: file, source })?;
        }
        println!("{}", dir.display());
    }
    s.json(Some(cfg.sweep.seed), Some(&cfg.model), &res)
}

pub fn converge_cmd(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<(), CliError> {
    // a Gaussian part rules out the event-driven sweep; the Euler-grid
    // sup probe still runs
    let res = if cfg.model.sigma2() > 0.0 && cfg.raw.sup_probe.is_some() {
        None
    } else {
        Some(sweep(cfg, workers)?)
    };
    let reports = match &res {
        Some(res) => cfg
            .sweep
            .deltas
            .iter()
            .map(|&d| convergence_probe(res, d))
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    let (sup, transfer) = match cfg.sup_probe() {
        Some(settings) => {
            let sup = skorohod_sup_probe(&cfg.model, &settings, workers)?;
            let transfer = if settings.euler_steps.is_none() {
                Some(sup_transfer_probe(
                    &cfg.model,
                    &settings.t_grid,
                    settings.n_paths,
                    settings.seed,
                    settings.delta,
                    settings.cutoff_h,
                    workers,
                )?)
            } else {
                None
            };
            (Some(sup), transfer)
        }
        None => (None, None),
    };
    let s = sink(cfg, out, "converge")?;
    let n = cfg.sweep.n_paths;
    let mut rows = Vec::new();
    for rep in &reports {
        for &(r, f) in &rep.per_r {
            rows.push(vec![
                cell(r),
                cell(rep.delta),
                cell(f),
                cell(stats::fraction_stderr(f, n)),
            ]);
        }
    }
    s.csv(".csv", |w| table(w, &["r", "delta", "prob_dev", "stderr"], &rows))?;
    if let Some(res) = &res {
        s.csv(".long.csv", |w| long_csv(w, res))?;
    }
    s.json(
        Some(cfg.sweep.seed),
        Some(&cfg.model),
        json!({ "convergence": reports, "sup_probe": sup, "transfer": transfer, "sweep": res }),
    )
}

pub fn equality_cmd(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<(), CliError> {
    let res = sweep(cfg, workers)?;
    let rows: Vec<_> = res
        .rows
        .iter()
        .map(|r| {
            json!({
                "r": r.r,
                "equality_fraction": r.equality_fraction,
                "stderr": stats::fraction_stderr(r.equality_fraction, r.n_paths),
            })
        })
        .collect();
    let s = sink(cfg, out, "equality")?;
    let cells: Vec<Vec<String>> = res
        .rows
        .iter()
        .map(|r| {
            vec![
                cell(r.r),
                cell(r.equality_fraction),
                cell(stats::fraction_stderr(r.equality_fraction, r.n_paths)),
            ]
        })
        .collect();
    s.csv(".csv", |w| table(w, &["r", "equality_fraction", "stderr"], &cells))?;
    s.json(
        Some(cfg.sweep.seed),
        Some(&cfg.model),
        json!({ "rows": rows, "sweep": res }),
    )
}

pub fn overshoot_cmd(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<(), CliError> {
    let res = sweep(cfg, workers)?;
    let summary = overshoot_stats(&res);
    let s = sink(cfg, out, "overshoot")?;
    let cells: Vec<Vec<String>> = summary
        .iter()
        .map(|(r, o)| {
            [
                *r,
                o.mean,
                o.stderr,
                o.q50,
                o.q95,
                o.x_over_b_t,
                o.x_over_b_c,
                o.x_over_r_c,
            ]
            .iter()
            .map(|&x| cell(x))
            .collect()
        })
        .collect();
    s.csv(".csv", |w| {
        table(
            w,
            &[
                "r",
                "mean",
                "stderr",
                "q50",
                "q95",
                "x_over_b_t",
                "x_over_b_c",
                "x_over_r_c",
            ],
            &cells,
        )
    })?;
    s.json(
        Some(cfg.sweep.seed),
        Some(&cfg.model),
        json!({ "rows": summary, "sweep": res }),
    )
}

#[derive(Serialize)]
struct MomentOut {
    r: f64,
    c_r: f64,
    p: f64,
    eps: f64,
    mean: f64,
    stderr: f64,
    normalized: f64,
    normalized_stderr: f64,
    oracle: Option<f64>,
}

pub fn moments_cmd(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<(), CliError> {
    if cfg.sweep.moments.is_empty() {
        return Err(Error::Config {
            key: "moments".into(),
            line: 0,
            msg: "the moments subcommand needs a [moments] table with p and eps lists".into(),
        }
        .into());
    }
    if !cfg.model.bv_drift().is_some_and(|d| d > 0.0) {
        return Err(Error::Contract {
            op: "truncated_moment",
            msg: "needs a bounded-variation model with positive drift".into(),
        }
        .into());
    }
    let res = sweep(cfg, workers)?;
    let a = poisson_drift_rate(&cfg.model);
    let mut rows = Vec::new();
    for row in &res.rows {
        for m in &row.moments {
            let oracle = a.and_then(|a| poisson_drift_truncated_moment(a, cfg.sweep.b, m.p, m.eps, row.r).ok());
            rows.push(MomentOut {
                r: row.r,
                c_r: row.c_r,
                p: m.p,
                eps: m.eps,
                mean: m.mean,
                stderr: m.stderr,
                normalized: m.normalized,
                normalized_stderr: m.normalized_stderr,
                oracle,
            });
        }
    }
    let s = sink(cfg, out, "moments")?;
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|m| {
            let mut v: Vec<String> = [
                m.r,
                m.c_r,
                m.p,
                m.eps,
                m.mean,
                m.stderr,
                m.normalized,
                m.normalized_stderr,
            ]
            .iter()
            .map(|&x| cell(x))
            .collect();
            v.push(opt_cell(m.oracle));
            v
        })
        .collect();
    s.csv(".csv", |w| {
        table(
            w,
            &[
                "r",
                "c_r",
                "p",
                "eps",
                "mean",
                "stderr",
                "normalized",
                "normalized_stderr",
                "oracle",
            ],
            &cells,
        )
    })?;
    s.json(
        Some(cfg.sweep.seed),
        Some(&cfg.model),
        json!({ "rows": rows, "sweep": res }),
    )
}

pub fn oracle_cmd(cfg: Option<&ExperimentConfig>, out: &Path) -> Result<(), CliError> {
    let mut evals = reference_evaluations();
    let mut skeleton = None;
    if let Some(cfg) = cfg {
        let b = cfg.sweep.b;
        for &r in &cfg.sweep.r_grid {
            if let Some(g) = drift_only_gamma(&cfg.model) {
                evals.push(OracleEvaluation::new(
                    "drift_passage_exact",
                    &[("gamma", g), ("b", b), ("r", r)],
                    drift_passage_exact(g, b, r),
                ));
            }
            if let Some(a) = poisson_drift_rate(&cfg.model) {
                for m in &cfg.sweep.moments {
                    evals.push(OracleEvaluation::new(
                        "poisson_drift_truncated_moment",
                        &[("a", a), ("b", b), ("p", m.p), ("eps", m.eps), ("r", r)],
                        poisson_drift_truncated_moment(a, b, m.p, m.eps, r),
                    ));
                }
            }
            if matches!(cfg.model.jumps(), JumpMeasure::LogSquared) {
                evals.push(OracleEvaluation::new(
                    "log_example_c",
                    &[("b", b), ("r", r)],
                    log_example_c(b, r),
                ));
            }
        }
        if let Some((skel, r, b)) = cfg.skeleton() {
            let law = brute_force_small_instance(&skel, r, b, cfg.sweep.sided)?;
            skeleton = Some(json!({ "skeleton": skel, "r": r, "b": b, "sided": cfg.sweep.sided, "law": law }));
        }
    }
    let (hash, source) = match cfg {
        Some(c) => (c.hash.clone(), c.source.clone()),
        None => ("reference".to_string(), String::new()),
    };
    let s = Sink::new(out, "oracle", &hash, &source)?;
    let cells: Vec<Vec<String>> = evals
        .iter()
        .map(|e| {
            let inputs: Vec<String> = e.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
            vec![
                e.name.clone(),
                inputs.join(";"),
                opt_cell(e.value),
                e.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    s.csv(".csv", |w| table(w, &["name", "inputs", "value", "error"], &cells))?;
    s.json(
        cfg.map(|c| c.sweep.seed),
        cfg.map(|c| &c.model),
        json!({ "catalogue": catalogue(), "evaluations": evals, "skeleton": skeleton }),
    )
}
