//! Experiment configuration files.
//!
//! ```toml
//! seed = 7
//! n_paths = 100000
//! b = 0.0
//! regime = "small_time"      # or "large_time"
//! sided = "one"              # or "two"
//! deltas = [0.1, 0.01]
//! norming = "auto"           # solver | drift_closed_form | mean_closed_form | median
//!
//! [r_grid]
//! max = 0.1
//! min = 1e-4
//! points = 7
//!
//! [model]
//! family = "unit_rate_poisson_negative"
//! drift = 1.0
//! ```

use std::path::PathBuf;

use levy_passage::estimators::{
    default_rule, geometric_grid, HorizonRule, MomentSpec, Scale, SupProbeSettings, SweepConfig, DEFAULT_DELTAS,
};
use levy_passage::oracles::Skeleton;
use levy_passage::pathsim::Sided;
use levy_passage::stability::{NormingRule, Regime};
use levy_passage::{Error, LevyModel, ModelSpec};
use serde::Deserialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub b: f64,
    #[serde(default = "default_regime")]
    pub regime: Regime,
    #[serde(default = "default_sided")]
    pub sided: Sided,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub cutoff_h: f64,
    #[serde(default)]
    pub cutoff_rel: Option<f64>,
    #[serde(default = "default_norming")]
    pub norming: String,
    #[serde(default)]
    pub horizon: Option<HorizonRule>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub r_grid: Option<GridSpec>,
    #[serde(default)]
    pub moments: Option<MomentLists>,
    #[serde(default)]
    pub sup_probe: Option<SupProbeSpec>,
    #[serde(default)]
    pub skeleton: Option<SkeletonSpec>,
    pub model: ModelSpec,
}

fn default_paths() -> usize {
    100_000
}
fn default_regime() -> Regime {
    Regime::SmallTime
}
fn default_sided() -> Sided {
    Sided::One
}
fn default_deltas() -> Vec<f64> {
    DEFAULT_DELTAS.to_vec()
}
fn default_norming() -> String {
    "auto".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub max: f64,
    pub min: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentLists {
    pub p: Vec<f64>,
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupProbeSpec {
    pub t: Vec<f64>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_upper")]
    pub t_upper: f64,
    #[serde(default = "default_probe_delta")]
    pub delta: f64,
    #[serde(default)]
    pub euler_steps: Option<usize>,
}

fn default_eta() -> f64 {
    0.1
}
fn default_upper() -> f64 {
    2.0
}
fn default_probe_delta() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletonSpec {
    pub steps: usize,
    #[serde(default = "one")]
    pub dt: f64,
    pub increments: Vec<(f64, f64)>,
    pub r: f64,
    #[serde(default)]
    pub b: f64,
}

fn one() -> f64 {
    1.0
}

/// A validated configuration together with its source text.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: String,
    pub hash: String,
    pub raw: RawConfig,
    pub model: LevyModel,
    pub sweep: SweepConfig,
}

/// 1-based line of the first `key = ...` assignment, or 0.
fn line_of_key(src: &str, key: &str) -> usize {
    src.lines()
        .position(|l| {
            l.trim_start()
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

fn bad(src: &str, key: &str, msg: impl Into<String>) -> Error {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    Error::Config {
        key: key.to_string(),
        line: line_of_key(src, leaf),
        msg: msg.into(),
    }
}

/// Content hash of the config text and any overrides.
pub fn config_hash(source: &str, seed_override: Option<u64>) -> String {
    let mut h = Sha256::new();
    h.update(source.as_bytes());
    if let Some(s) = seed_override {
        h.update(format!("\nseed-override={s}").as_bytes());
    }
    hex::encode(&h.finalize()[..6])
}

impl ExperimentConfig {
    pub fn parse(source: &str, seed_override: Option<u64>) -> Result<Self, Error> {
        let mut raw: RawConfig = toml::from_str(source).map_err(|e| levy_passage::model::toml_error(&e, source))?;
        let model = raw.model.build(source, "model.")?;
        if let Some(s) = seed_override {
            raw.seed = s;
        }
        if !(0.0..1.0).contains(&raw.b) && !(raw.b >= 1.0 && raw.norming == "median") {
            return Err(bad(
                source,
                "b",
                format!("b = {} needs 0 <= b < 1 (b >= 1 only with norming = \"median\")", raw.b),
            ));
        }
        if raw.n_paths == 0 {
            return Err(bad(source, "n_paths", "must be positive"));
        }
        if raw.deltas.is_empty() || raw.deltas.iter().any(|&d| !(d > 0.0)) {
            return Err(bad(source, "deltas", "need at least one positive delta"));
        }
        if !(raw.cutoff_h >= 0.0 && raw.cutoff_h.is_finite()) {
            return Err(bad(source, "cutoff_h", "must be finite and >= 0"));
        }
        if raw.cutoff_rel.is_some_and(|k| !(k > 0.0 && k.is_finite())) {
            return Err(bad(source, "cutoff_rel", "must be finite and > 0"));
        }
        let r_grid = match &raw.r_grid {
            None => levy_passage::estimators::default_r_grid(),
            Some(g) => {
                if !(g.max > 0.0 && g.min > 0.0 && g.min <= g.max) {
                    return Err(bad(source, "r_grid.max", "need 0 < min <= max"));
                }
                if g.points == 0 {
                    return Err(bad(source, "r_grid.points", "must be positive"));
                }
                geometric_grid(g.max, g.min, g.points).map_err(|e| bad(source, "r_grid.min", e.to_string()))?
            }
        };
        let scale = match raw.norming.as_str() {
            "auto" => Scale::Norming(default_rule(&model, raw.regime)),
            "solver" => Scale::Norming(NormingRule::Solver),
            "drift_closed_form" => Scale::Norming(NormingRule::DriftClosedForm),
            "mean_closed_form" => Scale::Norming(NormingRule::MeanClosedForm),
            "median" => Scale::Median,
            other => {
                return Err(bad(
                    source,
                    "norming",
                    format!(
                        "unknown rule `{other}`; expected auto, solver, drift_closed_form, mean_closed_form or median"
                    ),
                ))
            }
        };
        let mut moments = Vec::new();
        if let Some(m) = &raw.moments {
            if m.p.iter().any(|&p| !(p > 0.0)) || m.p.is_empty() {
                return Err(bad(source, "moments.p", "need at least one positive p"));
            }
            if m.eps.iter().any(|&e| !(e > 0.0)) || m.eps.is_empty() {
                return Err(bad(source, "moments.eps", "need at least one positive eps"));
            }
            for &p in &m.p {
                for &eps in &m.eps {
                    moments.push(MomentSpec { p, eps });
                }
            }
        }
        let horizon = match raw.horizon {
            Some(HorizonRule::Fixed { horizon }) if !(horizon > 0.0 && horizon.is_finite()) => {
                return Err(bad(source, "horizon.horizon", "must be finite and > 0"))
            }
            Some(HorizonRule::Scaled { factor, .. }) if !(factor > 0.0) => {
                return Err(bad(source, "horizon.factor", "must be > 0"))
            }
            Some(h) => h,
            None => {
                let mut h = HorizonRule::default_for(raw.regime);
                if let (HorizonRule::Scaled { floor, .. }, Some(max_eps)) =
                    (&mut h, moments.iter().map(|m| m.eps).reduce(f64::max))
                {
                    *floor = floor.max(max_eps);
                }
                h
            }
        };
        let sweep = SweepConfig {
            b: raw.b,
            sided: raw.sided,
            regime: raw.regime,
            r_grid,
            n_paths: raw.n_paths,
            seed: raw.seed,
            cutoff_h: raw.cutoff_h,
            cutoff_rel: raw.cutoff_rel,
            horizon,
            scale,
            deltas: raw.deltas.clone(),
            moments,
        };
        Ok(ExperimentConfig {
            source: source.to_string(),
            hash: config_hash(source, seed_override),
            raw,
            model,
            sweep,
        })
    }

    pub fn sup_probe(&self) -> Option<SupProbeSettings> {
        self.raw.sup_probe.as_ref().map(|p| SupProbeSettings {
            b: self.raw.b,
            t_grid: p.t.clone(),
            n_paths: self.raw.n_paths,
            seed: self.raw.seed,
            eta: p.eta,
            t_upper: p.t_upper,
            delta: p.delta,
            cutoff_h: self.raw.cutoff_h,
            euler_steps: p.euler_steps,
        })
    }

    pub fn skeleton(&self) -> Option<(Skeleton, f64, f64)> {
        self.raw.skeleton.as_ref().map(|s| {
            (
                Skeleton {
                    steps: s.steps,
                    dt: s.dt,
                    increments: s.increments.clone(),
                },
                s.r,
                s.b,
            )
        })
    }
}
