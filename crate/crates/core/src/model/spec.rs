//! TOML model specs.
//!
//! ```toml
//! family = "exponential_tails"
//! gamma = 0.0          # or `drift = ...` for bounded-variation models
//! sigma2 = 0.0
//!
//! [params]
//! lambda_plus = 1.0
//! alpha_plus = 1.0
//! ```
//!
//! Every error is reported as [`Error::Config`] with the offending key and
//! its 1-based line.

use std::collections::BTreeMap;

use serde::Deserialize;
use toml::{Spanned, Value};

use super::{JumpMeasure, LevyModel, TailTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Spanned<String>,
    #[serde(default)]
    pub gamma: Option<Spanned<f64>>,
    #[serde(default)]
    pub drift: Option<Spanned<f64>>,
    #[serde(default)]
    pub sigma2: Option<Spanned<f64>>,
    #[serde(default)]
    pub params: BTreeMap<String, Spanned<Value>>,
}

/// Parses a standalone model document.
pub fn parse_model_spec(src: &str) -> Result<LevyModel> {
    let spec: ModelSpec = toml::from_str(src).map_err(|e| toml_error(&e, src))?;
    spec.build(src, "")
}

/// Converts a TOML deserialisation error, recovering the key from the
/// reported span.
pub fn toml_error(err: &toml::de::Error, src: &str) -> Error {
    let (line, key) = match err.span() {
        Some(span) => {
            let line = line_of(src, span.start);
            let text = src.lines().nth(line - 1).unwrap_or("");
            let key = match text.split_once('=') {
                Some((k, _)) => k.trim().to_string(),
                None => text.trim().trim_matches(['[', ']']).to_string(),
            };
            (line, key)
        }
        None => (0, String::new()),
    };
    Error::Config {
        key,
        line,
        msg: err.message().trim().to_string(),
    }
}

pub(crate) fn line_of(src: &str, offset: usize) -> usize {
    src.as_bytes()[..offset.min(src.len())]
        .iter()
        .filter(|&&c| c == b'\n')
        .count()
        + 1
}

struct Ctx<'a> {
    src: &'a str,
    prefix: &'a str,
}

impl Ctx<'_> {
    fn err(&self, key: &str, offset: usize, msg: impl Into<String>) -> Error {
        Error::Config {
            key: format!("{}{key}", self.prefix),
            line: line_of(self.src, offset),
            msg: msg.into(),
        }
    }
}

struct Params<'a> {
    ctx: &'a Ctx<'a>,
    map: &'a BTreeMap<String, Spanned<Value>>,
    used: Vec<&'static str>,
    anchor: usize,
}

impl Params<'_> {
    fn key(&self, k: &str) -> String {
        format!("params.{k}")
    }

    fn number(&mut self, k: &'static str, default: Option<f64>) -> Result<f64> {
        self.used.push(k);
        match self.map.get(k) {
            None => default.ok_or_else(|| self.ctx.err(&self.key(k), self.anchor, "missing required parameter")),
            Some(v) => {
                as_f64(v.get_ref()).ok_or_else(|| self.ctx.err(&self.key(k), v.span().start, "expected a number"))
            }
        }
    }

    fn array(&mut self, k: &'static str, default_len: Option<usize>) -> Result<Vec<f64>> {
        self.used.push(k);
        match self.map.get(k) {
            None => match default_len {
                Some(n) => Ok(vec![0.0; n]),
                None => Err(self.ctx.err(&self.key(k), self.anchor, "missing required parameter")),
            },
            Some(v) => {
                let bad = || {
                    self.ctx
                        .err(&self.key(k), v.span().start, "expected an array of numbers")
                };
                let arr = v.get_ref().as_array().ok_or_else(bad)?;
                arr.iter().map(|x| as_f64(x).ok_or_else(bad)).collect()
            }
        }
    }

    fn finish(&self) -> Result<()> {
        for (k, v) in self.map {
            if !self.used.contains(&k.as_str()) {
                return Err(self.ctx.err(
                    &self.key(k),
                    v.span().start,
                    format!("unknown parameter; expected one of {:?}", self.used),
                ));
            }
        }
        Ok(())
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl ModelSpec {
    /// Validates the spec into a model. `src` is the document the spec was
    /// parsed from (spans are relative to it); `prefix` is prepended to key
    /// names in errors, e.g. `"model."` for a nested table.
    pub fn build(&self, src: &str, prefix: &str) -> Result<LevyModel> {
        let ctx = Ctx { src, prefix };
        let anchor = self.family.span().start;
        let mut p = Params {
            ctx: &ctx,
            map: &self.params,
            used: Vec::new(),
            anchor,
        };
        let jumps = match self.family.get_ref().as_str() {
            "none" => JumpMeasure::None,
            "exponential_tails" => JumpMeasure::ExponentialTails {
                lambda_plus: p.number("lambda_plus", Some(0.0))?,
                alpha_plus: p.number("alpha_plus", Some(1.0))?,
                lambda_minus: p.number("lambda_minus", Some(0.0))?,
                alpha_minus: p.number("alpha_minus", Some(1.0))?,
            },
            "pareto_tails" => JumpMeasure::ParetoTails {
                c_plus: p.number("c_plus", Some(0.0))?,
                beta_plus: p.number("beta_plus", Some(1.0))?,
                c_minus: p.number("c_minus", Some(0.0))?,
                beta_minus: p.number("beta_minus", Some(1.0))?,
                cutoff: p.number("cutoff", None)?,
            },
            "unit_rate_poisson_negative" => JumpMeasure::UnitRatePoissonNegative,
            "log_squared" => JumpMeasure::LogSquared,
            "table" => {
                let x = p.array("x", None)?;
                let plus = p.array("plus", Some(x.len()))?;
                let minus = p.array("minus", Some(x.len()))?;
                let table = TailTable::new(x, plus, minus).map_err(|e| ctx.err("params", anchor, e.to_string()))?;
                JumpMeasure::Table(table)
            }
            other => {
                return Err(ctx.err(
                    "family",
                    anchor,
                    format!(
                        "unknown family `{other}`; expected none, exponential_tails, pareto_tails, \
                         unit_rate_poisson_negative, log_squared or table"
                    ),
                ))
            }
        };
        p.finish()?;

        let sigma2 = self.sigma2.as_ref().map_or(0.0, |s| *s.get_ref());
        let model = match (&self.gamma, &self.drift) {
            (Some(_), Some(d)) => return Err(ctx.err("drift", d.span().start, "give either gamma or drift, not both")),
            (None, Some(d)) => {
                if sigma2 != 0.0 {
                    let s = self.sigma2.as_ref().expect("sigma2 set");
                    return Err(ctx.err("sigma2", s.span().start, "a drift parametrisation needs sigma2 = 0"));
                }
                LevyModel::with_drift(*d.get_ref(), jumps).map_err(|e| ctx.err("drift", d.span().start, e.to_string()))
            }
            (g, None) => {
                let gamma = g.as_ref().map_or(0.0, |g| *g.get_ref());
                let span_of = |s: &Option<Spanned<f64>>| s.as_ref().map_or(anchor, |v| v.span().start);
                LevyModel::new(gamma, sigma2, jumps).map_err(|e| {
                    let msg = e.to_string();
                    let (key, at) = if msg.contains("sigma2") {
                        ("sigma2", span_of(&self.sigma2))
                    } else if msg.contains("gamma") {
                        ("gamma", span_of(g))
                    } else {
                        ("params", anchor)
                    };
                    ctx.err(key, at, msg)
                })
            }
        }?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_err(src: &str) -> (String, usize) {
        match parse_model_spec(src).unwrap_err() {
            Error::Config { key, line, .. } => (key, line),
            e => panic!("expected config error, got {e}"),
        }
    }

    #[test]
    fn parses_each_family() {
        let m = parse_model_spec("family = \"none\"\ngamma = 2\n").unwrap();
        assert_eq!(m, LevyModel::drift_only(2.0).unwrap());

        let m = parse_model_spec("family = \"unit_rate_poisson_negative\"\ndrift = 1.0\n").unwrap();
        assert_eq!(m.bv_drift(), Some(1.0));

        let src = "family = \"exponential_tails\"\ngamma = 0.5\n[params]\nlambda_plus = 1\nalpha_plus = 2.0\n";
        let m = parse_model_spec(src).unwrap();
        assert_eq!(*m.jumps(), JumpMeasure::exponential_plus(1.0, 2.0));

        let src = "family = \"table\"\ngamma = 0.0\n[params]\nx = [1.0]\nplus = [1.0]\n";
        assert!(parse_model_spec(src).is_ok());

        let src = "family = \"pareto_tails\"\nsigma2 = 1\n[params]\nc_plus = 1\nbeta_plus = 1.5\ncutoff = 2\n";
        assert_eq!(parse_model_spec(src).unwrap().sigma2(), 1.0);

        assert!(parse_model_spec("family = \"log_squared\"\ngamma = 1\n").is_ok());
    }

    #[test]
    fn errors_carry_key_and_line() {
        assert_eq!(config_err("family = \"nope\"\n"), ("family".into(), 1));
        assert_eq!(
            config_err("family = \"none\"\ngamma = 1\nbogus = 3\n"),
            ("bogus".into(), 3)
        );
        assert_eq!(
            config_err("family = \"exponential_tails\"\n[params]\nlambda_plus = 1\nalpha_plus = \"x\"\n"),
            ("params.alpha_plus".into(), 4)
        );
        assert_eq!(
            config_err("family = \"exponential_tails\"\n[params]\nlamda_plus = 1\n"),
            ("params.lamda_plus".into(), 3)
        );
        assert_eq!(config_err("\nfamily = \"pareto_tails\"\n"), ("params.cutoff".into(), 2));
        assert_eq!(
            config_err("family = \"none\"\ngamma = 1\nsigma2 = -1\n"),
            ("sigma2".into(), 3)
        );
        assert_eq!(
            config_err("family = \"none\"\ngamma = 1\ndrift = 1\n"),
            ("drift".into(), 3)
        );
        assert_eq!(config_err("family = \"none\"\ngamma = [\n"), ("gamma".into(), 2));
    }
}
