//! Collates artifacts in a directory into one summary table and checks
//! every oracle comparison against its tolerance.

use std::fs;
use std::path::{Path, PathBuf};

use levy_passage::oracles::drift_passage_exact;
use levy_passage::LevyModel;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::artifacts::{table, Sink};
use crate::commands::drift_only_gamma;
use crate::error::CliError;

/// Relative tolerance for exact closed-form comparisons.
pub const EXACT_TOL: f64 = 1e-9;
/// Monte-Carlo comparisons allow this many standard errors.
pub const MC_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub artifact: String,
    pub subcommand: String,
    pub key: String,
    pub value: String,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    /// `PASS`, `MISMATCH` or an informational flag.
    pub status: String,
    pub detail: String,
}

struct Rows<'a> {
    artifact: &'a str,
    subcommand: &'a str,
    out: Vec<ReportRow>,
}

impl Rows<'_> {
    fn info(&mut self, key: &str, value: impl ToString, status: &str, detail: impl Into<String>) {
        self.out.push(ReportRow {
            artifact: self.artifact.to_string(),
            subcommand: self.subcommand.to_string(),
            key: key.to_string(),
            value: value.to_string(),
            expected: None,
            tolerance: None,
            status: status.to_string(),
            detail: detail.into(),
        });
    }

    fn check(&mut self, key: &str, value: f64, expected: f64, tol: f64, detail: impl Into<String>) {
        let ok = (value - expected).abs() <= tol;
        self.out.push(ReportRow {
            artifact: self.artifact.to_string(),
            subcommand: self.subcommand.to_string(),
            key: key.to_string(),
            value: value.to_string(),
            expected: Some(expected),
            tolerance: Some(tol),
            status: if ok { "PASS" } else { "MISMATCH" }.to_string(),
            detail: detail.into(),
        });
    }
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn malformed(path: &Path, msg: &str) -> CliError {
    CliError::Artifact {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    }
}

/// Checks rows of a serialised sweep against the pure-drift oracle.
fn sweep_checks(rows: &mut Rows, model: Option<&LevyModel>, sweep: &Value) {
    let (Some(model), Some(cfg)) = (model, sweep.get("config")) else {
        return;
    };
    let Some(gamma) = drift_only_gamma(model) else {
        return;
    };
    let b = num(&cfg["b"]);
    if cfg["regime"] != "small_time" || cfg["scale"]["kind"] != "norming" {
        return;
    }
    for row in sweep["rows"].as_array().into_iter().flatten() {
        let r = num(&row["r"]);
        let Ok(exact) = drift_passage_exact(gamma, b, r) else {
            continue;
        };
        rows.check(
            "drift_passage_exact",
            num(&row["c_r"]),
            exact,
            EXACT_TOL * exact,
            format!("C(r) at r = {r}"),
        );
        rows.check(
            "drift_passage_ratio",
            num(&row["mean"]),
            1.0,
            EXACT_TOL,
            format!("mean T/C(r) at r = {r}"),
        );
    }
}

fn smallest_r_row(sweep: &Value) -> Option<&Value> {
    sweep["rows"]
        .as_array()?
        .iter()
        .min_by(|a, b| num(&a["r"]).total_cmp(&num(&b["r"])))
}

fn collate(path: &Path, name: &str, doc: &Value) -> Result<Vec<ReportRow>, CliError> {
    let sub = doc["subcommand"]
        .as_str()
        .ok_or_else(|| malformed(path, "missing subcommand"))?;
    let model: Option<LevyModel> = match doc.get("model") {
        Some(Value::Null) | None => None,
        Some(m) => Some(serde_json::from_value(m.clone()).map_err(|e| malformed(path, &e.to_string()))?),
    };
    let result = &doc["result"];
    let mut rows = Rows {
        artifact: name,
        subcommand: sub,
        out: Vec::new(),
    };
    match sub {
        "classify" => {
            rows.info(
                "stability_class",
                result["class_in_probability"].as_str().unwrap_or("?"),
                "INFO",
                result["certificate"].as_str().unwrap_or(""),
            );
            rows.info(
                "stability_class_almost_sure",
                result["class_almost_sure"].as_str().unwrap_or("?"),
                "INFO",
                "",
            );
        }
        "norming" => {
            for row in result["rows"].as_array().into_iter().flatten() {
                let (c, r) = (num(&row["c_r"]), num(&row["r"]));
                let Some(oracle) = row["oracle"].as_f64() else {
                    continue;
                };
                match row["oracle_kind"].as_str() {
                    Some("exact") => rows.check(
                        "drift_passage_exact",
                        c,
                        oracle,
                        EXACT_TOL * oracle,
                        format!("C(r) at r = {r}"),
                    ),
                    _ => rows.info(
                        "log_example_c_ratio",
                        c / oracle,
                        "INFO",
                        format!("C(r)/reference at r = {r}; asymptotic as r -> 0"),
                    ),
                }
            }
        }
        "simulate" => sweep_checks(&mut rows, model.as_ref(), result),
        "converge" => {
            sweep_checks(&mut rows, model.as_ref(), &result["sweep"]);
            for rep in result["convergence"].as_array().into_iter().flatten() {
                let verdict = match rep["verdict"].as_str() {
                    Some("consistent_with_convergence") => "CONSISTENT",
                    Some("not_stable") => "NOT-STABLE",
                    _ => "INCONCLUSIVE",
                };
                let smallest = rep["per_r"]
                    .as_array()
                    .and_then(|v| v.last())
                    .map_or(f64::NAN, |p| num(&p[1]));
                rows.info(
                    &format!("convergence_verdict_delta={}", num(&rep["delta"])),
                    smallest,
                    verdict,
                    "prob_dev at the smallest r",
                );
            }
        }
        "equality" | "overshoot" => {
            let sweep = &result["sweep"];
            sweep_checks(&mut rows, model.as_ref(), sweep);
            if let Some(row) = smallest_r_row(sweep) {
                let (key, v) = if sub == "equality" {
                    ("equality_fraction_smallest_r", num(&row["equality_fraction"]))
                } else {
                    ("overshoot_mean_smallest_r", num(&row["overshoot"]["mean"]))
                };
                rows.info(key, v, "INFO", format!("r = {}", num(&row["r"])));
            }
        }
        "moments" => {
            sweep_checks(&mut rows, model.as_ref(), &result["sweep"]);
            let all: Vec<&Value> = result["rows"].as_array().into_iter().flatten().collect();
            for m in &all {
                if let Some(oracle) = m["oracle"].as_f64() {
                    let se = num(&m["stderr"]);
                    rows.check(
                        "truncated_moment_oracle",
                        num(&m["mean"]),
                        oracle,
                        MC_SIGMAS * se + 1e-12 * oracle.abs(),
                        format!("p = {}, eps = {}, r = {}", num(&m["p"]), num(&m["eps"]), num(&m["r"])),
                    );
                }
            }
            let r_min = all.iter().map(|m| num(&m["r"])).fold(f64::INFINITY, f64::min);
            for m in all.iter().filter(|m| num(&m["r"]) == r_min && num(&m["p"]) == 1.0) {
                rows.info(
                    "truncated_moment_limit",
                    num(&m["normalized"]),
                    "INFO",
                    format!("E(T^eps)/C(r) at r = {r_min}; limit 1 + eps = {}", 1.0 + num(&m["eps"])),
                );
            }
        }
        "oracle" => {
            let evals = result["evaluations"].as_array().map_or(0, Vec::len);
            let failed = result["evaluations"]
                .as_array()
                .into_iter()
                .flatten()
                .filter(|e| !e["error"].is_null())
                .count();
            rows.info(
                "oracle_evaluations",
                evals,
                "INFO",
                format!("{failed} outside their validity range"),
            );
        }
        _ => return Err(malformed(path, &format!("unknown subcommand `{sub}`"))),
    }
    Ok(rows.out)
}

/// Builds the report for `dir` and returns it with the number of mismatches.
pub fn build(dir: &Path) -> Result<(Vec<ReportRow>, String), CliError> {
    let entries = fs::read_dir(dir).map_err(|source| CliError::Read {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "json")
                && !p
                    .file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("report-"))
        })
        .collect();
    files.sort();
    let mut hasher = Sha256::new();
    let mut rows = Vec::new();
    for path in &files {
        let bytes = fs::read(path).map_err(|source| CliError::Read {
            path: path.clone(),
            source,
        })?;
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("").to_string();
        hasher.update(name.as_bytes());
        hasher.update(&bytes);
        let doc: Value = serde_json::from_slice(&bytes).map_err(|e| malformed(path, &e.to_string()))?;
        rows.extend(collate(path, &name, &doc)?);
    }
    Ok((rows, hex::encode(&hasher.finalize()[..6])))
}

pub fn report_cmd(dir: &Path) -> Result<(), CliError> {
    let (rows, hash) = build(dir)?;
    let mismatches = rows.iter().filter(|r| r.status == "MISMATCH").count();
    let s = Sink::new(dir, "report", &hash, "")?;
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.artifact.clone(),
                r.subcommand.clone(),
                r.key.clone(),
                r.value.clone(),
                r.expected.map_or(String::new(), |x| x.to_string()),
                r.tolerance.map_or(String::new(), |x| x.to_string()),
                r.status.clone(),
                r.detail.clone(),
            ]
        })
        .collect();
    s.csv(".csv", |w| {
        table(
            w,
            &[
                "artifact",
                "subcommand",
                "key",
                "value",
                "expected",
                "tolerance",
                "status",
                "detail",
            ],
            &cells,
        )
    })?;
    s.json(
        None,
        None,
        serde_json::json!({ "mismatches": mismatches, "rows": rows }),
    )?;
    for r in &rows {
        eprintln!("{:<10} {:<12} {:<40} {}", r.status, r.subcommand, r.key, r.value);
    }
    if mismatches > 0 {
        return Err(CliError::OracleMismatch(mismatches));
    }
    Ok(())
}
