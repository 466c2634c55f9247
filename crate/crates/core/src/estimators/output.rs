//! CSV forms of [`ExperimentResult`]. Column order is documented in
//! `docs/csv_schema.md`.

use std::io::Write;

use super::{ExperimentResult, RowStats};

/// Normal 97.5% quantile for the long form's intervals.
const Z95: f64 = 1.959_963_984_540_054;

fn fmt_delta(d: f64) -> String {
    format!("{d}")
}

pub fn wide_csv_header(result: &ExperimentResult) -> Vec<String> {
    let mut h: Vec<String> = [
        "r",
        "c_r",
        "horizon",
        "n_paths",
        "n_censored",
        "censor_warning",
        "mean",
        "stderr",
        "q05",
        "q25",
        "q50",
        "q75",
        "q95",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for d in &result.config.deltas {
        h.push(format!("prob_dev_{}", fmt_delta(*d)));
    }
    h.extend(
        [
            "equality_fraction",
            "overshoot_mean",
            "overshoot_stderr",
            "overshoot_q50",
            "overshoot_q95",
            "x_over_b_t",
            "x_over_b_c",
            "x_over_r_c",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    for m in &result.config.moments {
        let tag = format!("moment_p{}_eps{}", m.p, m.eps);
        for suffix in ["mean", "stderr", "normalized", "normalized_stderr"] {
            h.push(format!("{tag}_{suffix}"));
        }
    }
    h.extend(["cutoff_h", "bias_bound", "bias_warning"].iter().map(|s| s.to_string()));
    h
}

fn wide_row(row: &RowStats) -> Vec<String> {
    let mut v = vec![
        row.r.to_string(),
        row.c_r.to_string(),
        row.horizon.to_string(),
        row.n_paths.to_string(),
        row.n_censored.to_string(),
        row.censor_warning.to_string(),
        row.mean.to_string(),
        row.stderr.to_string(),
    ];
    v.extend(row.quantiles.iter().map(f64::to_string));
    v.extend(row.prob_dev.iter().map(|d| d.fraction.to_string()));
    let o = &row.overshoot;
    v.extend(
        [
            row.equality_fraction,
            o.mean,
            o.stderr,
            o.q50,
            o.q95,
            o.x_over_b_t,
            o.x_over_b_c,
            o.x_over_r_c,
        ]
        .iter()
        .map(f64::to_string),
    );
    for m in &row.moments {
        v.extend(
            [m.mean, m.stderr, m.normalized, m.normalized_stderr]
                .iter()
                .map(f64::to_string),
        );
    }
    v.push(row.cutoff_h.to_string());
    v.push(row.bias_bound.to_string());
    v.push(row.bias_warning.to_string());
    v
}

/// One row per `r`.
pub fn wide_csv<W: Write>(w: W, result: &ExperimentResult) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(wide_csv_header(result))?;
    for row in &result.rows {
        out.write_record(wide_row(row))?;
    }
    out.flush()?;
    Ok(())
}

/// One row per `(r, statistic)` with a normal 95% interval where a
/// standard error is available.
pub fn long_csv<W: Write>(w: W, result: &ExperimentResult) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["r", "statistic", "value", "lo", "hi"])?;
    for row in &result.rows {
        let r = row.r.to_string();
        let mut emit = |name: String, value: f64, se: Option<f64>| -> csv::Result<()> {
            let (lo, hi) = match se {
                Some(se) if se.is_finite() => ((value - Z95 * se).to_string(), (value + Z95 * se).to_string()),
                _ => (String::new(), String::new()),
            };
            out.write_record([r.clone(), name, value.to_string(), lo, hi])
        };
        let n = row.n_paths;
        emit("c_r".into(), row.c_r, None)?;
        emit("mean".into(), row.mean, Some(row.stderr))?;
        for (q, v) in ["q05", "q25", "q50", "q75", "q95"].iter().zip(row.quantiles) {
            emit(q.to_string(), v, None)?;
        }
        emit("censored_fraction".into(), row.n_censored as f64 / n as f64, None)?;
        for d in &row.prob_dev {
            let se = super::stats::fraction_stderr(d.fraction, n);
            emit(format!("prob_dev_{}", fmt_delta(d.delta)), d.fraction, Some(se))?;
        }
        let eq_se = super::stats::fraction_stderr(row.equality_fraction, n);
        emit("equality_fraction".into(), row.equality_fraction, Some(eq_se))?;
        emit("overshoot_mean".into(), row.overshoot.mean, Some(row.overshoot.stderr))?;
        emit("overshoot_q95".into(), row.overshoot.q95, None)?;
        for m in &row.moments {
            let tag = format!("moment_p{}_eps{}", m.p, m.eps);
            emit(format!("{tag}_mean"), m.mean, Some(m.stderr))?;
            emit(format!("{tag}_normalized"), m.normalized, Some(m.normalized_stderr))?;
        }
        emit("bias_bound".into(), row.bias_bound, None)?;
    }
    out.flush()?;
    Ok(())
}
