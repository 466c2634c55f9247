//! Closed-form and brute-force reference values.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathsim::Sided;
use crate::rng::path_rng;

/// Passage time of `r t^b` by the pure drift `γ t`: `(r/γ)^{1/(1-b)}`.
pub fn drift_passage_exact(gamma: f64, b: f64, r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&b) {
        return Err(Error::domain(
            "drift_passage_exact",
            format!("b must lie in [0, 1), got {b}"),
        ));
    }
    if !(gamma > 0.0 && r > 0.0) {
        return Err(Error::domain("drift_passage_exact", "need gamma > 0 and r > 0"));
    }
    Ok((r / gamma).powf(1.0 / (1.0 - b)))
}

/// `E(T ∧ ε)^p` for `X_t = a t − N_t`, valid while the passage happens
/// before the first jump can matter: `ε < 1/a` and `(r/a)^{1/(1-b)} < ε`.
pub fn poisson_drift_truncated_moment(a: f64, b: f64, p: f64, eps: f64, r: f64) -> Result<f64> {
    let op = "poisson_drift_truncated_moment";
    if !(0.0..1.0).contains(&b) || !(a > 0.0 && p > 0.0 && eps > 0.0 && r > 0.0) {
        return Err(Error::domain(op, "need a, p, eps, r > 0 and b in [0, 1)"));
    }
    let c = (r / a).powf(1.0 / (1.0 - b));
    if eps >= 1.0 / a {
        return Err(Error::Range {
            op,
            value: eps,
            lo: 0.0,
            hi: 1.0 / a,
        });
    }
    if c >= eps {
        return Err(Error::Range {
            op,
            value: c,
            lo: 0.0,
            hi: eps,
        });
    }
    let survive = (-c).exp();
    Ok(c.powf(p) * survive + eps.powf(p) * (-(-c).exp_m1()))
}

/// `C(r) = ((1-b)^{-1} r |log r|)^{1/(1-b)}` for the logarithmic-tail example.
pub fn log_example_c(b: f64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain("log_example_c", format!("r must lie in (0, 1), got {r}")));
    }
    if !(0.0..1.0).contains(&b) {
        return Err(Error::domain("log_example_c", format!("b must lie in [0, 1), got {b}")));
    }
    Ok((r * r.ln().abs() / (1.0 - b)).powf(1.0 / (1.0 - b)))
}

pub const MAX_SKELETON_STEPS: usize = 20;
pub const MAX_SUPPORT: usize = 4;
pub const MAX_SEQUENCES: f64 = 1e7;

/// A random walk observed at times `k·dt`, `k = 1..=steps`, with i.i.d.
/// increments from a finite distribution `(value, probability)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub steps: usize,
    pub dt: f64,
    pub increments: Vec<(f64, f64)>,
}

impl Skeleton {
    pub fn validate(&self) -> Result<()> {
        let op = "brute_force_small_instance";
        if self.steps == 0 || self.steps > MAX_SKELETON_STEPS {
            return Err(Error::domain(op, format!("steps must lie in 1..={MAX_SKELETON_STEPS}")));
        }
        if self.increments.is_empty() || self.increments.len() > MAX_SUPPORT {
            return Err(Error::domain(op, format!("need 1..={MAX_SUPPORT} support points")));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain(op, "dt must be finite and > 0"));
        }
        if self.increments.iter().any(|&(v, p)| !v.is_finite() || !(p > 0.0)) {
            return Err(Error::domain(
                op,
                "increments need finite values and positive probabilities",
            ));
        }
        let total: f64 = self.increments.iter().map(|x| x.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(op, format!("probabilities sum to {total}, not 1")));
        }
        let count = (self.increments.len() as f64).powi(self.steps as i32);
        if count > MAX_SEQUENCES {
            return Err(Error::Size {
                op,
                count: count as u128,
                limit: MAX_SEQUENCES as u128,
            });
        }
        Ok(())
    }

    fn crossed(x: f64, k: usize, dt: f64, r: f64, b: f64, sided: Sided) -> bool {
        let f = r * (k as f64 * dt).powf(b);
        match sided {
            Sided::One => x > f,
            Sided::Two => x.abs() > f,
        }
    }
}

/// Law of the first step `k` with `X_k > r (k dt)^b` (`|X_k|` two-sided).
/// Entry `steps` of the result holds the probability of no passage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageLaw {
    /// `probabilities[k-1] = P(T = k)` for `k = 1..=steps`.
    pub probabilities: Vec<f64>,
    pub censored: f64,
}

/// Exact passage law by enumerating every increment sequence.
pub fn brute_force_small_instance(skel: &Skeleton, r: f64, b: f64, sided: Sided) -> Result<PassageLaw> {
    skel.validate()?;
    let mut law = PassageLaw {
        probabilities: vec![0.0; skel.steps],
        censored: 0.0,
    };
    // depth-first, pruning at the passage step
    #[allow(clippy::too_many_arguments)]
    fn walk(skel: &Skeleton, r: f64, b: f64, sided: Sided, k: usize, x: f64, p: f64, law: &mut PassageLaw) {
        if k == skel.steps {
            law.censored += p;
            return;
        }
        for &(v, q) in &skel.increments {
            let y = x + v;
            if Skeleton::crossed(y, k + 1, skel.dt, r, b, sided) {
                law.probabilities[k] += p * q;
            } else {
                walk(skel, r, b, sided, k + 1, y, p * q, law);
            }
        }
    }
    walk(skel, r, b, sided, 0, 0.0, 1.0, &mut law);
    Ok(law)
}

/// Monte-Carlo estimate of the same law, path `i` on stream `i` of `seed`.
pub fn skeleton_monte_carlo(skel: &Skeleton, r: f64, b: f64, sided: Sided, n: usize, seed: u64) -> Result<PassageLaw> {
    skel.validate()?;
    if n == 0 {
        return Err(Error::domain("skeleton_monte_carlo", "n must be positive"));
    }
    let steps: Vec<Option<usize>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut x = 0.0;
            for k in 1..=skel.steps {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut v = skel.increments[skel.increments.len() - 1].0;
                for &(val, q) in &skel.increments {
                    acc += q;
                    if u < acc {
                        v = val;
                        break;
                    }
                }
                x += v;
                if Skeleton::crossed(x, k, skel.dt, r, b, sided) {
                    return Some(k);
                }
            }
            None
        })
        .collect();
    let mut counts = vec![0usize; skel.steps + 1];
    for s in steps {
        counts[s.map_or(skel.steps, |k| k - 1)] += 1;
    }
    let censored = counts.pop().unwrap_or(0);
    let w = n as f64;
    Ok(PassageLaw {
        probabilities: counts.iter().map(|&c| c as f64 / w).collect(),
        censored: censored as f64 / w,
    })
}

/// Catalogue metadata for an oracle.
#[derive(Debug, Clone, Serialize)]
pub struct OracleCase {
    pub name: &'static str,
    pub formula: &'static str,
    pub validity: &'static str,
    pub note: &'static str,
}

pub fn catalogue() -> Vec<OracleCase> {
    vec![
        OracleCase {
            name: "drift_passage_exact",
            formula: "(r/gamma)^(1/(1-b))",
            validity: "gamma > 0, 0 <= b < 1, r > 0",
            note: "passage time of a pure positive drift; also C(r) for any bounded-variation model with drift gamma",
        },
        OracleCase {
            name: "poisson_drift_truncated_moment",
            formula: "c^p e^(-c) + eps^p (1 - e^(-c)), c = (r/a)^(1/(1-b))",
            validity: "eps < 1/a and c < eps",
            note: "X_t = a t - N_t with N a unit-rate Poisson process",
        },
        OracleCase {
            name: "log_example_c",
            formula: "((1-b)^(-1) r |log r|)^(1/(1-b))",
            validity: "0 < r < 1, 0 <= b < 1",
            note: "norming C(r) of the logarithmic-tail example",
        },
        OracleCase {
            name: "brute_force_small_instance",
            formula: "exact enumeration of first passage over a random-walk skeleton",
            validity: "<= 20 steps, <= 4 support points, <= 1e7 sequences",
            note: "checks harness plumbing, not continuum limits",
        },
    ]
}

/// One oracle evaluation, as emitted by the `oracle` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEvaluation {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub value: Option<f64>,
    pub error: Option<String>,
}

impl OracleEvaluation {
    pub fn new(name: &str, inputs: &[(&str, f64)], result: Result<f64>) -> Self {
        let (value, error) = match result {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        OracleEvaluation {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
            error,
        }
    }
}

/// Evaluates the closed-form oracles at the reference inputs.
pub fn reference_evaluations() -> Vec<OracleEvaluation> {
    let mut out = Vec::new();
    for (g, b, r) in [(2.0, 0.0, 1.0), (1.0, 0.5, 0.5), (1.0, 0.9, 0.1)] {
        out.push(OracleEvaluation::new(
            "drift_passage_exact",
            &[("gamma", g), ("b", b), ("r", r)],
            drift_passage_exact(g, b, r),
        ));
    }
    for (p, r) in [(1.0, 0.1), (1.0, 1e-6), (2.0, 1e-2), (2.0, 1e-3)] {
        out.push(OracleEvaluation::new(
            "poisson_drift_truncated_moment",
            &[("a", 1.0), ("b", 0.0), ("p", p), ("eps", 0.5), ("r", r)],
            poisson_drift_truncated_moment(1.0, 0.0, p, 0.5, r),
        ));
    }
    for (b, r) in [(0.0, (-1f64).exp()), (0.5, 1e-4), (0.5, 1e-2), (0.5, 1e-6)] {
        out.push(OracleEvaluation::new(
            "log_example_c",
            &[("b", b), ("r", r)],
            log_example_c(b, r),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_passage_values() {
        assert_eq!(drift_passage_exact(2.0, 0.0, 1.0).unwrap(), 0.5);
        assert!((drift_passage_exact(1.0, 0.5, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((drift_passage_exact(1.0, 0.9, 0.1).unwrap() / 1e-10 - 1.0).abs() < 1e-9);
        assert!(drift_passage_exact(1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn poisson_moment_values() {
        let v = poisson_drift_truncated_moment(1.0, 0.0, 1.0, 0.5, 0.1).unwrap();
        assert!((v - 0.138_065_03).abs() < 1e-8);
        let r = 1e-6;
        let v = poisson_drift_truncated_moment(1.0, 0.0, 1.0, 0.5, r).unwrap();
        assert!((v / r / 1.5 - 1.0).abs() < 1e-4);
        let lo = poisson_drift_truncated_moment(1.0, 0.0, 2.0, 0.5, 1e-2).unwrap() / 1e-4;
        let hi = poisson_drift_truncated_moment(1.0, 0.0, 2.0, 0.5, 1e-3).unwrap() / 1e-6;
        assert!(hi >= 5.0 * lo);
        assert!(matches!(
            poisson_drift_truncated_moment(1.0, 0.0, 1.0, 1.5, 0.1),
            Err(Error::Range { .. })
        ));
        assert!(matches!(
            poisson_drift_truncated_moment(1.0, 0.0, 1.0, 0.5, 0.6),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn log_example_values() {
        let e1 = (-1f64).exp();
        assert!((log_example_c(0.0, e1).unwrap() - e1).abs() < 1e-15);
        let v = log_example_c(0.5, 1e-4).unwrap();
        assert!((v / 3.3932e-6 - 1.0).abs() < 1e-4);
        let ratio = |r: f64| log_example_c(0.5, r).unwrap() / (r * r);
        assert!(ratio(1e-2) < ratio(1e-4) && ratio(1e-4) < ratio(1e-6));
        assert!(log_example_c(0.5, 1.0).is_err());
    }

    #[test]
    fn brute_force_trivial_walks() {
        let coin = Skeleton {
            steps: 2,
            dt: 1.0,
            increments: vec![(1.0, 0.5), (-1.0, 0.5)],
        };
        let law = brute_force_small_instance(&coin, 0.5, 0.0, Sided::One).unwrap();
        assert_eq!(law.probabilities[0], 0.5);
        let up = Skeleton {
            steps: 5,
            dt: 1.0,
            increments: vec![(1.0, 1.0)],
        };
        let law = brute_force_small_instance(&up, 2.5, 0.0, Sided::One).unwrap();
        assert_eq!(law.probabilities, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(law.censored, 0.0);
    }

    #[test]
    fn brute_force_rejects_large_instances() {
        let big = Skeleton {
            steps: 20,
            dt: 1.0,
            increments: vec![(1.0, 0.25), (2.0, 0.25), (3.0, 0.25), (4.0, 0.25)],
        };
        assert!(matches!(
            brute_force_small_instance(&big, 1.0, 0.0, Sided::One),
            Err(Error::Size { .. })
        ));
        let bad = Skeleton {
            steps: 21,
            dt: 1.0,
            increments: vec![(1.0, 1.0)],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn enumeration_matches_sampling() {
        let skel = Skeleton {
            steps: 10,
            dt: 1.0,
            increments: vec![(1.0, 0.9), (-9.0, 0.1)],
        };
        let exact = brute_force_small_instance(&skel, 0.5, 0.0, Sided::One).unwrap();
        let total: f64 = exact.probabilities.iter().sum::<f64>() + exact.censored;
        assert!((total - 1.0).abs() < 1e-12);
        let n = 200_000;
        let mc = skeleton_monte_carlo(&skel, 0.5, 0.0, Sided::One, n, 9).unwrap();
        for (p, q) in exact.probabilities.iter().zip(&mc.probabilities) {
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((p - q).abs() <= 3.0 * se + 1e-12, "{p} vs {q}");
        }
    }
}
