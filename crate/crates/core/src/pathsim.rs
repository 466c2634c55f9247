//! Exact event-driven simulation of bounded-variation paths and first
//! passage over `r·t^b`.
//!
//! A simulated path is affine between jumps: `X_t = v t + Σ_{τ_i ≤ t} J_i`
//! where the jumps of size `|J| > h` arrive as a compound Poisson process
//! and the slope `v = ν(h)` absorbs the mean of the dropped small jumps.
//! With `h = 0` (finite activity only) the path is exact and `v = d_X`.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Exp1, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LevyModel, SideTail};
use crate::rng::{path_rng, PathRng};
use crate::stability::Regime;

/// Relative time tolerance of the crossing bisection.
pub const TIME_TOL: f64 = 1e-12;
/// Relative slack on boundary comparisons.
pub const BOUNDARY_SLACK: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEvents {
    pub drift_slope: f64,
    pub jumps: Vec<Jump>,
    pub horizon: f64,
    pub cutoff_h: f64,
    /// `horizon · ∫_{|x|≤h} |x| Π(dx)`.
    pub small_jump_bias_bound: f64,
}

impl PathEvents {
    /// `X_t` for `0 <= t <= horizon` (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        let jumps: f64 = self.jumps.iter().take_while(|j| j.time <= t).map(|j| j.size).sum();
        self.drift_slope * t + jumps
    }
}

/// Draws the jumps of size `> h` of a model.
#[derive(Debug, Clone)]
pub struct JumpSampler<'a> {
    plus: SideTail<'a>,
    minus: SideTail<'a>,
    rate_plus: f64,
    rate_minus: f64,
    h: f64,
    slope: f64,
    bias_rate: f64,
}

impl<'a> JumpSampler<'a> {
    pub fn new(model: &'a LevyModel, h: f64) -> Result<Self> {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::domain(
                "sample_path",
                format!("cutoff h must be finite and >= 0, got {h}"),
            ));
        }
        if model.sigma2() > 0.0 {
            return Err(Error::contract(
                "sample_path",
                "paths with a Gaussian component are not simulated event by event",
            ));
        }
        let (plus, minus) = (model.plus(), model.minus());
        let rate = |s: &SideTail| if h == 0.0 { s.mass() } else { s.sampling_tail(h) };
        let (rate_plus, rate_minus) = (rate(&plus), rate(&minus));
        if !(rate_plus.is_finite() && rate_minus.is_finite()) {
            return Err(Error::domain(
                "sample_path",
                format!("Π̄(h) is infinite at h = {h}; choose a larger cutoff"),
            ));
        }
        let slope = if h == 0.0 {
            model
                .bv_drift()
                .expect("finite activity without a Gaussian part has bounded variation")
        } else {
            model.truncated_mean(h)? + plus.sampling_drift_correction(h) - minus.sampling_drift_correction(h)
        };
        let bias_rate = plus.small_jump_mean(h) + minus.small_jump_mean(h);
        Ok(JumpSampler {
            plus,
            minus,
            rate_plus,
            rate_minus,
            h,
            slope,
            bias_rate,
        })
    }

    /// Total rate `Π̄(h)` of simulated jumps.
    pub fn rate(&self) -> f64 {
        self.rate_plus + self.rate_minus
    }

    pub fn drift_slope(&self) -> f64 {
        self.slope
    }

    pub fn cutoff(&self) -> f64 {
        self.h
    }

    /// `horizon · ∫_{|x|≤h} |x| Π(dx)`.
    pub fn bias_bound(&self, horizon: f64) -> f64 {
        if self.bias_rate == 0.0 {
            0.0
        } else {
            horizon * self.bias_rate
        }
    }

    /// Endless time-ordered jump stream. Paths drawn from the same stream
    /// with different horizons share their common prefix.
    pub fn stream<'s>(&'s self, rng: &'s mut PathRng) -> impl Iterator<Item = Jump> + 's {
        let rate = self.rate();
        let mut time = 0.0;
        std::iter::from_fn(move || {
            if rate == 0.0 {
                return None;
            }
            let e: f64 = rng.sample(Exp1);
            time += e / rate;
            let u: f64 = rng.sample(Open01);
            let v: f64 = rng.sample(Open01);
            let size = if u * rate < self.rate_plus {
                self.plus.inverse_tail(v * self.rate_plus, self.h)
            } else {
                -self.minus.inverse_tail(v * self.rate_minus, self.h)
            };
            Some(Jump { time, size })
        })
    }

    pub fn sample_path(&self, rng: &mut PathRng, horizon: f64) -> PathEvents {
        let jumps = self.stream(rng).take_while(|j| j.time <= horizon).collect();
        PathEvents {
            drift_slope: self.slope,
            jumps,
            horizon,
            cutoff_h: self.h,
            small_jump_bias_bound: self.bias_bound(horizon),
        }
    }
}

/// Samples one path on `[0, horizon]` from stream `stream` of `seed`.
pub fn sample_path(model: &LevyModel, seed: u64, stream: u64, horizon: f64, cutoff_h: f64) -> Result<PathEvents> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(
            "sample_path",
            format!("horizon must be finite and > 0, got {horizon}"),
        ));
    }
    let sampler = JumpSampler::new(model, cutoff_h)?;
    Ok(sampler.sample_path(&mut path_rng(seed, stream), horizon))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sided {
    One,
    Two,
}

/// The boundary `t ↦ r t^b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub r: f64,
    pub b: f64,
}

impl Boundary {
    pub fn new(r: f64, b: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain(
                "first_passage",
                format!("r must be finite and > 0, got {r}"),
            ));
        }
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::domain(
                "first_passage",
                format!("b must be finite and >= 0, got {b}"),
            ));
        }
        Ok(Boundary { r, b })
    }

    pub fn at(&self, t: f64) -> f64 {
        if self.b == 0.0 {
            self.r
        } else {
            self.r * t.powf(self.b)
        }
    }

    /// Right derivative at `t`.
    fn slope_at(&self, t: f64) -> f64 {
        if self.b == 0.0 {
            0.0
        } else if self.b == 1.0 {
            self.r
        } else if t == 0.0 {
            if self.b < 1.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            self.r * self.b * t.powf(self.b - 1.0)
        }
    }

    fn exceeded_by(&self, x: f64, t: f64) -> bool {
        let f = self.at(t);
        x > f + BOUNDARY_SLACK * f
    }

    /// First `t ∈ [s, e)` where the affine piece `x0 + v(t − s)` enters
    /// `{x > r t^b}`, taking the infimum of the open crossing set. The flag
    /// is set when the piece already starts strictly above the boundary.
    fn entry(&self, s: f64, e: f64, x0: f64, v: f64) -> Option<(f64, bool)> {
        let d = |t: f64| x0 + v * (t - s) - self.at(t);
        let ds = d(s);
        if ds > BOUNDARY_SLACK * self.at(s) {
            return Some((s, true));
        }
        if ds >= 0.0 && v - self.slope_at(s) > 0.0 {
            return Some((s, false));
        }
        if self.b == 0.0 {
            // linear: one closed-form root
            if v <= 0.0 {
                return None;
            }
            let t = s + (self.r - x0) / v;
            return (t < e && d(e) > BOUNDARY_SLACK * self.r).then_some((t.max(s), false));
        }
        // d is convex for b <= 1 and concave for b > 1; find a point with
        // d > 0 after s, then bisect on a bracket where d <= 0 at the left
        let peak = if self.b <= 1.0 {
            e
        } else {
            if v <= 0.0 {
                return None;
            }
            let t_m = (v / (self.r * self.b)).powf(1.0 / (self.b - 1.0));
            t_m.clamp(s, e)
        };
        if !(d(peak) > BOUNDARY_SLACK * self.at(peak)) {
            return None;
        }
        let (mut lo, mut hi) = (s, peak);
        loop {
            let mid = lo + 0.5 * (hi - lo);
            if hi - lo <= TIME_TOL * hi || mid <= lo || mid >= hi {
                return Some((hi, false));
            }
            if d(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
}

/// A crossing: time and position of the path there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub time: f64,
    pub position: f64,
    pub by_jump: bool,
}

/// One- and two-sided passage of one path, plus its state at the end of
/// the scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Passage {
    pub one_sided: Option<Hit>,
    pub two_sided: Option<Hit>,
    /// Where the scan stopped and `X` there (the horizon when censored).
    pub end_time: f64,
    pub end_position: f64,
}

/// Scans a time-ordered jump sequence for the first passage times
/// `T* = inf{t >= t0: X_t > r t^b}` and `T̄ = inf{t >= t0: |X_t| > r t^b}`,
/// with `t0 = 0` at small times and `t0 = 1` at large times.
pub fn scan<I: IntoIterator<Item = Jump>>(
    jumps: I,
    slope: f64,
    horizon: f64,
    boundary: Boundary,
    regime: Regime,
) -> Result<Passage> {
    let start = match regime {
        Regime::SmallTime => 0.0,
        Regime::LargeTime => {
            if horizon < 1.0 {
                return Err(Error::contract(
                    "first_passage",
                    format!("large-time passage needs horizon >= 1, got {horizon}"),
                ));
            }
            1.0
        }
    };
    let mut one: Option<Hit> = None;
    let mut two: Option<Hit> = None;
    let (mut t, mut x) = (0.0_f64, 0.0_f64);
    let mut jumps = jumps.into_iter();
    loop {
        let next = jumps.next().filter(|j| j.time <= horizon);
        let e = next.map_or(horizon, |j| j.time);
        // affine piece on [max(t, start), e)
        let s = t.max(start);
        if s < e || (s == e && next.is_none() && s == start) {
            let xs = x + slope * (s - t);
            // a creeping crossing sits on the boundary; an entry at the
            // piece start may lie strictly beyond it (large time, t = 1)
            let creep = |hit: Option<(f64, bool)>, sign: f64| {
                hit.map(|(time, strict)| {
                    let position = if strict { xs } else { sign * boundary.at(time) };
                    Hit {
                        time,
                        position,
                        by_jump: false,
                    }
                })
                .filter(|h| h.time <= e)
            };
            let up = if one.is_none() || two.is_none() {
                creep(boundary.entry(s, e, xs, slope), 1.0)
            } else {
                None
            };
            if two.is_none() {
                let down = creep(boundary.entry(s, e, -xs, -slope), -1.0);
                two = match (up, down) {
                    (Some(u), Some(d)) => Some(if d.time < u.time { d } else { u }),
                    (u, d) => u.or(d),
                };
            }
            if one.is_none() {
                one = up;
            }
        }
        let Some(j) = next else {
            let xe = x + slope * (horizon - t);
            return Ok(Passage {
                one_sided: one,
                two_sided: two,
                end_time: horizon,
                end_position: xe,
            });
        };
        x += slope * (j.time - t) + j.size;
        t = j.time;
        if t >= start {
            if one.is_none() && boundary.exceeded_by(x, t) {
                one = Some(Hit {
                    time: t,
                    position: x,
                    by_jump: true,
                });
            }
            if two.is_none() && boundary.exceeded_by(x.abs(), t) {
                two = Some(Hit {
                    time: t,
                    position: x,
                    by_jump: true,
                });
            }
        }
        if one.is_some() && two.is_some() {
            return Ok(Passage {
                one_sided: one,
                two_sided: two,
                end_time: t,
                end_position: x,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageRecord {
    /// `None` when censored.
    pub passage_time: Option<f64>,
    /// `X_T`, or `X` at the horizon when censored.
    pub position: f64,
    /// `r T^b`, or `r·horizon^b` when censored.
    pub boundary_value: f64,
    /// `X_T / (r T^b)` one-sided, `|X_T| / (r T^b)` two-sided; `NaN` when censored.
    pub overshoot_ratio: f64,
    /// `T* = T̄` to relative tolerance [`TIME_TOL`] (both censored counts as equal).
    pub two_sided_equal: bool,
    pub censored: bool,
}

impl Passage {
    pub fn record(&self, boundary: Boundary, sided: Sided) -> PassageRecord {
        let hit = match sided {
            Sided::One => self.one_sided,
            Sided::Two => self.two_sided,
        };
        let two_sided_equal = match (self.one_sided, self.two_sided) {
            (Some(a), Some(b)) => (a.time - b.time).abs() <= TIME_TOL * a.time.max(b.time),
            (None, None) => true,
            _ => false,
        };
        match hit {
            Some(h) => {
                let f = boundary.at(h.time);
                let pos = match sided {
                    Sided::One => h.position,
                    Sided::Two => h.position.abs(),
                };
                PassageRecord {
                    passage_time: Some(h.time),
                    position: h.position,
                    boundary_value: f,
                    overshoot_ratio: pos / f,
                    two_sided_equal,
                    censored: false,
                }
            }
            None => PassageRecord {
                passage_time: None,
                position: self.end_position,
                boundary_value: boundary.at(self.end_time),
                overshoot_ratio: f64::NAN,
                two_sided_equal,
                censored: true,
            },
        }
    }

    pub fn time(&self, sided: Sided) -> Option<f64> {
        match sided {
            Sided::One => self.one_sided.map(|h| h.time),
            Sided::Two => self.two_sided.map(|h| h.time),
        }
    }
}

/// First passage of a sampled path over `r t^b`.
pub fn first_passage(path: &PathEvents, r: f64, b: f64, sided: Sided, regime: Regime) -> Result<PassageRecord> {
    let boundary = Boundary::new(r, b)?;
    let passage = scan(
        path.jumps.iter().copied(),
        path.drift_slope,
        path.horizon,
        boundary,
        regime,
    )?;
    Ok(passage.record(boundary, sided))
}

/// Writes a path as CSV with `#`-prefixed metadata lines.
pub fn write_path_csv<W: Write>(mut w: W, path: &PathEvents, seed: u64, stream: u64) -> io::Result<()> {
    writeln!(w, "# seed={seed}")?;
    writeln!(w, "# stream={stream}")?;
    writeln!(w, "# h={}", path.cutoff_h)?;
    writeln!(w, "# bias_bound={}", path.small_jump_bias_bound)?;
    writeln!(w, "# drift_slope={}", path.drift_slope)?;
    writeln!(w, "# horizon={}", path.horizon)?;
    writeln!(w, "time,size")?;
    for j in &path.jumps {
        writeln!(w, "{},{}", j.time, j.size)?;
    }
    Ok(())
}
