//! Bracketing root finders.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]` for a function with `f(lo) < 0 <= f(hi)` (or the
/// mirror image). Stops when the bracket is narrower than
/// `rel_tol * max(|lo|, |hi|)` and returns the upper end of the final
/// bracket, so the result always satisfies the `>= 0` side.
pub fn bisect<F: FnMut(f64) -> f64>(op: &'static str, mut f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo.is_nan() || fhi.is_nan() {
        return Err(Error::numerical(op, format!("NaN at bracket ends [{lo}, {hi}]")));
    }
    if (flo < 0.0) == (fhi < 0.0) {
        return Err(Error::Solver {
            op,
            msg: format!("no sign change on [{lo}, {hi}]"),
            trace: vec![lo, flo, hi, fhi],
        });
    }
    let increasing = flo < 0.0;
    for _ in 0..2000 {
        if (hi - lo) <= rel_tol * lo.abs().max(hi.abs()) {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm.is_nan() {
            return Err(Error::numerical(op, format!("NaN at {mid}")));
        }
        if (fm < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if increasing { hi } else { lo })
}

/// Bisection in `log x` over `[lo, hi] ⊂ (0, ∞)`; `rel_tol` applies to `x`.
pub fn bisect_log<F: FnMut(f64) -> f64>(op: &'static str, mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::domain(
            op,
            format!("log bracket needs 0 < lo < hi, got [{lo}, {hi}]"),
        ));
    }
    // bracket width in log space; absolute tolerance on log x is rel_tol
    let (a, b) = (lo.ln(), hi.ln());
    let scale = a.abs().max(b.abs()).max(1.0);
    let l = bisect(op, |u| f(u.exp()), a, b, rel_tol / scale)?;
    Ok(l.exp())
}
