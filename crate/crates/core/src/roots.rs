//! Bracketed scalar root finding.
//!
//! The solvers find their roots by bisection on a sign-change bracket: the
//! functions involved are cheap and bisection never leaves the bracket.

use crate::error::{Error, Result};

/// Default absolute tolerance used by the solvers (scaled units).
pub const ABS_TOL: f64 = 1e-12;

const MAX_ITER: usize = 400;

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs
/// (or one of them vanishes). Stops when the bracket is narrower than `tol`.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::BracketFailure(format!("bad interval [{lo}, {hi}]")));
    }
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return Err(Error::BracketFailure(format!(
            "no sign change on [{lo}, {hi}]: f = ({flo:e}, {fhi:e})"
        )));
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Like [`bisect`] but for a predicate that is `false` at `lo` and `true` at
/// `hi`; returns the bracket `(lo, hi)` around the transition.
pub fn bisect_predicate<P>(pred: P, mut lo: f64, mut hi: f64, iterations: usize) -> (f64, f64)
where
    P: Fn(f64) -> bool,
{
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Scans `[lo, hi]` on `n` equal steps for the first sub-interval on which
/// `f` changes sign and bisects it. `f` may return `None` where it is
/// undefined; such points break the bracket.
pub fn first_root_scan<F>(f: F, lo: f64, hi: f64, n: usize, tol: f64) -> Option<f64>
where
    F: Fn(f64) -> Option<f64>,
{
    if hi.is_nan() || lo.is_nan() || hi < lo || n == 0 {
        return None;
    }
    let step = (hi - lo) / n as f64;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let x = if i == n { hi } else { lo + step * i as f64 };
        match f(x) {
            Some(0.0) => return Some(x),
            Some(v) => {
                if let Some((px, pv)) = prev {
                    if pv.signum() != v.signum() {
                        let g = |t: f64| f(t).unwrap_or(f64::NAN);
                        if let Ok(r) = bisect_defined(&g, px, x, tol) {
                            return Some(r);
                        }
                    }
                }
                prev = Some((x, v));
            }
            None => prev = None,
        }
    }
    None
}

// Bisection that tolerates NaN in the interior by treating it as a failure.
fn bisect_defined<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let r = bisect(f, lo, hi, tol)?;
    if f(r).is_nan() {
        return Err(Error::BracketFailure("undefined inside bracket".into()));
    }
    Ok(r)
}
