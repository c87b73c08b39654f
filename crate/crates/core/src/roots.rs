//! Scalar roots of monotone functions.

use crate::{Error, Result};

pub(crate) const ROOT_TOL: f64 = 1e-12;
const MAX_BISECTIONS: usize = 400;

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs.
/// Stops when the bracket is narrower than `tol` or collapses to adjacent floats.
pub(crate) fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoConvergence { iterations: 0, residual: f_lo.abs().min(f_hi.abs()) });
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root of an increasing function on `[0, ∞)` with `f(0) <= 0`; the upper
/// bracket is grown geometrically from 1.
pub(crate) fn increasing_root<F: FnMut(f64) -> f64>(mut f: F, tol: f64) -> Result<f64> {
    if f(0.0) >= 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut grown = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        grown += 1;
        if grown > 1100 {
            return Err(Error::NoConvergence { iterations: grown, residual: f64::INFINITY });
        }
    }
    bisect(f, 0.0, hi, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - core::f64::consts::SQRT_2).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn increasing_root_grows_bracket() {
        let r = increasing_root(|x| x - 1000.5, 1e-12).unwrap();
        assert!((r - 1000.5).abs() < 1e-9);
    }
}
