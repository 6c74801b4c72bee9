//! One-dimensional bracketing searches used to refine grid features.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimisation of `f` on `[lo, hi]`, stopping once the
/// bracket is narrower than `tol`.
pub fn golden_min<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while (hi - lo).abs() > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
        // bracket stopped shrinking in floating point
        if x1 >= x2 {
            break;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Golden-section maximisation.
pub fn golden_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (x, v) = golden_min(|x| f(x).map(|v| -v), lo, hi, tol)?;
    Ok((x, -v))
}

/// Bisection for a sign change of `f` between `lo` and `hi`.
///
/// The caller guarantees `f(lo)` and `f(hi)` have opposite signs.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f_lo = f(lo)?;
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let f_mid = f(mid)?;
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
