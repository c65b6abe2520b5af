//! Scalar root finding: bracketed bisection, a safeguarded Newton/bisection
//! hybrid, and golden-section extremum search.

use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket. Runs until the bracket is narrower
/// than `tol` or the midpoint can no longer be represented between the ends.
pub fn bisect<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::SolverFailure(format!(
            "bracket [{a}, {b}] does not change sign"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol || m <= a.min(b) || m >= a.max(b) {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Bisection returning the final bracket `(lo, hi)` with `pred(lo) != pred(hi)`.
/// Used where the "sign" is a discrete property (a jump, a region label).
pub fn bisect_predicate<P>(mut pred: P, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    P: FnMut(f64) -> bool,
{
    let p_lo = pred(lo);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || m <= lo.min(hi) || m >= lo.max(hi) {
            break;
        }
        if pred(m) == p_lo {
            lo = m;
        } else {
            hi = m;
        }
    }
    (lo, hi)
}

/// Newton iteration safeguarded by a bracket: falls back to bisection
/// whenever the Newton step leaves the bracket or stalls.
pub fn newton_bracketed<F>(mut fdf: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (fa, _) = fdf(a);
    let (fb, _) = fdf(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::SolverFailure(format!(
            "bracket [{a}, {b}] does not change sign"
        )));
    }
    // Orient so that f(lo) < 0 < f(hi).
    let (mut lo, mut hi) = if fa < 0.0 { (a, b) } else { (b, a) };
    let mut x = 0.5 * (a + b);
    let mut dx_old = (b - a).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = fdf(x);
    for _ in 0..200 {
        let newton_out = ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) > 0.0;
        let slow = (2.0 * fx).abs() > (dx_old * dfx).abs();
        dx_old = dx;
        if newton_out || slow || !dfx.is_finite() || dfx == 0.0 {
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        } else {
            dx = fx / dfx;
            x -= dx;
        }
        if dx.abs() <= tol || (hi - lo).abs() <= tol {
            return Ok(x);
        }
        let r = fdf(x);
        fx = r.0;
        dfx = r.1;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    Ok(x)
}

/// Golden-section search for a maximum of a unimodal function on `[a, b]`.
pub fn golden_max<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Least-squares line fit `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
