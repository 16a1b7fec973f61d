//! Bracketing root finder (Brent: inverse quadratic / secant steps with bisection fallback).

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrentRoot {
    pub root: f64,
    pub value: f64,
    pub iterations: usize,
    /// Final bracket; contains `root`.
    pub bracket: (f64, f64),
}

/// Finds a zero of `f` in `[lo, hi]` given `f(lo)` and `f(hi)` of opposite sign.
///
/// Stops when the bracket is narrower than `2 * (4 eps |x| + xtol)` or `f` vanishes.
pub fn brent<F>(mut f: F, lo: f64, hi: f64, f_lo: f64, f_hi: f64, xtol: f64, max_iter: usize) -> Result<BrentRoot>
where
    F: FnMut(f64) -> Result<f64>,
{
    if f_lo == 0.0 {
        return Ok(BrentRoot { root: lo, value: 0.0, iterations: 0, bracket: (lo, lo) });
    }
    if f_hi == 0.0 {
        return Ok(BrentRoot { root: hi, value: 0.0, iterations: 0, bracket: (hi, hi) });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    let (mut a, mut b, mut fa, mut fb) = (lo, hi, f_lo, f_hi);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            let bracket = if b < c { (b, c) } else { (c, b) };
            return Ok(BrentRoot { root: b, value: fb, iterations: iter - 1, bracket });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Err(Error::MaxIterations { lo, hi, iterations: max_iter })
}
