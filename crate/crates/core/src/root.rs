//! Bracketed scalar root finding (Brent's method: bisection safeguarding
//! secant and inverse quadratic interpolation steps).

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root<T> {
    pub x: T,
    pub fx: T,
    pub iterations: usize,
    /// Final bracket width.
    pub width: T,
}

/// Finds a root of `f` in `[a, b]` given `f(a)·f(b) ≤ 0`.
///
/// Stops when the bracket is no wider than `tol · (1 + |x|)`.
pub fn brent<T, F>(mut f: F, a: T, b: T, tol: T, max_iter: usize) -> Result<Root<T>>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let three = T::lit(3.0);

    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == T::zero() {
        return Ok(Root { x: a, fx: fa, iterations: 0, width: T::zero() });
    }
    if fb == T::zero() {
        return Ok(Root { x: b, fx: fb, iterations: 0, width: T::zero() });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoRoot {
            lo: a.as_f64(),
            hi: b.as_f64(),
            delta_lo: fa.as_f64(),
            delta_hi: fb.as_f64(),
        });
    }

    let mut c = a;
    let mut fc = fa;
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
        let tol1 = two * T::epsilon() * b.abs() + half * tol * (T::one() + b.abs());
        let m = half * (c - b);
        if m.abs() <= tol1 || fb == T::zero() {
            return Ok(Root { x: b, fx: fb, iterations: iter, width: (c - b).abs() });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                // secant
                p = two * m * s;
                q = T::one() - s;
            } else {
                // inverse quadratic interpolation
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (three * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol1 { b + d } else { b + tol1 * m.signum() };
        fb = f(b)?;
    }
    Err(Error::Numerical(format!(
        "root finder did not converge in {max_iter} iterations (bracket [{a}, {c}])"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = brent(|x: f64| Ok(x * x - 2.0), 0.0, 2.0, 1e-14, 100).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn endpoint_root_short_circuits() {
        let r = brent(|x: f64| Ok(x - 1.0), 1.0, 3.0, 1e-12, 100).unwrap();
        assert_eq!(r.x, 1.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn same_sign_is_no_root() {
        let err = brent(|x: f64| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 100).unwrap_err();
        assert!(matches!(err, Error::NoRoot { .. }));
    }

    #[test]
    fn handles_flat_then_steep() {
        let r = brent(|x: f64| Ok((x - 0.3).powi(3)), 0.0, 10.0, 1e-12, 200).unwrap();
        assert!((r.x - 0.3).abs() < 1e-4);
    }
}
