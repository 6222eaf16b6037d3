use crate::error::{ensure_len, Error, Result};
use crate::root::brent;
use crate::scalar::Real;
use crate::spectral::{RotatedResponse, SpectralCache};

use super::mm::VarianceEstimate;
use super::{check_positive_gamma, delta_unchecked, loglik_unchecked, noise_variance};

/// Bracketing and stopping rules for [`solve_gamma_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions<T> {
    /// Initial bracket.
    pub bracket: (T, T),
    /// The bracket is expanded geometrically up to these limits.
    pub limits: (T, T),
    pub expansion: T,
    /// Bracket width tolerance, relative to `1 + γ`.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for RootOptions<T> {
    fn default() -> Self {
        Self {
            bracket: (T::lit(0.01), T::lit(100.0)),
            limits: (T::lit(1e-6), T::lit(1e4)),
            expansion: T::lit(10.0),
            tol: T::lit(1e-10),
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaRoot<T> {
    pub gamma: T,
    /// `Δ(γ̂)`
    pub delta: T,
    /// The sign-changing bracket handed to the root finder.
    pub bracket: (T, T),
    pub iterations: usize,
}

/// Solves `Δ(γ) = 0`.
///
/// The initial bracket is widened by `expansion` on both sides until `Δ`
/// changes sign or the limits are reached, in which case
/// [`Error::NoRoot`] reports `Δ` at the outermost probes. The lower side is
/// searched first, so with several roots the one found is not necessarily
/// the smallest; use [`scan_delta`] to inspect the curve.
pub fn solve_gamma_root<T: Real>(
    cache: &SpectralCache<T>,
    y: &RotatedResponse<T>,
    opts: &RootOptions<T>,
) -> Result<GammaRoot<T>> {
    ensure_len(cache.n(), y.len())?;
    let (lo0, hi0) = opts.bracket;
    let (min, max) = opts.limits;
    check_positive_gamma(lo0)?;
    check_positive_gamma(min)?;
    if !(lo0 < hi0 && min <= lo0 && hi0 <= max && max.is_finite()) {
        return Err(Error::invalid(format!(
            "need 0 < {min} <= {lo0} < {hi0} <= {max} for the root bracket"
        )));
    }
    if !(opts.expansion > T::one()) {
        return Err(Error::invalid("bracket expansion factor must exceed 1"));
    }
    let yv = y.values();
    let f = |g: T| delta_unchecked(cache, yv, g);

    let (mut lo, mut hi) = (lo0, hi0);
    let (mut f_lo, mut f_hi) = (f(lo)?, f(hi)?);
    if f_lo.abs() <= opts.tol {
        return Ok(GammaRoot { gamma: lo, delta: f_lo, bracket: (lo, lo), iterations: 0 });
    }

    let bracket = loop {
        if f_lo.signum() != f_hi.signum() || f_hi == T::zero() {
            break (lo, hi);
        }
        let mut moved = false;
        if lo > min {
            let next = (lo / opts.expansion).max(min);
            let f_next = f(next)?;
            if f_next.signum() != f_lo.signum() || f_next == T::zero() {
                break (next, lo);
            }
            lo = next;
            f_lo = f_next;
            moved = true;
        }
        if hi < max {
            let next = (hi * opts.expansion).min(max);
            let f_next = f(next)?;
            if f_next.signum() != f_hi.signum() || f_next == T::zero() {
                break (hi, next);
            }
            hi = next;
            f_hi = f_next;
            moved = true;
        }
        if !moved {
            return Err(Error::NoRoot {
                lo: lo.as_f64(),
                hi: hi.as_f64(),
                delta_lo: f_lo.as_f64(),
                delta_hi: f_hi.as_f64(),
            });
        }
    };

    let root = brent(f, bracket.0, bracket.1, opts.tol, opts.max_iter)?;
    Ok(GammaRoot {
        gamma: root.x,
        delta: root.fx,
        bracket,
        iterations: root.iterations,
    })
}

/// Fits through the root of `Δ` and `σ̂_ε² = n⁻¹ yᵀV_γ̂⁻¹y`.
///
/// When `Δ` has no sign change inside the limits the estimate is placed on the
/// boundary `γ̂ = 0` with `boundary = true`.
pub fn fit_by_root<T: Real>(
    cache: &SpectralCache<T>,
    y: &RotatedResponse<T>,
    opts: &RootOptions<T>,
) -> Result<VarianceEstimate<T>> {
    let (gamma, iterations, boundary) = match solve_gamma_root(cache, y, opts) {
        Ok(r) => (r.gamma, r.iterations, false),
        Err(Error::NoRoot { .. }) => (T::zero(), 0, true),
        Err(e) => return Err(e),
    };
    let se = noise_variance(cache, y, gamma)?;
    let sa = gamma * se;
    Ok(VarianceEstimate {
        sigma_eps_sq: se,
        sigma_alpha_sq: sa,
        gamma_hat: gamma,
        iterations,
        converged: true,
        boundary,
        final_loglik: loglik_unchecked(cache, y.values(), se, sa),
        path: None,
    })
}

/// `(γ, Δ(γ))` over a grid of positive `γ`.
pub fn scan_delta<T: Real>(
    cache: &SpectralCache<T>,
    y: &RotatedResponse<T>,
    grid: &[T],
) -> Result<Vec<(T, T)>> {
    ensure_len(cache.n(), y.len())?;
    grid.iter()
        .map(|&g| {
            check_positive_gamma(g)?;
            Ok((g, delta_unchecked(cache, y.values(), g)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignMatrix;
    use crate::spectral::decompose;

    /// Builds data whose `Δ` vanishes exactly at a known `γ` by choosing `ỹ`.
    fn planted(gamma: f64) -> (SpectralCache<f64>, RotatedResponse<f64>) {
        let z = DesignMatrix::from_fn(6, 4, |i, j| if i == j { 1.0 + j as f64 } else { 0.0 }).unwrap();
        let cache = decompose(&z).unwrap();
        // ỹ_k² = 1 + γλ_k makes yᵀV⁻¹y = n and yᵀV⁻²y = tr V⁻¹,
        // so Δ(γ) = n/T₁ − n/T₁ = 0.
        let y: Vec<f64> = cache.eigenvalues().iter().map(|l| (1.0 + gamma * l).sqrt()).collect();
        let u = cache.unrotate(&y).unwrap();
        let yt = cache.rotate_response(&u).unwrap();
        (cache, yt)
    }

    #[test]
    fn recovers_planted_root() {
        let (cache, y) = planted(2.5);
        let r = solve_gamma_root(&cache, &y, &RootOptions::default()).unwrap();
        assert!((r.gamma - 2.5).abs() < 1e-8, "{r:?}");
        assert!(r.bracket.0 <= r.gamma && r.gamma <= r.bracket.1);
    }

    #[test]
    fn expands_bracket_for_large_root() {
        let (cache, y) = planted(500.0);
        let r = solve_gamma_root(&cache, &y, &RootOptions::default()).unwrap();
        assert!((r.gamma / 500.0 - 1.0).abs() < 1e-7, "{r:?}");
    }

    #[test]
    fn short_circuits_at_lower_end() {
        let (cache, y) = planted(0.01);
        let opts = RootOptions { tol: 1e-9, ..RootOptions::default() };
        let r = solve_gamma_root(&cache, &y, &opts).unwrap();
        assert_eq!(r.gamma, 0.01);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn no_sign_change_goes_to_boundary() {
        let z = DesignMatrix::<f64>::from_fn(6, 4, |i, j| if i == j { 1.0 } else { 0.0 }).unwrap();
        let cache = decompose(&z).unwrap();
        // All response energy on the null space of Z Zᵀ.
        let y = cache.rotate_response(&[0.0, 0.0, 0.0, 0.0, 1.0, -1.0]).unwrap();
        assert!(matches!(
            solve_gamma_root(&cache, &y, &RootOptions::default()),
            Err(Error::NoRoot { .. })
        ));
        let est = fit_by_root(&cache, &y, &RootOptions::default()).unwrap();
        assert!(est.boundary);
        assert_eq!(est.gamma_hat, 0.0);
        assert!((est.sigma_eps_sq - 2.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn scan_brackets_root() {
        let (cache, y) = planted(2.0);
        let s = scan_delta(&cache, &y, &[1.0, 4.0]).unwrap();
        assert!(s[0].1 > 0.0 && s[1].1 < 0.0, "{s:?}");
        assert!(scan_delta(&cache, &y, &[0.0]).is_err());
    }
}
