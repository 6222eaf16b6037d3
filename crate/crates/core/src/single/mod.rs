//! Single-design random-effects likelihood and the SNR estimating equation.
//!
//! The postulated model is `y ~ N(0, Ω)` with
//! `Ω = σ_ε² I + σ_α² p⁻¹ Z Zᵀ = σ_ε² V_γ`, `γ = σ_α² / σ_ε²`. In the
//! eigenbasis of `p⁻¹ Z Zᵀ` the covariance is diagonal with entries
//! `ω_k = σ_ε² + σ_α² λ_k`, which is how everything here is evaluated.

mod diagnostics;
mod mm;
mod root;

pub use diagnostics::{delta_star, delta_starstar, DeltaStar, TrueParameters};
pub use mm::{default_init, mm_fit, MmOptions, VarianceEstimate};
pub(crate) use mm::VARIANCE_FLOOR;
pub use root::{fit_by_root, scan_delta, solve_gamma_root, GammaRoot, RootOptions};

use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;
use crate::spectral::{check_gamma, RotatedResponse, SpectralCache};

/// Gaussian log-likelihood including the `-(n/2) log 2π` constant.
pub fn log_likelihood<T: Real>(
    cache: &SpectralCache<T>,
    y: &RotatedResponse<T>,
    sigma_eps_sq: T,
    sigma_alpha_sq: T,
) -> Result<T> {
    check_variances(sigma_eps_sq, sigma_alpha_sq)?;
    ensure_len(cache.n(), y.len())?;
    Ok(loglik_unchecked(cache, y.values(), sigma_eps_sq, sigma_alpha_sq))
}

pub(crate) fn loglik_unchecked<T: Real>(
    cache: &SpectralCache<T>,
    y: &[T],
    sigma_eps_sq: T,
    sigma_alpha_sq: T,
) -> T {
    let half = T::lit(0.5);
    let mut log_det = T::zero();
    let mut quad = T::zero();
    for (&lam, &yk) in cache.eigenvalues().iter().zip(y) {
        let omega = sigma_eps_sq + sigma_alpha_sq * lam;
        log_det = log_det + omega.ln();
        quad = quad + yk * yk / omega;
    }
    let n = T::from_count(cache.n());
    -half * n * T::lit(std::f64::consts::TAU).ln() - half * log_det - half * quad
}

/// Score `(∂l/∂σ_ε², ∂l/∂σ_α²)`.
pub fn score<T: Real>(
    cache: &SpectralCache<T>,
    y: &RotatedResponse<T>,
    sigma_eps_sq: T,
    sigma_alpha_sq: T,
) -> Result<(T, T)> {
    check_variances(sigma_eps_sq, sigma_alpha_sq)?;
    ensure_len(cache.n(), y.len())?;
    let m = Moments::at(cache, y.values(), sigma_eps_sq, sigma_alpha_sq);
    let half = T::lit(0.5);
    Ok((
        half * (m.quad_inv2 - m.trace_inv),
        half * (m.quad_inv_gram_inv - m.trace_inv_gram),
    ))
}

/// Spectral sums of `Ω` at one parameter point.
pub(crate) struct Moments<T> {
    /// `yᵀ Ω⁻² y`
    pub quad_inv2: T,
    /// `yᵀ Ω⁻¹ G Ω⁻¹ y`
    pub quad_inv_gram_inv: T,
    /// `trace(Ω⁻¹)`
    pub trace_inv: T,
    /// `trace(Ω⁻¹ G)`
    pub trace_inv_gram: T,
}

impl<T: Real> Moments<T> {
    pub(crate) fn at(cache: &SpectralCache<T>, y: &[T], sigma_eps_sq: T, sigma_alpha_sq: T) -> Self {
        let mut m = Moments {
            quad_inv2: T::zero(),
            quad_inv_gram_inv: T::zero(),
            trace_inv: T::zero(),
            trace_inv_gram: T::zero(),
        };
        for (&lam, &yk) in cache.eigenvalues().iter().zip(y) {
            let inv = T::one() / (sigma_eps_sq + sigma_alpha_sq * lam);
            let y2inv2 = yk * yk * inv * inv;
            m.quad_inv2 = m.quad_inv2 + y2inv2;
            m.quad_inv_gram_inv = m.quad_inv_gram_inv + y2inv2 * lam;
            m.trace_inv = m.trace_inv + inv;
            m.trace_inv_gram = m.trace_inv_gram + inv * lam;
        }
        m
    }
}

/// The profiled SNR likelihood equation
///
/// ```text
/// Δ(γ) = yᵀV⁻¹y / tr(I − V⁻¹) − n · yᵀV⁻²y / (tr(I − V⁻¹) · tr(V⁻¹))
/// ```
///
/// which equals `yᵀ B_γ y` with
/// `B_γ = V⁻¹GV⁻¹ / tr(V⁻¹G) − V⁻² / tr(V⁻¹)`.
pub fn delta<T: Real>(cache: &SpectralCache<T>, y: &RotatedResponse<T>, gamma: T) -> Result<T> {
    check_positive_gamma(gamma)?;
    ensure_len(cache.n(), y.len())?;
    delta_unchecked(cache, y.values(), gamma)
}

pub(crate) fn delta_unchecked<T: Real>(cache: &SpectralCache<T>, y: &[T], gamma: T) -> Result<T> {
    let mut q1 = T::zero();
    let mut q2 = T::zero();
    let mut t0 = T::zero();
    let mut t1 = T::zero();
    for (&lam, &yk) in cache.eigenvalues().iter().zip(y) {
        let inv = T::one() / (T::one() + gamma * lam);
        let y2 = yk * yk;
        q1 = q1 + y2 * inv;
        q2 = q2 + y2 * inv * inv;
        t0 = t0 + inv;
        t1 = t1 + gamma * lam * inv;
    }
    if t1 <= T::zero() {
        return Err(Error::DegenerateDesign(
            "trace(I - V^-1) = 0: the Gram matrix has no positive eigenvalue".into(),
        ));
    }
    let n = T::from_count(cache.n());
    Ok(q1 / t1 - n * q2 / (t1 * t0))
}

/// `σ̂_ε² = n⁻¹ yᵀ V_γ̂⁻¹ y`.
pub fn noise_variance<T: Real>(
    cache: &SpectralCache<T>,
    y: &RotatedResponse<T>,
    gamma_hat: T,
) -> Result<T> {
    check_gamma(gamma_hat)?;
    let q = cache.quad_form_inv(y, gamma_hat, 1)?;
    Ok(q / T::from_count(cache.n()))
}

fn check_variances<T: Real>(sigma_eps_sq: T, sigma_alpha_sq: T) -> Result<()> {
    if !(sigma_eps_sq > T::zero() && sigma_eps_sq.is_finite()) {
        return Err(Error::invalid(format!("sigma_eps_sq must be > 0, got {sigma_eps_sq}")));
    }
    if !(sigma_alpha_sq >= T::zero() && sigma_alpha_sq.is_finite()) {
        return Err(Error::invalid(format!(
            "sigma_alpha_sq must be >= 0, got {sigma_alpha_sq}"
        )));
    }
    Ok(())
}

pub(crate) fn check_positive_gamma<T: Real>(gamma: T) -> Result<()> {
    if gamma > T::zero() && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("gamma must be finite and > 0, got {gamma}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignMatrix;
    use crate::spectral::decompose;

    fn toy() -> (SpectralCache<f64>, RotatedResponse<f64>) {
        let z = DesignMatrix::from_rows(&[
            vec![1.0, -0.5, 2.0],
            vec![0.3, 1.2, -1.0],
            vec![-0.7, 0.4, 0.9],
            vec![1.1, 1.0, 0.2],
        ])
        .unwrap();
        let cache = decompose(&z).unwrap();
        let y = cache.rotate_response(&[0.5, -1.0, 2.0, 0.1]).unwrap();
        (cache, y)
    }

    #[test]
    fn iid_loglik_when_signal_variance_zero() {
        let (cache, y) = toy();
        let s2 = 0.7;
        let n = 4.0;
        let expected = -(n / 2.0) * (std::f64::consts::TAU * s2).ln() - y.norm_sq() / (2.0 * s2);
        let got = log_likelihood(&cache, &y, s2, 0.0).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn noise_score_vanishes_at_matched_scale() {
        let (cache, y) = toy();
        let s2 = y.norm_sq() / 4.0;
        let (se, _) = score(&cache, &y, s2, 0.0).unwrap();
        assert!(se.abs() < 1e-12);
    }

    #[test]
    fn scalar_design_delta_cancels() {
        let z = DesignMatrix::<f64>::from_rows(&[vec![1.0]]).unwrap();
        let cache = decompose(&z).unwrap();
        for &yv in &[0.3f64, -2.0, 7.5] {
            let y = cache.rotate_response(&[yv]).unwrap();
            for &g in &[0.01, 1.0, 42.0] {
                let d = delta(&cache, &y, g).unwrap();
                assert!(d.abs() < 1e-12 * (yv * yv / g).max(1.0), "delta={d}");
            }
        }
    }

    #[test]
    fn degenerate_design_rejected() {
        let z = DesignMatrix::from_fn(3, 2, |_, _| 0.0).unwrap();
        let cache = decompose(&z).unwrap();
        let y = cache.rotate_response(&[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(delta(&cache, &y, 1.0), Err(Error::DegenerateDesign(_))));
    }

    #[test]
    fn noise_variance_at_zero_and_monotone() {
        let (cache, y) = toy();
        assert!((noise_variance(&cache, &y, 0.0).unwrap() - y.norm_sq() / 4.0).abs() < 1e-14);
        let a = noise_variance(&cache, &y, 0.8).unwrap();
        let b = noise_variance(&cache, &y, 1.8).unwrap();
        assert!(b < a);
    }

    #[test]
    fn rejects_nonpositive_noise() {
        let (cache, y) = toy();
        assert!(log_likelihood(&cache, &y, 0.0, 1.0).is_err());
        assert!(score(&cache, &y, -1.0, 1.0).is_err());
        assert!(log_likelihood(&cache, &y, 1.0, -0.1).is_err());
        assert!(delta(&cache, &y, 0.0).is_err());
    }
}
