//! Ground-truth surrogates of `Δ`: the conditional mean `Δ* = E[Δ | Z]` and
//! its deterministic approximation `Δ**`.

use crate::design::DesignMatrix;
use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;
use crate::spectral::SpectralCache;

use super::check_positive_gamma;

/// Fixed effects `β` and noise variance `σ₀²` of the generating model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueParameters<T> {
    beta: Vec<T>,
    sigma0_sq: T,
    gamma0: T,
}

impl<T: Real> TrueParameters<T> {
    pub fn new(beta: Vec<T>, sigma0_sq: T) -> Result<Self> {
        if !(sigma0_sq > T::zero() && sigma0_sq.is_finite()) {
            return Err(Error::invalid(format!("sigma0_sq must be > 0, got {sigma0_sq}")));
        }
        if beta.is_empty() || beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("beta must be non-empty and finite"));
        }
        let norm_sq = beta.iter().fold(T::zero(), |acc, &b| acc + b * b);
        Ok(Self {
            gamma0: norm_sq / sigma0_sq,
            beta,
            sigma0_sq,
        })
    }

    pub fn beta(&self) -> &[T] {
        &self.beta
    }

    pub fn sigma0_sq(&self) -> T {
        self.sigma0_sq
    }

    /// `‖β‖² / σ₀²`
    pub fn gamma0(&self) -> T {
        self.gamma0
    }
}

/// `Δ*(γ)` with the signal weights `w_m = Σ_k β_k² (Uᵀz_k)_m²` precomputed,
/// so that `Σ_k β_k² z_kᵀV⁻ʲz_k = Σ_m w_m (1 + γλ_m)^{-j}`.
#[derive(Debug, Clone)]
pub struct DeltaStar<T> {
    weights: Vec<T>,
    sigma0_sq: T,
}

impl<T: Real> DeltaStar<T> {
    pub fn new(cache: &SpectralCache<T>, z: &DesignMatrix<T>, truth: &TrueParameters<T>) -> Result<Self> {
        ensure_len(cache.n(), z.nrows())?;
        ensure_len(z.ncols(), truth.beta().len())?;
        let u = cache.eigenvectors();
        let zm = z.as_mat();
        let n = cache.n();
        let mut weights = vec![T::zero(); n];
        for (k, &b) in truth.beta().iter().enumerate() {
            if b == T::zero() {
                continue;
            }
            let b2 = b * b;
            let zk = zm.col(k);
            for (m, w) in weights.iter_mut().enumerate() {
                let proj = u
                    .col(m)
                    .iter()
                    .zip(zk.iter())
                    .fold(T::zero(), |acc, (&a, &c)| acc + a * c);
                *w = *w + b2 * proj * proj;
            }
        }
        Ok(Self {
            weights,
            sigma0_sq: truth.sigma0_sq(),
        })
    }

    pub fn eval(&self, cache: &SpectralCache<T>, gamma: T) -> Result<T> {
        check_positive_gamma(gamma)?;
        ensure_len(cache.n(), self.weights.len())?;
        let s2 = self.sigma0_sq;
        let mut a1 = T::zero();
        let mut a2 = T::zero();
        let mut t0 = T::zero();
        let mut t02 = T::zero();
        let mut t1 = T::zero();
        for (&lam, &w) in cache.eigenvalues().iter().zip(&self.weights) {
            let inv = T::one() / (T::one() + gamma * lam);
            a1 = a1 + w * inv;
            a2 = a2 + w * inv * inv;
            t0 = t0 + inv;
            t02 = t02 + inv * inv;
            t1 = t1 + gamma * lam * inv;
        }
        ensure_nondegenerate(t1)?;
        let n = T::from_count(cache.n());
        Ok((a1 + s2 * t0) / t1 - n * (a2 + s2 * t02) / (t1 * t0))
    }
}

/// One-shot `Δ*(γ) = E[Δ(γ) | Z]` under `y = Zβ + ε`, `ε ~ N(0, σ₀²I)`.
pub fn delta_star<T: Real>(
    cache: &SpectralCache<T>,
    z: &DesignMatrix<T>,
    truth: &TrueParameters<T>,
    gamma: T,
) -> Result<T> {
    DeltaStar::new(cache, z, truth)?.eval(cache, gamma)
}

/// `Δ**(γ)`: `Δ*` with `Σ_k β_k² z_kᵀV⁻ʲz_k` replaced by `‖β‖² p⁻¹ tr(V⁻ʲZZᵀ)`.
///
/// Evaluated in the factored form
/// `σ₀² (γ₀/γ − 1) (n·tr V⁻² − (tr V⁻¹)²) / (tr(I − V⁻¹) · tr V⁻¹)`,
/// which vanishes exactly at `γ = γ₀` and has the sign of `γ₀ − γ`.
pub fn delta_starstar<T: Real>(cache: &SpectralCache<T>, gamma0: T, sigma0_sq: T, gamma: T) -> Result<T> {
    check_positive_gamma(gamma)?;
    check_positive_gamma(gamma0)?;
    if !(sigma0_sq > T::zero() && sigma0_sq.is_finite()) {
        return Err(Error::invalid(format!("sigma0_sq must be > 0, got {sigma0_sq}")));
    }
    let mut t0 = T::zero();
    let mut t02 = T::zero();
    let mut t1 = T::zero();
    for &lam in cache.eigenvalues() {
        let inv = T::one() / (T::one() + gamma * lam);
        t0 = t0 + inv;
        t02 = t02 + inv * inv;
        t1 = t1 + gamma * lam * inv;
    }
    ensure_nondegenerate(t1)?;
    let n = T::from_count(cache.n());
    let spread = (n * t02 - t0 * t0).max(T::zero());
    Ok(sigma0_sq * (gamma0 / gamma - T::one()) * spread / (t1 * t0))
}

fn ensure_nondegenerate<T: Real>(t1: T) -> Result<()> {
    if t1 > T::zero() {
        Ok(())
    } else {
        Err(Error::DegenerateDesign(
            "trace(I - V^-1) = 0: the Gram matrix has no positive eigenvalue".into(),
        ))
    }
}
