use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;
use crate::spectral::{RotatedResponse, SpectralCache};

use super::{loglik_unchecked, Moments};

/// Components are never allowed below this value.
pub(crate) const VARIANCE_FLOOR: f64 = 1e-12;

/// Settings for the multiplicative MM iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmOptions<T> {
    /// Stop when the absolute log-likelihood change drops below this.
    pub tol: T,
    pub max_iter: usize,
    /// Keep the log-likelihood after every step in [`VarianceEstimate::path`].
    pub record_path: bool,
}

impl<T: Real> Default for MmOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-8),
            max_iter: 10_000,
            record_path: false,
        }
    }
}

impl<T: Real> MmOptions<T> {
    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_path = true;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero() && self.tol.is_finite()) {
            return Err(Error::invalid(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be >= 1"));
        }
        Ok(())
    }
}

/// A fitted `(σ̂_ε², σ̂_α², γ̂)` with convergence metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate<T> {
    pub sigma_eps_sq: T,
    pub sigma_alpha_sq: T,
    pub gamma_hat: T,
    pub iterations: usize,
    pub converged: bool,
    /// The signal component hit the lower boundary (clamped, or no interior root).
    pub boundary: bool,
    pub final_loglik: T,
    /// Log-likelihood at the initial point and after every step, if requested.
    pub path: Option<Vec<T>>,
}

/// `σ_ε² = σ_α² = ‖y‖² / (2n)`.
pub fn default_init<T: Real>(y: &RotatedResponse<T>) -> (T, T) {
    let v = y.norm_sq() / (T::lit(2.0) * T::from_count(y.len()));
    (v, v)
}

/// Fits `(σ_ε², σ_α²)` by the multiplicative MM updates
///
/// ```text
/// σ_α² ← σ_α² · sqrt(yᵀΩ⁻¹GΩ⁻¹y / tr(Ω⁻¹G))
/// σ_ε² ← σ_ε² · sqrt(yᵀΩ⁻²y / tr(Ω⁻¹))
/// ```
///
/// both evaluated at the current `Ω`. Each step is `O(n)` on the spectral cache.
/// Hitting `max_iter` returns an estimate with `converged = false`.
pub fn mm_fit<T: Real>(
    cache: &SpectralCache<T>,
    y: &RotatedResponse<T>,
    init: (T, T),
    opts: &MmOptions<T>,
) -> Result<VarianceEstimate<T>> {
    ensure_len(cache.n(), y.len())?;
    opts.validate()?;
    let (mut se, mut sa) = init;
    if !(se > T::zero() && sa > T::zero() && se.is_finite() && sa.is_finite()) {
        return Err(Error::invalid(format!(
            "initial variances must be finite and > 0, got ({se}, {sa})"
        )));
    }
    if cache.is_degenerate() {
        return Err(Error::DegenerateDesign(
            "Z Z^T = 0: the signal variance is not identifiable".into(),
        ));
    }
    if y.norm_sq() <= T::zero() {
        return Err(Error::invalid("response is identically zero"));
    }

    let floor = T::lit(VARIANCE_FLOOR);
    let yv = y.values();
    let mut boundary = false;
    let mut ll = loglik_unchecked(cache, yv, se, sa);
    let mut path = opts.record_path.then(|| vec![ll]);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let m = Moments::at(cache, yv, se, sa);
        let mut sa_next = sa * (m.quad_inv_gram_inv / m.trace_inv_gram).sqrt();
        let mut se_next = se * (m.quad_inv2 / m.trace_inv).sqrt();
        if !(sa_next >= floor) {
            sa_next = floor;
            boundary = true;
        }
        if !(se_next >= floor) {
            se_next = floor;
            boundary = true;
        }
        se = se_next;
        sa = sa_next;
        let ll_next = loglik_unchecked(cache, yv, se, sa);
        if !ll_next.is_finite() {
            return Err(Error::Numerical(format!(
                "log-likelihood became {ll_next} at iteration {iterations}"
            )));
        }
        if let Some(p) = path.as_mut() {
            p.push(ll_next);
        }
        let change = (ll_next - ll).abs();
        ll = ll_next;
        if change < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(VarianceEstimate {
        sigma_eps_sq: se,
        sigma_alpha_sq: sa,
        gamma_hat: sa / se,
        iterations,
        converged,
        boundary,
        final_loglik: ll,
        path,
    })
}
