use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;
use crate::single::{MmOptions, VARIANCE_FLOOR};

use super::omega::dot;
use super::{omega_factorize, GroupedDesign, Sums};

/// Fitted `(σ̂_ε², σ̂_{α_1}², …)` and `γ̂_i = σ̂_{α_i}² / σ̂_ε²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupVarianceEstimate<T> {
    pub sigma_eps_sq: T,
    pub sigma_alpha_sq: Vec<T>,
    pub gamma_hat: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Some component was clamped at the lower boundary.
    pub boundary: bool,
    pub final_loglik: T,
    pub path: Option<Vec<T>>,
}

impl<T: Real> GroupVarianceEstimate<T> {
    /// `Σ_i γ̂_i`
    pub fn gamma_total(&self) -> T {
        self.gamma_hat.iter().fold(T::zero(), |acc, &g| acc + g)
    }
}

/// Every component set to `‖y‖² / ((s + 1) n)`.
pub fn default_group_init<T: Real>(y: &[T], s: usize) -> (T, Vec<T>) {
    let v = dot(y, y) / (T::from_count(s + 1) * T::from_count(y.len()));
    (v, vec![v; s])
}

/// Multi-group MM: from the current `Ω`,
///
/// ```text
/// σ_ε²     ← σ_ε²     · sqrt(yᵀΩ⁻²y / tr Ω⁻¹)
/// σ_{α_i}² ← σ_{α_i}² · sqrt(yᵀΩ⁻¹G_iΩ⁻¹y / tr(Ω⁻¹G_i))
/// ```
///
/// with one Cholesky factorization and inverse of `Ω` per iteration.
pub fn group_mm_fit<T: Real>(
    design: &GroupedDesign<T>,
    y: &[T],
    init: (T, &[T]),
    opts: &MmOptions<T>,
) -> Result<GroupVarianceEstimate<T>> {
    ensure_len(design.n(), y.len())?;
    ensure_len(design.s(), init.1.len())?;
    opts.validate()?;
    let mut se = init.0;
    let mut sa = init.1.to_vec();
    if !(se > T::zero() && se.is_finite()) || sa.iter().any(|s| !(*s > T::zero() && s.is_finite())) {
        return Err(Error::invalid("initial variances must be finite and > 0"));
    }
    if dot(y, y) <= T::zero() {
        return Err(Error::invalid("response is identically zero"));
    }

    let floor = T::lit(VARIANCE_FLOOR);
    let mut factor = omega_factorize(design, se, &sa)?;
    let mut ll = factor.log_likelihood(y)?;
    let mut path = opts.record_path.then(|| vec![ll]);
    let mut boundary = false;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let sums = Sums::at(design, &factor, y);
        if let Some(i) = sums.trace_gram.iter().position(|&t| t <= T::zero()) {
            return Err(Error::DegenerateDesign(format!("group {i} has Z_i Z_i^T = 0")));
        }
        let mut se_next = se * (sums.quad_inv2 / sums.trace_inv).sqrt();
        if !(se_next >= floor) {
            se_next = floor;
            boundary = true;
        }
        for (s, (q, t)) in sa.iter_mut().zip(sums.quad_gram.iter().zip(&sums.trace_gram)) {
            let mut next = *s * (*q / *t).sqrt();
            if !(next >= floor) {
                next = floor;
                boundary = true;
            }
            *s = next;
        }
        se = se_next;
        factor = omega_factorize(design, se, &sa)?;
        let ll_next = factor.log_likelihood(y)?;
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

    Ok(GroupVarianceEstimate {
        gamma_hat: sa.iter().map(|&s| s / se).collect(),
        sigma_eps_sq: se,
        sigma_alpha_sq: sa,
        iterations,
        converged,
        boundary,
        final_loglik: ll,
        path,
    })
}
