//! Eigendecomposition of `p⁻¹ Z Zᵀ` and the resolvent sums built on it.
//!
//! With `V_γ = I + γ p⁻¹ Z Zᵀ = U diag(1 + γ λ_k) Uᵀ`, every trace and
//! quadratic form the single-design estimators need collapses to a weighted
//! sum over the spectrum:
//!
//! ```text
//! Σ_k w_k λ_k^l (1 + γ λ_k)^{-j}
//! ```
//!
//! with `w_k = 1` for traces and `w_k = ỹ_k²` (`ỹ = Uᵀ y`) for quadratic forms.
//! One `O(n³)` decomposition buys `O(n)` evaluation for every `γ`.

use faer::{Mat, MatRef, Side};

use crate::design::{symmetrize, DesignMatrix};
use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;

/// Relative threshold below which negative Gram eigenvalues count as roundoff.
const CLIP_REL: f64 = 1e-10;

/// Eigenpairs of `p⁻¹ Z Zᵀ`, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SpectralCache<T: Real> {
    eigenvalues: Vec<T>,
    eigenvectors: Mat<T>,
    p: usize,
}

/// `ỹ = Uᵀ y` for the eigenvectors of a [`SpectralCache`].
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedResponse<T: Real> {
    values: Vec<T>,
}

impl<T: Real> RotatedResponse<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `‖ỹ‖² = ‖y‖²`.
    pub fn norm_sq(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &v| acc + v * v)
    }

    pub(crate) fn squares(&self) -> Vec<T> {
        self.values.iter().map(|&v| v * v).collect()
    }
}

/// Decomposes `p⁻¹ Z Zᵀ`.
pub fn decompose<T: Real>(z: &DesignMatrix<T>) -> Result<SpectralCache<T>> {
    SpectralCache::from_scaled_gram(z.scaled_gram(), z.ncols())
}

impl<T: Real> SpectralCache<T> {
    /// Decomposes an already-formed `p⁻¹ Z Zᵀ`.
    pub fn from_scaled_gram(mut gram: Mat<T>, p: usize) -> Result<Self> {
        let n = gram.nrows();
        ensure_len(n, gram.ncols())?;
        if n == 0 || p == 0 {
            return Err(Error::invalid("empty Gram matrix"));
        }
        for j in 0..n {
            for i in 0..n {
                if !gram[(i, j)].is_finite() {
                    return Err(Error::invalid("non-finite Gram entry"));
                }
            }
        }
        symmetrize(&mut gram);
        let evd = gram.self_adjoint_eigen(Side::Lower).map_err(|e| {
            Error::Numerical(format!("symmetric eigensolver failed on {n}x{n} Gram: {e:?}"))
        })?;
        let s = evd.S();
        let u = evd.U();

        // faer returns ascending order; flip to descending.
        let mut eigenvalues: Vec<T> = (0..n).rev().map(|k| s[k]).collect();
        let eigenvectors = Mat::from_fn(n, n, |i, k| u[(i, n - 1 - k)]);

        let top = eigenvalues[0].max(T::zero());
        let floor = -T::lit(CLIP_REL) * top;
        for (k, lam) in eigenvalues.iter_mut().enumerate() {
            if *lam < T::zero() {
                if *lam >= floor {
                    *lam = T::zero();
                } else {
                    return Err(Error::Numerical(format!(
                        "Gram eigenvalue {k} = {lam} is negative beyond roundoff (top = {top})"
                    )));
                }
            }
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            p,
        })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> MatRef<'_, T> {
        self.eigenvectors.as_ref()
    }

    /// True when every eigenvalue is zero, i.e. `Z Zᵀ = 0`.
    pub fn is_degenerate(&self) -> bool {
        self.eigenvalues.iter().all(|&l| l == T::zero())
    }

    pub fn rotate_response(&self, y: &[T]) -> Result<RotatedResponse<T>> {
        ensure_len(self.n(), y.len())?;
        let u = self.eigenvectors.as_ref();
        let values = (0..self.n())
            .map(|k| {
                u.col(k)
                    .iter()
                    .zip(y)
                    .fold(T::zero(), |acc, (&uk, &yi)| acc + uk * yi)
            })
            .collect();
        Ok(RotatedResponse { values })
    }

    /// Applies `U` to a rotated vector: `v = U ṽ`.
    pub fn unrotate(&self, v: &[T]) -> Result<Vec<T>> {
        ensure_len(self.n(), v.len())?;
        let u = self.eigenvectors.as_ref();
        let mut out = vec![T::zero(); self.n()];
        for (k, &vk) in v.iter().enumerate() {
            for (o, &uik) in out.iter_mut().zip(u.col(k).iter()) {
                *o = *o + uik * vk;
            }
        }
        Ok(out)
    }

    /// `trace(V_γ^{-power}) = Σ_k (1 + γ λ_k)^{-power}`, `power ∈ 1..=4`.
    pub fn trace_inv(&self, gamma: T, power: u32) -> Result<T> {
        check_gamma(gamma)?;
        check_power(power, 4)?;
        Ok(self.resolvent_sum(gamma, power, false, None))
    }

    /// `trace(V_γ^{-power} p⁻¹ Z Zᵀ) = Σ_k λ_k (1 + γ λ_k)^{-power}`, `power ∈ {1, 2}`.
    pub fn trace_inv_gram(&self, gamma: T, power: u32) -> Result<T> {
        check_gamma(gamma)?;
        check_power(power, 2)?;
        Ok(self.resolvent_sum(gamma, power, true, None))
    }

    /// `yᵀ V_γ^{-power} y = Σ_k ỹ_k² (1 + γ λ_k)^{-power}`, `power ∈ {1, 2}`.
    pub fn quad_form_inv(&self, y: &RotatedResponse<T>, gamma: T, power: u32) -> Result<T> {
        check_gamma(gamma)?;
        check_power(power, 2)?;
        ensure_len(self.n(), y.len())?;
        Ok(self.resolvent_sum(gamma, power, false, Some(&y.squares())))
    }

    /// `yᵀ V_γ^{-power} (p⁻¹ Z Zᵀ) y`-type sum `Σ_k ỹ_k² λ_k (1 + γ λ_k)^{-power}`.
    pub fn quad_form_inv_gram(&self, y: &RotatedResponse<T>, gamma: T, power: u32) -> Result<T> {
        check_gamma(gamma)?;
        check_power(power, 2)?;
        ensure_len(self.n(), y.len())?;
        Ok(self.resolvent_sum(gamma, power, true, Some(&y.squares())))
    }

    /// `trace(I - V_γ⁻¹) = Σ_k γ λ_k / (1 + γ λ_k)`, evaluated without cancellation.
    pub fn trace_complement(&self, gamma: T) -> Result<T> {
        check_gamma(gamma)?;
        Ok(self
            .eigenvalues
            .iter()
            .fold(T::zero(), |acc, &l| acc + gamma * l / (T::one() + gamma * l)))
    }

    /// `Σ_k w_k λ_k^{[with_gram]} (1 + γ λ_k)^{-power}`; `weights = None` means all ones.
    pub(crate) fn resolvent_sum(
        &self,
        gamma: T,
        power: u32,
        with_gram: bool,
        weights: Option<&[T]>,
    ) -> T {
        let mut acc = T::zero();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let mut term = (T::one() + gamma * lam).powi(-(power as i32));
            if with_gram {
                term = term * lam;
            }
            if let Some(w) = weights {
                term = term * w[k];
            }
            acc = acc + term;
        }
        acc
    }
}

pub(crate) fn check_gamma<T: Real>(gamma: T) -> Result<()> {
    if gamma >= T::zero() && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("gamma must be finite and >= 0, got {gamma}")))
    }
}

fn check_power(power: u32, max: u32) -> Result<()> {
    if (1..=max).contains(&power) {
        Ok(())
    } else {
        Err(Error::invalid(format!("power must be in 1..={max}, got {power}")))
    }
}
