use faer::linalg::solvers::{DenseSolveCore, Llt};
use faer::{Mat, MatRef, Side};

use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;

use super::GroupedDesign;

/// Cholesky factor and explicit inverse of
/// `Ω = σ_ε² I + Σ_i σ_{α_i}² p_i⁻¹ Z_i Z_iᵀ`.
///
/// The inverse is formed once so that every trace the estimators need is an
/// `O(n²)` inner product against a precomputed Gram block.
#[derive(Debug)]
pub struct OmegaFactor<T: Real> {
    llt: Llt<T>,
    inv: Mat<T>,
    log_det: T,
}

/// Factorizes `Ω` at the given variance components.
pub fn omega_factorize<T: Real>(
    design: &GroupedDesign<T>,
    sigma_eps_sq: T,
    sigma_alpha_sq: &[T],
) -> Result<OmegaFactor<T>> {
    ensure_len(design.s(), sigma_alpha_sq.len())?;
    if !(sigma_eps_sq > T::zero() && sigma_eps_sq.is_finite()) {
        return Err(Error::invalid(format!("sigma_eps_sq must be > 0, got {sigma_eps_sq}")));
    }
    if let Some(bad) = sigma_alpha_sq.iter().find(|s| !(**s >= T::zero() && s.is_finite())) {
        return Err(Error::invalid(format!("group variances must be >= 0, got {bad}")));
    }
    let n = design.n();
    let mut omega = Mat::from_fn(n, n, |i, j| if i == j { sigma_eps_sq } else { T::zero() });
    for (g, &s) in design.grams().iter().zip(sigma_alpha_sq) {
        if s == T::zero() {
            continue;
        }
        for j in 0..n {
            for i in j..n {
                omega[(i, j)] = omega[(i, j)] + s * g[(i, j)];
            }
        }
    }
    OmegaFactor::from_lower(omega)
}

impl<T: Real> OmegaFactor<T> {
    /// Factorizes a symmetric matrix given by its lower triangle.
    pub(crate) fn from_lower(omega: Mat<T>) -> Result<Self> {
        let n = omega.nrows();
        let llt = Llt::new(omega.as_ref(), Side::Lower).map_err(|e| {
            Error::Numerical(format!("Cholesky factorization of {n}x{n} Omega failed: {e:?}"))
        })?;
        let l = llt.L();
        let mut log_det = T::zero();
        for i in 0..n {
            log_det = log_det + l[(i, i)].ln();
        }
        log_det = log_det + log_det;
        let inv = llt.inverse();
        Ok(Self { llt, inv, log_det })
    }

    pub fn n(&self) -> usize {
        self.inv.nrows()
    }

    /// `log det Ω`
    pub fn log_det(&self) -> T {
        self.log_det
    }

    /// `Ω⁻¹`
    pub fn inverse(&self) -> MatRef<'_, T> {
        self.inv.as_ref()
    }

    /// `Ω⁻¹ v` by triangular solves.
    pub fn solve(&self, v: &[T]) -> Result<Vec<T>> {
        use faer::linalg::solvers::Solve;
        ensure_len(self.n(), v.len())?;
        let mut rhs = Mat::from_fn(v.len(), 1, |i, _| v[i]);
        self.llt.solve_in_place(rhs.as_mut());
        Ok(rhs.col(0).iter().copied().collect())
    }

    /// `tr(Ω⁻¹)`
    pub fn trace_inv(&self) -> T {
        (0..self.n()).fold(T::zero(), |acc, i| acc + self.inv[(i, i)])
    }

    /// `tr(Ω⁻¹ p_i⁻¹ Z_i Z_iᵀ)`
    pub fn trace_inv_gram(&self, design: &GroupedDesign<T>, i: usize) -> Result<T> {
        ensure_len(self.n(), design.n())?;
        Ok(frobenius(self.inv.as_ref(), design.gram(i)?))
    }

    /// `-(n/2) log 2π − ½ log det Ω − ½ yᵀΩ⁻¹y`
    pub fn log_likelihood(&self, y: &[T]) -> Result<T> {
        let v = self.solve(y)?;
        let quad = dot(y, &v);
        let half = T::lit(0.5);
        let n = T::from_count(self.n());
        Ok(-half * n * T::lit(std::f64::consts::TAU).ln() - half * self.log_det - half * quad)
    }
}

/// `Σ_ab A_ab B_ab`, equal to `tr(A B)` for symmetric arguments.
pub(crate) fn frobenius<T: Real>(a: MatRef<'_, T>, b: MatRef<'_, T>) -> T {
    let mut acc = T::zero();
    for j in 0..a.ncols() {
        for (&x, &y) in a.col(j).iter().zip(b.col(j).iter()) {
            acc = acc + x * y;
        }
    }
    acc
}

/// `Σ_ab A_ab B_ba = tr(A B)` for general square arguments.
pub(crate) fn trace_product<T: Real>(a: MatRef<'_, T>, b: MatRef<'_, T>) -> T {
    let mut acc = T::zero();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc = acc + a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `A v` for a dense matrix.
pub(crate) fn mat_vec<T: Real>(a: MatRef<'_, T>, v: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.nrows()];
    for (j, &vj) in v.iter().enumerate() {
        for (o, &x) in out.iter_mut().zip(a.col(j).iter()) {
            *o = *o + x * vj;
        }
    }
    out
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
