//! Partitioned-design estimation: `y = Σ_i Z_i β_i + ε` fitted with one
//! random-effect variance per group,
//! `Ω = σ_ε² I + Σ_i σ_{α_i}² p_i⁻¹ Z_i Z_iᵀ = σ_ε² V_γ`.
//!
//! The group Grams do not share eigenvectors, so each evaluation factorizes
//! `Ω` densely (see [`OmegaFactor`]).

mod mm;
mod omega;

pub use mm::{default_group_init, group_mm_fit, GroupVarianceEstimate};
pub use omega::{omega_factorize, OmegaFactor};

use faer::{Mat, MatRef};

use crate::design::DesignMatrix;
use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;
use crate::single::check_positive_gamma;

use omega::{dot, frobenius, mat_vec, trace_product};

/// Ordered design blocks `Z_1 … Z_s` sharing `n` rows, with their scaled
/// Grams `p_i⁻¹ Z_i Z_iᵀ` formed once.
#[derive(Debug, Clone)]
pub struct GroupedDesign<T: Real> {
    groups: Vec<DesignMatrix<T>>,
    grams: Vec<Mat<T>>,
}

impl<T: Real> GroupedDesign<T> {
    pub fn new(groups: Vec<DesignMatrix<T>>) -> Result<Self> {
        let first = groups
            .first()
            .ok_or_else(|| Error::invalid("a grouped design needs at least one group"))?;
        let n = first.nrows();
        for g in &groups {
            ensure_len(n, g.nrows())?;
        }
        let grams = groups.iter().map(DesignMatrix::scaled_gram).collect();
        Ok(Self { groups, grams })
    }

    /// Splits the columns of `z` into consecutive blocks of the given sizes.
    pub fn from_partition(z: &DesignMatrix<T>, sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::invalid("group sizes must be non-empty and positive"));
        }
        let total: usize = sizes.iter().sum();
        if total != z.ncols() {
            return Err(Error::invalid(format!(
                "group sizes sum to {total} but the design has {} columns",
                z.ncols()
            )));
        }
        let mut start = 0;
        let mut groups = Vec::with_capacity(sizes.len());
        for &p in sizes {
            let offset = start;
            groups.push(DesignMatrix::from_fn(z.nrows(), p, |i, j| z.get(i, offset + j))?);
            start += p;
        }
        Self::new(groups)
    }

    pub fn n(&self) -> usize {
        self.groups[0].nrows()
    }

    /// Number of groups `s`.
    pub fn s(&self) -> usize {
        self.groups.len()
    }

    /// `(p_1, …, p_s)`
    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(DesignMatrix::ncols).collect()
    }

    pub fn groups(&self) -> &[DesignMatrix<T>] {
        &self.groups
    }

    /// `p_i⁻¹ Z_i Z_iᵀ`
    pub fn gram(&self, i: usize) -> Result<MatRef<'_, T>> {
        self.grams
            .get(i)
            .map(Mat::as_ref)
            .ok_or_else(|| Error::invalid(format!("group index {i} out of range 0..{}", self.s())))
    }

    pub(crate) fn grams(&self) -> &[Mat<T>] {
        &self.grams
    }

    /// `Σ_i Z_i β_i`.
    pub fn mul_vecs(&self, betas: &[Vec<T>]) -> Result<Vec<T>> {
        ensure_len(self.s(), betas.len())?;
        let mut out = vec![T::zero(); self.n()];
        for (g, b) in self.groups.iter().zip(betas) {
            for (o, v) in out.iter_mut().zip(g.mul_vec(b)?) {
                *o = *o + v;
            }
        }
        Ok(out)
    }
}

/// Per-group fixed effects and noise variance of the generating model.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupTrueParameters<T> {
    betas: Vec<Vec<T>>,
    sigma0_sq: T,
    gamma0: Vec<T>,
}

impl<T: Real> GroupTrueParameters<T> {
    pub fn new(betas: Vec<Vec<T>>, sigma0_sq: T) -> Result<Self> {
        if !(sigma0_sq > T::zero() && sigma0_sq.is_finite()) {
            return Err(Error::invalid(format!("sigma0_sq must be > 0, got {sigma0_sq}")));
        }
        if betas.is_empty() || betas.iter().any(|b| b.is_empty() || b.iter().any(|x| !x.is_finite())) {
            return Err(Error::invalid("every group needs a non-empty finite beta"));
        }
        let gamma0 = betas
            .iter()
            .map(|b| dot(b, b) / sigma0_sq)
            .collect();
        Ok(Self { betas, sigma0_sq, gamma0 })
    }

    pub fn betas(&self) -> &[Vec<T>] {
        &self.betas
    }

    pub fn sigma0_sq(&self) -> T {
        self.sigma0_sq
    }

    /// `γ₀ᵢ = ‖β_i‖² / σ₀²`
    pub fn gamma0(&self) -> &[T] {
        &self.gamma0
    }
}

/// Group log-likelihood with the full Gaussian constant.
pub fn group_log_likelihood<T: Real>(
    design: &GroupedDesign<T>,
    y: &[T],
    sigma_eps_sq: T,
    sigma_alpha_sq: &[T],
) -> Result<T> {
    ensure_len(design.n(), y.len())?;
    omega_factorize(design, sigma_eps_sq, sigma_alpha_sq)?.log_likelihood(y)
}

/// `(S_{σ_ε²}, S_{σ_{α_1}²}, …, S_{σ_{α_s}²})`.
pub fn group_scores<T: Real>(
    design: &GroupedDesign<T>,
    y: &[T],
    sigma_eps_sq: T,
    sigma_alpha_sq: &[T],
) -> Result<Vec<T>> {
    ensure_len(design.n(), y.len())?;
    let f = omega_factorize(design, sigma_eps_sq, sigma_alpha_sq)?;
    let s = Sums::at(design, &f, y);
    let half = T::lit(0.5);
    let mut out = Vec::with_capacity(design.s() + 1);
    out.push(half * (s.quad_inv2 - s.trace_inv));
    for (q, t) in s.quad_gram.iter().zip(&s.trace_gram) {
        out.push(half * (*q - *t));
    }
    Ok(out)
}

/// Quadratic forms and traces of one factorized `Ω`.
pub(crate) struct Sums<T> {
    /// `yᵀΩ⁻²y`
    pub quad_inv2: T,
    /// `tr Ω⁻¹`
    pub trace_inv: T,
    /// `yᵀΩ⁻¹G_iΩ⁻¹y`
    pub quad_gram: Vec<T>,
    /// `tr(Ω⁻¹G_i)`
    pub trace_gram: Vec<T>,
}

impl<T: Real> Sums<T> {
    pub(crate) fn at(design: &GroupedDesign<T>, f: &OmegaFactor<T>, y: &[T]) -> Self {
        let inv = f.inverse();
        let v = mat_vec(inv, y);
        let mut quad_gram = Vec::with_capacity(design.s());
        let mut trace_gram = Vec::with_capacity(design.s());
        for g in design.grams() {
            quad_gram.push(dot(&v, &mat_vec(g.as_ref(), &v)));
            trace_gram.push(frobenius(inv, g.as_ref()));
        }
        Self {
            quad_inv2: dot(&v, &v),
            trace_inv: f.trace_inv(),
            quad_gram,
            trace_gram,
        }
    }
}

/// Group likelihood equation for group `i`, evaluated at `σ_ε² = 1`, `σ_{α_r}² = γ_r`:
///
/// ```text
/// Δ⁽ⁱ⁾(γ) = yᵀV⁻¹G_iV⁻¹y / tr(V⁻¹G_i) − yᵀV⁻²y / tr(V⁻¹)
/// ```
pub fn group_delta<T: Real>(design: &GroupedDesign<T>, y: &[T], gamma: &[T], i: usize) -> Result<T> {
    design.gram(i)?;
    let s = delta_sums(design, y, gamma)?;
    delta_from_sums(&s, i)
}

/// `Δ⁽ⁱ⁾(γ)` for every group from one factorization.
pub fn group_deltas<T: Real>(design: &GroupedDesign<T>, y: &[T], gamma: &[T]) -> Result<Vec<T>> {
    let s = delta_sums(design, y, gamma)?;
    (0..design.s()).map(|i| delta_from_sums(&s, i)).collect()
}

fn delta_sums<T: Real>(design: &GroupedDesign<T>, y: &[T], gamma: &[T]) -> Result<Sums<T>> {
    ensure_len(design.n(), y.len())?;
    ensure_len(design.s(), gamma.len())?;
    for &g in gamma {
        check_positive_gamma(g)?;
    }
    let f = omega_factorize(design, T::one(), gamma)?;
    Ok(Sums::at(design, &f, y))
}

pub(crate) fn delta_from_sums<T: Real>(s: &Sums<T>, i: usize) -> Result<T> {
    let t = s.trace_gram[i];
    if t <= T::zero() {
        return Err(degenerate_group(i));
    }
    Ok(s.quad_gram[i] / t - s.quad_inv2 / s.trace_inv)
}

/// Deterministic surrogate `Δ**⁽ⁱ⁾(γ)` of the group equation:
///
/// ```text
/// σ₀² (1 − γ₀ᵢ/γᵢ) [tr(V⁻²G_i)/tr(V⁻¹G_i) − tr V⁻²/tr V⁻¹]
/// + σ₀² Σ_{r≠i} γ_r (γ₀ᵣ/γᵣ − γ₀ᵢ/γᵢ) [tr(V⁻¹G_rV⁻¹G_i)/tr(V⁻¹G_i) − tr(V⁻²G_r)/tr V⁻¹]
/// ```
///
/// Every coefficient vanishes at `γ = γ₀`. Costs `O(s n³)`.
pub fn group_delta_starstar<T: Real>(
    design: &GroupedDesign<T>,
    gamma0: &[T],
    sigma0_sq: T,
    gamma: &[T],
    i: usize,
) -> Result<T> {
    let s = design.s();
    ensure_len(s, gamma0.len())?;
    ensure_len(s, gamma.len())?;
    design.gram(i)?;
    for (&g, &g0) in gamma.iter().zip(gamma0) {
        check_positive_gamma(g)?;
        check_positive_gamma(g0)?;
    }
    if !(sigma0_sq > T::zero() && sigma0_sq.is_finite()) {
        return Err(Error::invalid(format!("sigma0_sq must be > 0, got {sigma0_sq}")));
    }
    let f = omega_factorize(design, T::one(), gamma)?;
    let w = f.inverse();
    // K_r = V⁻¹ G_r
    let k: Vec<Mat<T>> = design.grams().iter().map(|g| w * g.as_ref()).collect();
    let tr_w = f.trace_inv();
    let tr_w2 = frobenius(w, w);
    let tr_wg_i = (0..design.n()).fold(T::zero(), |acc, a| acc + k[i][(a, a)]);
    if tr_wg_i <= T::zero() {
        return Err(degenerate_group(i));
    }
    let tr_w2g = |r: usize| frobenius(w, k[r].as_ref());

    let ratio_i = gamma0[i] / gamma[i];
    let mut total = (T::one() - ratio_i) * (tr_w2g(i) / tr_wg_i - tr_w2 / tr_w);
    for r in (0..s).filter(|&r| r != i) {
        let coef = gamma[r] * (gamma0[r] / gamma[r] - ratio_i);
        if coef == T::zero() {
            continue;
        }
        let cross = trace_product(k[r].as_ref(), k[i].as_ref());
        total = total + coef * (cross / tr_wg_i - tr_w2g(r) / tr_w);
    }
    Ok(sigma0_sq * total)
}

fn degenerate_group(i: usize) -> Error {
    Error::DegenerateDesign(format!("group {i} has Z_i Z_i^T = 0"))
}
