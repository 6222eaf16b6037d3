//! Marčenko–Pastur functionals: the limiting spectral law of `p⁻¹ZZᵀ` for
//! `n/p → τ` and the deterministic limits of the trace functionals built on it.
//!
//! All integrals over the continuous part are computed after the change of
//! variables `x = b₋ + h(1 + sin θ)`, `h = (b₊ − b₋)/2`, under which
//!
//! ```text
//! f_τ(x) dx = h² cos²θ / (2πτx) dθ,   θ ∈ [−π/2, π/2]
//! ```
//!
//! is smooth, including at `τ = 1` where `b₋ = 0`.

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::scalar::Real;

/// Absolute accuracy requested from every quadrature.
pub const QUAD_TOL: f64 = 1e-10;

/// The law for aspect ratio `τ`: support `[b₋, b₊]` plus an atom at 0 when `τ > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpSpec<T> {
    pub tau: T,
    pub b_minus: T,
    pub b_plus: T,
    /// `max(0, 1 − 1/τ)`
    pub atom_weight: T,
}

impl<T: Real> MpSpec<T> {
    pub fn new(tau: T) -> Result<Self> {
        if !(tau > T::zero() && tau.is_finite()) {
            return Err(Error::invalid(format!("tau must be finite and > 0, got {tau}")));
        }
        let r = tau.sqrt();
        let d = T::one() - r;
        let s = T::one() + r;
        Ok(Self {
            tau,
            b_minus: d * d,
            b_plus: s * s,
            atom_weight: (T::one() - T::one() / tau).max(T::zero()),
        })
    }

    fn half_width(&self) -> T {
        // (b₊ − b₋)/2 = 2√τ without cancellation
        T::lit(2.0) * self.tau.sqrt()
    }

    /// `(x, weight)` at angle `θ`, so that `∫ g f_τ dx = ∫ g(x(θ)) weight(θ) dθ`.
    fn map(&self, theta: T) -> (T, T) {
        let two = T::lit(2.0);
        let phi = theta * T::lit(0.5) + T::lit(std::f64::consts::FRAC_PI_4);
        // u = 1 + sin θ, v = 1 − sin θ, both free of cancellation near ±π/2
        let u = two * phi.sin().powi(2);
        let v = two * phi.cos().powi(2);
        let h = self.half_width();
        let x = self.b_minus + h * u;
        let w = if x > T::zero() {
            h * h * u * v / (two * T::lit(std::f64::consts::PI) * self.tau * x)
        } else {
            T::zero()
        };
        (x, w)
    }

    /// `∫_{b₋}^{upper} g(x) f_τ(x) dx` with `upper` given as an angle.
    fn integrate_to(&self, g: impl Fn(T) -> T, theta_hi: T) -> Result<T> {
        let lo = -T::lit(std::f64::consts::FRAC_PI_2);
        let r = integrate(
            |theta| {
                let (x, w) = self.map(theta);
                g(x) * w
            },
            lo,
            theta_hi,
            T::lit(QUAD_TOL),
        )?;
        Ok(r.value)
    }

    /// `∫ g(x) f_τ(x) dx` over the continuous part.
    pub fn integrate(&self, g: impl Fn(T) -> T) -> Result<T> {
        self.integrate_to(g, T::lit(std::f64::consts::FRAC_PI_2))
    }
}

/// Continuous density `f_τ(x) = sqrt((b₊ − x)(x − b₋)) / (2πτx)` on the support, 0 elsewhere.
pub fn mp_density<T: Real>(spec: &MpSpec<T>, x: T) -> T {
    if !(x > spec.b_minus && x < spec.b_plus) || x <= T::zero() {
        return T::zero();
    }
    ((spec.b_plus - x) * (x - spec.b_minus)).sqrt() / (T::lit(std::f64::consts::TAU) * spec.tau * x)
}

/// Distribution function including the atom at 0.
pub fn mp_cdf<T: Real>(spec: &MpSpec<T>, x: T) -> Result<T> {
    if x < T::zero() {
        return Ok(T::zero());
    }
    if x <= spec.b_minus {
        return Ok(spec.atom_weight);
    }
    if x >= spec.b_plus {
        return Ok(T::one());
    }
    let s = ((x - spec.b_minus) / spec.half_width() - T::one()).max(-T::one()).min(T::one());
    let mass = spec.integrate_to(|_| T::one(), s.asin())?;
    Ok((spec.atom_weight + mass).min(T::one()))
}

/// `∫ xˡ (1 + γx)^{-j} f_τ(x) dx` over the continuous part only.
pub fn mp_moment<T: Real>(spec: &MpSpec<T>, gamma: T, l: u32, j: u32) -> Result<T> {
    check_nonneg(gamma)?;
    spec.integrate(|x| x.powi(l as i32) / (T::one() + gamma * x).powi(j as i32))
}

/// Limit of `n⁻¹ tr(V_γ^{-j})`: continuous part plus the atom.
pub fn trace_limit_inv<T: Real>(spec: &MpSpec<T>, gamma: T, j: u32) -> Result<T> {
    if !(1..=2).contains(&j) {
        return Err(Error::invalid(format!("power must be 1 or 2, got {j}")));
    }
    Ok(mp_moment(spec, gamma, 0, j)? + spec.atom_weight)
}

/// The positive factor `d_{γ,τ}` in the limit of `Δ**`.
///
/// With `m_j = ∫ (1+γx)^{-j} f_τ`:
/// for `τ ≤ 1`, `d = 1 − (m₁ − m₂)/(m₁ − m₁²)`;
/// for `τ > 1`, with `t_j = m_j + 1 − 1/τ`, `d = −(t₁² − t₂) / (t₁ (1/τ − m₁))`.
pub fn d_factor<T: Real>(spec: &MpSpec<T>, gamma: T) -> Result<T> {
    check_positive(gamma)?;
    let m1 = mp_moment(spec, gamma, 0, 1)?;
    let m2 = mp_moment(spec, gamma, 0, 2)?;
    if spec.tau <= T::one() {
        Ok(T::one() - (m1 - m2) / (m1 - m1 * m1))
    } else {
        let shift = T::one() - T::one() / spec.tau;
        let t1 = m1 + shift;
        let t2 = m2 + shift;
        Ok(-(t1 * t1 - t2) / (t1 * (T::one() / spec.tau - m1)))
    }
}

/// `c_γ = σ₀² (γ₀/γ − 1) d_{γ,τ}`, the almost-sure limit of `Δ**(γ)`.
pub fn delta_limit<T: Real>(spec: &MpSpec<T>, gamma: T, gamma0: T, sigma0_sq: T) -> Result<T> {
    check_positive(gamma)?;
    check_positive(gamma0)?;
    check_positive(sigma0_sq)?;
    if gamma == gamma0 {
        return Ok(T::zero());
    }
    Ok(sigma0_sq * (gamma0 / gamma - T::one()) * d_factor(spec, gamma)?)
}

/// `s̄(γ) = σ₀² [∫ (1 + γ₀x)/(1 + γx) f_τ dx + atom]`, the limit of `n⁻¹ yᵀV_γ⁻¹y`.
pub fn s_bar<T: Real>(spec: &MpSpec<T>, gamma: T, gamma0: T, sigma0_sq: T) -> Result<T> {
    check_nonneg(gamma)?;
    check_positive(gamma0)?;
    check_positive(sigma0_sq)?;
    if gamma == gamma0 {
        return Ok(sigma0_sq);
    }
    let cont = spec.integrate(|x| (T::one() + gamma0 * x) / (T::one() + gamma * x))?;
    Ok(sigma0_sq * (cont + spec.atom_weight))
}

fn check_nonneg<T: Real>(v: T) -> Result<()> {
    if v >= T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("expected a finite value >= 0, got {v}")))
    }
}

fn check_positive<T: Real>(v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("expected a finite value > 0, got {v}")))
    }
}
