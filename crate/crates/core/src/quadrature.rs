//! Globally adaptive Gauss–Kronrod (7/15-point) quadrature on a finite interval.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    /// Sum of the per-interval `|K15 − G7|` estimates.
    pub error: T,
    pub intervals: usize,
}

/// Integrates `f` over `[a, b]` to absolute accuracy `tol`.
///
/// The tolerance is raised to `100·ε` of the scalar type when it is below
/// what the type can resolve.
pub fn integrate<T: Real>(f: impl Fn(T) -> T, a: T, b: T, tol: T) -> Result<Integral<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integration limits must be finite"));
    }
    let tol = tol.max(T::lit(100.0) * T::epsilon());
    if a == b {
        return Ok(Integral { value: T::zero(), error: T::zero(), intervals: 0 });
    }

    let mut parts = vec![kronrod(&f, a, b)?];
    loop {
        let (value, error) = parts
            .iter()
            .fold((T::zero(), T::zero()), |(v, e), p| (v + p.value, e + p.error));
        if error <= tol {
            return Ok(Integral { value, error, intervals: parts.len() });
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { achieved: error.as_f64(), target: tol.as_f64() });
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = parts.swap_remove(worst);
        let mid = (p.a + p.b) * T::lit(0.5);
        if !(p.a < mid && mid < p.b) {
            // interval cannot be split further in this precision
            return Err(Error::Quadrature { achieved: error.as_f64(), target: tol.as_f64() });
        }
        parts.push(kronrod(&f, p.a, mid)?);
        parts.push(kronrod(&f, mid, p.b)?);
    }
}

struct Piece<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn kronrod<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> Result<Piece<T>> {
    let half = T::lit(0.5);
    let centre = (a + b) * half;
    let radius = (b - a) * half;
    let fc = f(centre);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let pair = f(centre - dx) + f(centre + dx);
        k = k + pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            g = g + pair * T::lit(WG[j / 2]);
        }
    }
    let value = k * radius;
    if !value.is_finite() {
        return Err(Error::Numerical(format!("non-finite integrand on [{a}, {b}]")));
    }
    Ok(Piece {
        a,
        b,
        value,
        error: ((k - g) * radius).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x: f64| 3.0 * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn peaked_integrand() {
        let r = integrate(|x: f64| 1.0 / (1.0 + 1e4 * x * x), -1.0, 1.0, 1e-12).unwrap();
        let exact = 2.0 * (100f64).atan() / 100.0;
        assert!((r.value - exact).abs() < 1e-11);
    }

    #[test]
    fn oscillatory() {
        let r = integrate(|x: f64| (20.0 * x).sin().powi(2), 0.0, std::f64::consts::PI, 1e-11).unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn single_precision_floor() {
        let r = integrate(|x: f32| x.exp(), 0.0, 1.0, 1e-12).unwrap();
        assert!((r.value - (1f32.exp() - 1.0)).abs() < 1e-5);
    }
}
