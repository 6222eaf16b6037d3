//! Maximum likelihood estimation of the signal-to-noise ratio and noise
//! variance in high-dimensional linear models, fitted through a
//! random-effects working model.
//!
//! The single-design estimators work on a [`SpectralCache`] of `p⁻¹ZZᵀ`, so
//! every likelihood quantity costs `O(n)` per evaluation. Grouped designs
//! use a Cholesky factor of `Ω` per iteration.

pub mod design;
pub mod error;
pub mod group;
pub mod io;
pub mod mp;
pub mod quadrature;
pub mod root;
pub mod scalar;
pub mod sim;
pub mod single;
pub mod spectral;

pub use design::DesignMatrix;
pub use error::{Error, Result};
pub use spectral::{decompose, SpectralCache};

pub type DesignMatrixF64 = DesignMatrix<f64>;
pub type DesignMatrixF32 = DesignMatrix<f32>;
pub type SpectralCacheF64 = SpectralCache<f64>;
pub type SpectralCacheF32 = SpectralCache<f32>;
