use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};

use super::rng::{child_seed, stream_rng, Stream};

/// Entry distribution of a simulated design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignKind {
    /// i.i.d. `N(0, 1)`
    Gaussian,
    /// i.i.d. `±1`
    Rademacher,
    /// Standardized Hardy–Weinberg allele counts, allele frequency `U[0.05, 0.5]` per column.
    Genotype,
}

impl DesignKind {
    pub fn name(self) -> &'static str {
        match self {
            DesignKind::Gaussian => "gaussian",
            DesignKind::Rademacher => "rademacher",
            DesignKind::Genotype => "genotype",
        }
    }

    /// Genotype columns are neither symmetric nor independent across entries
    /// after standardization, so the consistency theory does not cover them.
    pub fn within_theory(self) -> bool {
        !matches!(self, DesignKind::Genotype)
    }
}

const GENOTYPE_RETRIES: u64 = 100;

/// Draws an `n × p` design, filled column by column.
pub fn gen_design(kind: DesignKind, n: usize, p: usize, seed: u64) -> Result<DesignMatrix<f64>> {
    if n == 0 || p == 0 {
        return Err(Error::invalid("design dimensions must be >= 1"));
    }
    let mut rng = stream_rng(seed, Stream::Design);
    let mut data = Vec::with_capacity(n * p);
    match kind {
        DesignKind::Gaussian => {
            data.extend((0..n * p).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
        }
        DesignKind::Rademacher => {
            data.extend((0..n * p).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }));
        }
        DesignKind::Genotype => {
            let mut col = vec![0.0; n];
            for j in 0..p {
                let mut ok = genotype_column(&mut rng, &mut col);
                let mut attempt = 0;
                while !ok {
                    attempt += 1;
                    if attempt > GENOTYPE_RETRIES {
                        return Err(Error::Numerical(format!(
                            "genotype column {j} stayed constant after {GENOTYPE_RETRIES} redraws (n = {n})"
                        )));
                    }
                    let sub = child_seed(seed, j as u64, attempt);
                    ok = genotype_column(&mut stream_rng(sub, Stream::GenotypeRetry), &mut col);
                }
                data.extend_from_slice(&col);
            }
        }
    }
    DesignMatrix::from_column_major(n, p, &data)
}

/// Fills `col` with a standardized genotype column; `false` if it came out constant.
fn genotype_column(rng: &mut impl Rng, col: &mut [f64]) -> bool {
    let f: f64 = rng.random_range(0.05..=0.5);
    let p0 = (1.0 - f) * (1.0 - f);
    let p1 = p0 + 2.0 * f * (1.0 - f);
    for c in col.iter_mut() {
        let u: f64 = rng.random();
        *c = if u < p0 {
            0.0
        } else if u < p1 {
            1.0
        } else {
            2.0
        };
    }
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n;
    if var <= 0.0 {
        return false;
    }
    let sd = var.sqrt();
    for c in col.iter_mut() {
        *c = (*c - mean) / sd;
    }
    true
}

/// Polynomially decaying coefficients scaled so that `‖β‖² = γ₀σ₀²`:
/// `β_k = p^{-1/2} a k^{-g}` with `a = sqrt(γ₀σ₀²p / Σ_k k^{-2g})`.
pub fn gen_coefficients(p: usize, g: f64, gamma0: f64, sigma0_sq: f64) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::invalid("p must be >= 1"));
    }
    if !(g >= 0.0 && g.is_finite()) {
        return Err(Error::invalid(format!("decay exponent g must be >= 0, got {g}")));
    }
    if !(gamma0 >= 0.0 && gamma0.is_finite()) {
        return Err(Error::invalid(format!("gamma0 must be >= 0, got {gamma0}")));
    }
    if !(sigma0_sq > 0.0 && sigma0_sq.is_finite()) {
        return Err(Error::invalid(format!("sigma0_sq must be > 0, got {sigma0_sq}")));
    }
    let decay: Vec<f64> = (1..=p).map(|k| (k as f64).powf(-g)).collect();
    let norm: f64 = decay.iter().map(|d| d * d).sum();
    let pf = p as f64;
    let a = (gamma0 * sigma0_sq * pf / norm).sqrt();
    let scale = a / pf.sqrt();
    Ok(decay.into_iter().map(|d| scale * d).collect())
}

/// Random reordering of the coefficients from the permutation stream of `seed`.
pub fn permute_coefficients(beta: &mut [f64], seed: u64) {
    beta.shuffle(&mut stream_rng(seed, Stream::Permutation));
}

/// `y = Zβ + ε`, `ε ~ N(0, σ₀² I)` from the noise stream of `seed`.
pub fn gen_response(z: &DesignMatrix<f64>, beta: &[f64], sigma0_sq: f64, seed: u64) -> Result<Vec<f64>> {
    let mut y = z.mul_vec(beta)?;
    add_noise(&mut y, sigma0_sq, seed)?;
    Ok(y)
}

/// `y = Σ_i Z_i β_i + ε`.
pub fn gen_group_response(
    groups: &[DesignMatrix<f64>],
    betas: &[Vec<f64>],
    sigma0_sq: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    crate::error::ensure_len(groups.len(), betas.len())?;
    let n = groups
        .first()
        .ok_or_else(|| Error::invalid("no groups"))?
        .nrows();
    let mut y = vec![0.0; n];
    for (z, b) in groups.iter().zip(betas) {
        crate::error::ensure_len(n, z.nrows())?;
        for (o, v) in y.iter_mut().zip(z.mul_vec(b)?) {
            *o += v;
        }
    }
    add_noise(&mut y, sigma0_sq, seed)?;
    Ok(y)
}

fn add_noise(y: &mut [f64], sigma0_sq: f64, seed: u64) -> Result<()> {
    if !(sigma0_sq >= 0.0 && sigma0_sq.is_finite()) {
        return Err(Error::invalid(format!("sigma0_sq must be >= 0, got {sigma0_sq}")));
    }
    let sd = sigma0_sq.sqrt();
    let mut rng = stream_rng(seed, Stream::Noise);
    for v in y.iter_mut() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += sd * e;
    }
    Ok(())
}
