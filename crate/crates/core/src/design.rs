use faer::{Mat, MatRef};

use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;

/// Dense `n × p` design matrix `Z`, one row per observation.
#[derive(Debug, Clone)]
pub struct DesignMatrix<T: Real> {
    entries: Mat<T>,
}

impl<T: Real> DesignMatrix<T> {
    pub fn new(entries: Mat<T>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::invalid(format!(
                "design must be at least 1x1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        for j in 0..entries.ncols() {
            for i in 0..entries.nrows() {
                if !entries[(i, j)].is_finite() {
                    return Err(Error::invalid(format!(
                        "non-finite design entry at row {i}, column {j}"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn from_fn(n: usize, p: usize, f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        Self::new(Mat::from_fn(n, p, f))
    }

    /// Builds a design from row-major observations.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        for row in rows {
            ensure_len(p, row.len())?;
        }
        Self::from_fn(n, p, |i, j| rows[i][j])
    }

    /// Builds a design from column-major storage of length `n * p`.
    pub fn from_column_major(n: usize, p: usize, data: &[T]) -> Result<Self> {
        ensure_len(n * p, data.len())?;
        Self::from_fn(n, p, |i, j| data[j * n + i])
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[(i, j)]
    }

    pub fn as_mat(&self) -> MatRef<'_, T> {
        self.entries.as_ref()
    }

    pub fn into_mat(self) -> Mat<T> {
        self.entries
    }

    /// `p⁻¹ Z Zᵀ`, the `n × n` Gram operator every estimator works with.
    pub fn scaled_gram(&self) -> Mat<T> {
        let scale = T::one() / T::from_count(self.ncols());
        let z = self.entries.as_ref();
        let mut gram = z * z.transpose();
        for j in 0..gram.ncols() {
            for i in 0..gram.nrows() {
                gram[(i, j)] = gram[(i, j)] * scale;
            }
        }
        symmetrize(&mut gram);
        gram
    }

    /// `Z β`.
    pub fn mul_vec(&self, beta: &[T]) -> Result<Vec<T>> {
        ensure_len(self.ncols(), beta.len())?;
        let mut out = vec![T::zero(); self.nrows()];
        for (j, &b) in beta.iter().enumerate() {
            if b == T::zero() {
                continue;
            }
            let col = self.entries.col(j);
            for (o, &z) in out.iter_mut().zip(col.iter()) {
                *o = *o + z * b;
            }
        }
        Ok(out)
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<T> {
        self.entries.col(j).iter().copied().collect()
    }

    /// Horizontal concatenation `[Z₁ … Z_s]`.
    pub fn hconcat(parts: &[DesignMatrix<T>]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("cannot concatenate zero blocks"))?;
        let n = first.nrows();
        for part in parts {
            ensure_len(n, part.nrows())?;
        }
        let p: usize = parts.iter().map(DesignMatrix::ncols).sum();
        let mut offsets = Vec::with_capacity(parts.len());
        for (k, part) in parts.iter().enumerate() {
            for j in 0..part.ncols() {
                offsets.push((k, j));
            }
        }
        Self::from_fn(n, p, |i, j| {
            let (k, jj) = offsets[j];
            parts[k].get(i, jj)
        })
    }
}

/// Averages `a` with its transpose to remove roundoff asymmetry.
pub(crate) fn symmetrize<T: Real>(a: &mut Mat<T>) {
    let n = a.nrows();
    let half = T::lit(0.5);
    for j in 0..n {
        for i in (j + 1)..n {
            let v = (a[(i, j)] + a[(j, i)]) * half;
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_entries() {
        let err = DesignMatrix::<f64>::from_fn(2, 2, |i, j| if i == 1 && j == 0 { f64::NAN } else { 1.0 })
            .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn rejects_empty_design() {
        assert!(DesignMatrix::<f64>::from_fn(0, 3, |_, _| 0.0).is_err());
        assert!(DesignMatrix::<f64>::from_fn(3, 0, |_, _| 0.0).is_err());
    }

    #[test]
    fn ragged_rows_are_a_dimension_mismatch() {
        let rows = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(matches!(
            DesignMatrix::<f64>::from_rows(&rows),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn gram_and_product() {
        let z = DesignMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, -1.0]]).unwrap();
        let g = z.scaled_gram();
        assert_eq!(g[(0, 0)], 2.5);
        assert_eq!(g[(0, 1)], -1.0);
        assert_eq!(g[(1, 1)], 0.5);
        assert_eq!(z.mul_vec(&[1.0, 1.0]).unwrap(), vec![3.0, -1.0]);
    }

    #[test]
    fn hconcat_preserves_blocks() {
        let a = DesignMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let b = DesignMatrix::from_rows(&[vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let z = DesignMatrix::hconcat(&[a, b]).unwrap();
        assert_eq!(z.ncols(), 3);
        assert_eq!(z.get(1, 0), 2.0);
        assert_eq!(z.get(0, 2), 4.0);
    }
}
