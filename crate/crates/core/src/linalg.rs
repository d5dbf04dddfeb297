//! Small dense linear algebra helpers.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn from_row_major(dim: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::arg(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, &x| if x.abs() > m { x.abs() } else { m })
    }

    /// max |A_ij - A_ji|
    pub fn symmetry_residual(&self) -> T {
        let mut r = T::zero();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let d = (self.get(i, j) - self.get(j, i)).abs();
                if d > r {
                    r = d;
                }
            }
        }
        r
    }

    pub fn to_f64(&self) -> SquareMatrix<f64> {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x.to_f64_lossy()).collect(),
        }
    }

    /// Eigenvalues of the symmetric part (A + A^T)/2, ascending, in f64.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.to_f64())
    }

    /// Smallest eigenvalue of the symmetric part. Governs the sign of the real
    /// quadratic form x^T A x.
    pub fn min_eigenvalue(&self) -> f64 {
        self.symmetric_eigenvalues()
            .first()
            .copied()
            .unwrap_or(0.0)
    }

    /// Simultaneous row/column permutation: out[i][j] = self[p[i]][p[j]].
    pub fn permuted(&self, p: &[usize]) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(p[i], p[j]))
    }
}

fn symmetric_eigenvalues(m: &SquareMatrix<f64>) -> Vec<f64> {
    let d = m.dim();
    if d == 0 {
        return Vec::new();
    }
    let a = DMatrix::from_fn(d, d, |i, j| 0.5 * (m.get(i, j) + m.get(j, i)));
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Lower Cholesky factor of a symmetric PSD matrix, after checking the
/// minimum eigenvalue is nonnegative (up to `tol`). A tiny diagonal jitter is
/// added for semi-definite (rank deficient) inputs.
pub fn checked_cholesky(m: &SquareMatrix<f64>, tol: f64) -> Result<SquareMatrix<f64>> {
    let d = m.dim();
    if m.symmetry_residual() > tol {
        return Err(Error::config("correlation matrix is not symmetric"));
    }
    let min_eig = m.min_eigenvalue();
    if min_eig < -tol {
        return Err(Error::config(format!(
            "correlation matrix is not positive semi-definite (min eigenvalue {min_eig:.3e})"
        )));
    }
    let jitter = if min_eig < 1e-12 { 1e-12 } else { 0.0 };
    let a = DMatrix::from_fn(d, d, |i, j| m.get(i, j) + if i == j { jitter } else { 0.0 });
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::config("Cholesky factorization failed"))?;
    let l = chol.l();
    Ok(SquareMatrix::from_fn(d, |i, j| l[(i, j)]))
}

/// Neumaier-compensated sum. The result depends only on the order of the
/// input sequence, so callers reduce per-path values in path order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
