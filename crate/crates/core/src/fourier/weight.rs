//! Positive semi-definite weight functions c(k) on the integers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;

/// Weight c(k), even in k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsdWeight {
    /// c(k) = exp(-2 pi^2 k^2 / M).
    Gaussian { m: f64 },
    /// c(k) = max(0, 1 - |k|/(M+1)).
    Fejer { m: usize },
    /// c(|k|) from the table, zero beyond it.
    Custom { table: Vec<f64> },
}

impl PsdWeight {
    pub fn gaussian(m: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::config(format!("Gaussian localization must be positive, got {m}")));
        }
        Ok(PsdWeight::Gaussian { m })
    }

    pub fn fejer(m: usize) -> Self {
        PsdWeight::Fejer { m }
    }

    /// c(0) = 1 and zero elsewhere.
    pub fn delta() -> Self {
        PsdWeight::Custom { table: vec![1.0] }
    }

    pub fn custom(table: Vec<f64>) -> Result<Self> {
        if table.is_empty() || table.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("custom weight table must be non-empty and finite"));
        }
        Ok(PsdWeight::Custom { table })
    }

    pub fn at(&self, k: i64) -> f64 {
        let k = k.unsigned_abs();
        match self {
            PsdWeight::Gaussian { m } => {
                let kf = k as f64;
                (-2.0 * std::f64::consts::PI.powi(2) * kf * kf / m).exp()
            }
            PsdWeight::Fejer { m } => {
                if k as usize > *m {
                    0.0
                } else {
                    1.0 - k as f64 / (*m as f64 + 1.0)
                }
            }
            PsdWeight::Custom { table } => table.get(k as usize).copied().unwrap_or(0.0),
        }
    }

    /// Values c(0..=b), where b <= max_lag is the largest lag with a nonzero
    /// weight. Lags beyond b contribute exactly nothing.
    pub fn table(&self, max_lag: usize) -> Vec<f64> {
        let mut out: Vec<f64> = (0..=max_lag).map(|k| self.at(k as i64)).collect();
        while out.len() > 1 && out[out.len() - 1] == 0.0 {
            out.pop();
        }
        out
    }

    /// Smallest eigenvalue of the size x size Toeplitz matrix [c(u - u')].
    pub fn toeplitz_min_eigenvalue(&self, size: usize) -> f64 {
        SquareMatrix::from_fn(size, |i, j| self.at(i as i64 - j as i64)).min_eigenvalue()
    }

    /// Check that the weight is usable for cut-off `n_cut`. The Gaussian and
    /// Fejer families are positive definite sequences for every size; custom
    /// tables are checked on the (2N+1)-dimensional Toeplitz matrix.
    pub fn validate(&self, n_cut: usize) -> Result<()> {
        match self {
            PsdWeight::Gaussian { m } => {
                if !(*m > 0.0) || !m.is_finite() {
                    return Err(Error::config(format!("Gaussian localization must be positive, got {m}")));
                }
            }
            PsdWeight::Fejer { .. } => {}
            PsdWeight::Custom { table } => {
                if table.is_empty() || table.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("custom weight table must be non-empty and finite"));
                }
                let size = 2 * n_cut + 1;
                let tol = 1e-10 * table[0].abs().max(1.0);
                let min = self.toeplitz_min_eigenvalue(size);
                if min < -tol {
                    return Err(Error::config(format!(
                        "weight is not positive semi-definite: Toeplitz minimum eigenvalue {min:.3e} at size {size}"
                    )));
                }
            }
        }
        Ok(())
    }
}
