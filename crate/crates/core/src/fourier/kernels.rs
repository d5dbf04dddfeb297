//! Trigonometric kernels of the classical Fourier spot estimator, summed
//! term by term.

use num_complex::Complex;

use crate::scalar::Scalar;

/// Dirichlet kernel D_N(x) = sum_{|k|<=N} e^{ikx}.
pub fn dirichlet<T: Scalar>(n: usize, x: T) -> T {
    let mut s = Complex::new(T::zero(), T::zero());
    for k in -(n as i64)..=(n as i64) {
        s = s + Complex::cis(T::from_i64(k).expect("small integer") * x);
    }
    s.re
}

/// Fejer kernel F_M(x) = sum_{|k|<=M} (1 - |k|/(M+1)) e^{ikx}.
pub fn fejer<T: Scalar>(m: usize, x: T) -> T {
    let mut s = Complex::new(T::zero(), T::zero());
    let m1 = T::from_usize(m + 1).expect("small integer");
    for k in -(m as i64)..=(m as i64) {
        let kt = T::from_i64(k).expect("small integer");
        let w = T::one() - kt.abs() / m1;
        s = s + Complex::cis(kt * x) * w;
    }
    s.re
}

/// Triangular Fejer weights 1 - |k|/(M+1) for k = 0..=M.
pub fn fejer_weights<T: Scalar>(m: usize) -> Vec<T> {
    let m1 = T::from_usize(m + 1).expect("small integer");
    (0..=m)
        .map(|k| T::one() - T::from_usize(k).expect("small integer") / m1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        for n in 0..6 {
            assert!((dirichlet(n, 0.0) - (2 * n + 1) as f64).abs() < 1e-12);
            assert!((fejer(n, 0.0) - (n + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_forms() {
        let x = 0.37f64;
        let n = 5;
        let d = ((n as f64 + 0.5) * x).sin() / (x / 2.0).sin();
        assert!((dirichlet(n, x) - d).abs() < 1e-12);
        let m = 4;
        let f = ((m as f64 + 1.0) * x / 2.0).sin().powi(2) / ((m as f64 + 1.0) * (x / 2.0).sin().powi(2));
        assert!((fejer(m, x) - f).abs() < 1e-12);
    }
}
