//! Literal evaluation of the index-set estimator, for validating the
//! factorized PDF estimator on small inputs.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::sampling::TickSeries;
use crate::scalar::Scalar;

use super::estimate::{EstimateOptions, EstimatorTag, MatrixDiagnostics, SpotCovEstimate};
use super::freq::FreqParams;
use super::weight::PsdWeight;
use super::coeffs::Window;

pub const ORACLE_MAX_INCREMENTS: usize = 100;
pub const ORACLE_MAX_CUTOFF: usize = 10;

/// Pairs (s, s') with s + s' = k, |s|, |s'| <= N, in the v-parameterization:
/// (-N + k + v, N - v) for v = 0..=2N-k when k >= 0, and
/// (N + k - v, -N + v) for v = 0..=2N+k when k < 0.
pub fn index_set(n: usize, k: i64) -> Vec<(i64, i64)> {
    let n = n as i64;
    if k >= 0 {
        (0..=2 * n - k).map(|v| (-n + k + v, n - v)).collect()
    } else {
        (0..=2 * n + k).map(|v| (n + k - v, -n + v)).collect()
    }
}

/// sum_{l,l'} sum_{|k|<=2N} c(k) e^{ik tau} sum_{(s,s') in S(k)}
/// e^{-is tau^j_l} e^{-is' tau^j'_l'} dX^j_l dX^j'_l', scaled to variance
/// per unit. Every entry is summed separately; nothing is mirrored.
pub fn estimate_reference_oracle<T: Scalar>(
    ticks: &[TickSeries<T>],
    n: usize,
    weight: &PsdWeight,
    eval_times: &[T],
    opts: &EstimateOptions,
) -> Result<SpotCovEstimate<T>> {
    if n > ORACLE_MAX_CUTOFF || ticks.iter().any(|s| s.n_increments() > ORACLE_MAX_INCREMENTS) {
        return Err(Error::arg(format!(
            "reference oracle limited to N <= {ORACLE_MAX_CUTOFF} and {ORACLE_MAX_INCREMENTS} returns per asset"
        )));
    }
    let window = Window::common(ticks)?;
    let d = ticks.len();
    let two_pi = T::from_f64_lossy(std::f64::consts::TAU);
    let rescale = |t: T| two_pi * (t - window.t0) / (window.t_end - window.t0);
    let returns: Vec<Vec<(T, T)>> = ticks
        .iter()
        .map(|s| {
            let x = s.log_prices();
            s.times()
                .iter()
                .enumerate()
                .skip(1)
                .map(|(l, &t)| (rescale(t), x[l] - x[l - 1]))
                .collect()
        })
        .collect();
    let kappa = opts.scale(&window, n)?;
    let ks: Vec<i64> = (-2 * n as i64..=2 * n as i64).collect();
    let sets: Vec<Vec<(i64, i64)>> = ks.iter().map(|&k| index_set(n, k)).collect();
    let int = |k: i64| T::from_i64(k).expect("small integer");
    let zero = Complex::new(T::zero(), T::zero());
    let mut matrices = Vec::new();
    let mut diagnostics = Vec::new();
    for &t in eval_times {
        let tau = rescale(t);
        let mut m = SquareMatrix::zeros(d);
        let mut imag = T::zero();
        for j in 0..d {
            for jp in 0..d {
                let mut total = zero;
                for &(tl, dx) in &returns[j] {
                    for &(tlp, dxp) in &returns[jp] {
                        for (&k, set) in ks.iter().zip(&sets) {
                            let a1 = Complex::cis(int(k) * tau) * T::from_f64_lossy(weight.at(k));
                            for &(s, sp) in set {
                                let a2 = Complex::cis(-int(s) * tl);
                                let a3 = Complex::cis(-int(sp) * tlp);
                                total = total + a1 * a2 * a3 * (dx * dxp);
                            }
                        }
                    }
                }
                m.set(j, jp, total.re * kappa);
                imag = imag.max((total.im * kappa).abs());
            }
        }
        diagnostics.push(MatrixDiagnostics::of(&m, imag.to_f64_lossy()));
        matrices.push(m);
    }
    Ok(SpotCovEstimate {
        eval_times: eval_times.to_vec(),
        matrices,
        tag: EstimatorTag::ReferenceOracle,
        freq: FreqParams {
            cutoff: n,
            localization: match weight {
                PsdWeight::Gaussian { m } => *m,
                _ => f64::NAN,
            },
            alpha: None,
            beta: None,
            n_ref: None,
        },
        diagnostics,
    })
}
