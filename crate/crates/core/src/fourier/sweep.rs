//! Cross-covariance estimates over a range of cut-off frequencies.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::coeffs::{ReturnSpectrum, Window};
use super::estimate::EstimateOptions;
use super::freq::localization_rule;
use super::weight::PsdWeight;

/// PDF estimate of V^{12}(t) for every N = 0..=n_max, with M = N^beta for
/// N >= 1 and c = 1 at lag 0 for N = 0.
///
/// R_N(k) = sum_{u - u' = k, |u|,|u'| <= N} a_1(u) conj(a_2(u')) is updated
/// in O(N) from R_{N-1} and the estimate is kappa_N Re sum_k c_N(k) e^{ik tau} R_N(k).
pub fn cross_estimates_by_cutoff<T: Scalar>(
    first: &ReturnSpectrum<T>,
    second: &ReturnSpectrum<T>,
    window: &Window<T>,
    t_eval: T,
    n_max: usize,
    beta: f64,
    opts: &EstimateOptions,
) -> Result<Vec<T>> {
    if first.max_freq() < n_max || second.max_freq() < n_max {
        return Err(Error::arg(format!("spectra must reach frequency {n_max}")));
    }
    if !window.contains(t_eval) {
        return Err(Error::arg(format!("evaluation time {t_eval} outside the window")));
    }
    let tau = window.phase(t_eval);
    let off = 2 * n_max as i64;
    let zero = Complex::new(T::zero(), T::zero());
    let mut r = vec![zero; 4 * n_max + 1];
    let add = |r: &mut Vec<Complex<T>>, u: i64, up: i64| {
        r[(u - up + off) as usize] = r[(u - up + off) as usize] + first.at(u) * second.at(up).conj();
    };
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let ni = n as i64;
        for k in 0..=2 * ni {
            add(&mut r, ni, ni - k);
        }
        if n > 0 {
            for k in -2 * ni..=0 {
                add(&mut r, -ni, -ni - k);
            }
            for k in -2 * ni + 1..0 {
                add(&mut r, ni + k, ni);
            }
            for k in 1..2 * ni {
                add(&mut r, k - ni, -ni);
            }
        }
        let weights = if n == 0 {
            vec![1.0]
        } else {
            PsdWeight::gaussian(localization_rule(n, beta)?)?.table(2 * n)
        };
        let mut s = T::zero();
        for (k, &c) in weights.iter().enumerate() {
            let c = T::from_f64_lossy(c);
            let kt = T::from_usize(k).expect("lag fits");
            let ki = k as i64;
            s = s + c * (Complex::cis(kt * tau) * r[(ki + off) as usize]).re;
            if k > 0 {
                s = s + c * (Complex::cis(-kt * tau) * r[(off - ki) as usize]).re;
            }
        }
        out.push(s * opts.scale(window, n)?);
    }
    Ok(out)
}
