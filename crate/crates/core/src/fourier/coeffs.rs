//! Fourier coefficients of the returns after mapping the window to [0, 2 pi].

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::sampling::TickSeries;
use crate::scalar::Scalar;

/// Re-anchor the e^{-iu tau} recurrence with a direct evaluation this often.
const REANCHOR: usize = 32;

/// Observation window shared by all assets, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<T> {
    pub t0: T,
    pub t_end: T,
}

impl<T: Scalar> Window<T> {
    pub fn new(t0: T, t_end: T) -> Result<Self> {
        if !(t_end > t0) {
            return Err(Error::arg(format!("empty window [{t0}, {t_end}]")));
        }
        Ok(Self { t0, t_end })
    }

    /// Common first and last observation time of all series.
    pub fn common(series: &[TickSeries<T>]) -> Result<Self> {
        let first = series.first().ok_or_else(|| Error::arg("no tick series"))?;
        let (t0, t1) = first.window();
        let w = Self::new(t0, t1)?;
        let tol = w.tolerance();
        for s in series {
            let (a, b) = s.window();
            if (a - t0).abs() > tol || (b - t1).abs() > tol {
                return Err(Error::arg(format!(
                    "asset {} spans [{a}, {b}], expected the common window [{t0}, {t1}]",
                    s.asset_id()
                )));
            }
        }
        Ok(w)
    }

    fn tolerance(&self) -> T {
        let scale = self.t0.abs().max(self.t_end.abs()).max(self.length());
        scale * T::epsilon() * T::from_f64_lossy(64.0)
    }

    pub fn length(&self) -> T {
        self.t_end - self.t0
    }

    pub fn contains(&self, t: T) -> bool {
        let tol = self.tolerance();
        t >= self.t0 - tol && t <= self.t_end + tol
    }

    /// Rescaled time 2 pi (t - t0) / L.
    pub fn phase(&self, t: T) -> T {
        T::from_f64_lossy(std::f64::consts::TAU) * (t - self.t0) / self.length()
    }
}

/// a(u) = sum_l e^{-iu tau_l} dX_l for u = 0..=max_freq, tau_l the rescaled
/// right endpoint of return l. Negative frequencies are conjugates.
#[derive(Debug, Clone)]
pub struct ReturnSpectrum<T> {
    asset_id: usize,
    coeffs: Vec<Complex<T>>,
}

impl<T: Scalar> ReturnSpectrum<T> {
    pub fn new(series: &TickSeries<T>, window: &Window<T>, max_freq: usize) -> Result<Self> {
        let (a, b) = series.window();
        if !window.contains(a) || !window.contains(b) {
            return Err(Error::arg(format!("asset {} has ticks outside the window", series.asset_id())));
        }
        if series.n_increments() == 0 {
            return Err(Error::arg(format!("asset {} has no returns", series.asset_id())));
        }
        let zero = Complex::new(T::zero(), T::zero());
        let mut coeffs = vec![zero; max_freq + 1];
        for (t, dx) in series.increments() {
            let tau = window.phase(t);
            let step = Complex::cis(-tau);
            let mut w = Complex::new(T::one(), T::zero());
            for (u, c) in coeffs.iter_mut().enumerate() {
                *c = *c + w * dx;
                if (u + 1) % REANCHOR == 0 {
                    w = Complex::cis(-tau * T::from_usize(u + 1).expect("frequency fits"));
                } else {
                    w = w * step;
                }
            }
        }
        Ok(Self {
            asset_id: series.asset_id(),
            coeffs,
        })
    }

    pub fn asset_id(&self) -> usize {
        self.asset_id
    }

    pub fn max_freq(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[inline]
    pub fn at(&self, u: i64) -> Complex<T> {
        let c = self.coeffs[u.unsigned_abs() as usize];
        if u < 0 {
            c.conj()
        } else {
            c
        }
    }

    /// a(u) for u = -n..=n.
    pub fn symmetric(&self, n: usize) -> Vec<Complex<T>> {
        (-(n as i64)..=n as i64).map(|u| self.at(u)).collect()
    }

    /// f(u) = e^{iu tau} a(u), u = -n..=n, at rescaled time `tau`.
    pub fn coeff_vector(&self, n: usize, t_eval: T, tau: T) -> Result<FourierCoeffVector<T>> {
        if n > self.max_freq() {
            return Err(Error::arg(format!(
                "frequency {n} above the computed range {}",
                self.max_freq()
            )));
        }
        let values = (-(n as i64)..=n as i64)
            .map(|u| Complex::cis(tau * T::from_i64(u).expect("frequency fits")) * self.at(u))
            .collect();
        Ok(FourierCoeffVector {
            asset_id: self.asset_id,
            t_eval,
            values,
        })
    }
}

/// Coefficients f(u; t) = sum_l e^{iu(tau - tau_l)} dX_l for u = -N..=N.
#[derive(Debug, Clone)]
pub struct FourierCoeffVector<T> {
    pub asset_id: usize,
    pub t_eval: T,
    values: Vec<Complex<T>>,
}

impl<T: Scalar> FourierCoeffVector<T> {
    pub fn cutoff(&self) -> usize {
        (self.values.len() - 1) / 2
    }

    pub fn get(&self, u: i64) -> Complex<T> {
        self.values[(u + self.cutoff() as i64) as usize]
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }
}

/// Coefficient vector of one asset at time `t_eval` (seconds).
pub fn fourier_coeffs<T: Scalar>(
    ticks: &TickSeries<T>,
    n: usize,
    t_eval: T,
    window: &Window<T>,
) -> Result<FourierCoeffVector<T>> {
    ReturnSpectrum::new(ticks, window, n)?.coeff_vector(n, t_eval, window.phase(t_eval))
}
