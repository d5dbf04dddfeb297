//! PDF and classical Fourier spot covariance estimators.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::sampling::TickSeries;
use crate::scalar::Scalar;

use super::coeffs::{ReturnSpectrum, Window};
use super::freq::FreqParams;
use super::kernels::fejer_weights;
use super::weight::PsdWeight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorTag {
    Pdf,
    Classical,
    ReferenceOracle,
    /// Estimates computed outside this crate and read from a file.
    External,
}

impl EstimatorTag {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorTag::Pdf => "pdf",
            EstimatorTag::Classical => "classical",
            EstimatorTag::ReferenceOracle => "reference_oracle",
            EstimatorTag::External => "external",
        }
    }
}

/// Per-matrix checks, computed in f64.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixDiagnostics {
    /// Smallest eigenvalue of the symmetric part.
    pub min_eigenvalue: f64,
    pub trace: f64,
    /// max |V_ij - V_ji|.
    pub symmetry_residual: f64,
    pub max_abs: f64,
    /// Largest imaginary part discarded when taking the real part.
    pub imag_residue: f64,
}

impl MatrixDiagnostics {
    pub fn of<T: Scalar>(m: &SquareMatrix<T>, imag_residue: f64) -> Self {
        let f = m.to_f64();
        Self {
            min_eigenvalue: f.min_eigenvalue(),
            trace: f.trace(),
            symmetry_residual: f.symmetry_residual(),
            max_abs: f.max_abs(),
            imag_residue,
        }
    }

    /// Symmetric with min eigenvalue >= -tol * max(trace, 1).
    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -tol * self.trace.max(1.0) && self.symmetry_residual <= tol * self.max_abs
    }

    pub fn imag_residue_ok(&self, tol: f64) -> bool {
        self.imag_residue <= tol * self.trace.abs().max(1.0)
    }
}

/// Estimated covariance matrices on an evaluation grid.
#[derive(Debug, Clone)]
pub struct SpotCovEstimate<T = f64> {
    pub eval_times: Vec<T>,
    pub matrices: Vec<SquareMatrix<T>>,
    pub tag: EstimatorTag,
    pub freq: FreqParams,
    pub diagnostics: Vec<MatrixDiagnostics>,
}

impl<T: Scalar> SpotCovEstimate<T> {
    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.dim())
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// All matrices pass the PSD check at the scalar type's tolerance.
    pub fn all_psd(&self) -> bool {
        let tol = T::check_tolerance().to_f64_lossy();
        self.diagnostics.iter().all(|d| d.is_psd(tol))
    }

    pub fn all_imag_residues_ok(&self) -> bool {
        let tol = T::check_tolerance().to_f64_lossy();
        self.diagnostics.iter().all(|d| d.imag_residue_ok(tol))
    }
}

/// Output normalization.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimateOptions {
    /// Length in seconds of the time unit the variances are expressed per;
    /// `None` means per window.
    pub unit_seconds: Option<f64>,
}

impl EstimateOptions {
    pub fn per_unit(unit_seconds: f64) -> Self {
        Self {
            unit_seconds: Some(unit_seconds),
        }
    }

    /// Factor unit / (L (2N + 1)) turning raw sums into variance per unit.
    pub(crate) fn scale<T: Scalar>(&self, window: &Window<T>, n_cut: usize) -> Result<T> {
        let l = window.length().to_f64_lossy();
        let unit = self.unit_seconds.unwrap_or(l);
        if !(unit > 0.0) || !unit.is_finite() {
            return Err(Error::arg(format!("time unit must be positive, got {unit}")));
        }
        Ok(T::from_f64_lossy(unit / (l * (2 * n_cut + 1) as f64)))
    }
}

/// Tick data with return spectra computed up to a fixed frequency, reusable
/// across estimator settings that need no higher frequency.
#[derive(Debug, Clone)]
pub struct PreparedTicks<T = f64> {
    window: Window<T>,
    spectra: Vec<ReturnSpectrum<T>>,
}

impl<T: Scalar> PreparedTicks<T> {
    pub fn new(ticks: &[TickSeries<T>], max_freq: usize) -> Result<Self> {
        let window = Window::common(ticks)?;
        let spectra = ticks
            .iter()
            .map(|s| ReturnSpectrum::new(s, &window, max_freq))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { window, spectra })
    }

    pub fn dim(&self) -> usize {
        self.spectra.len()
    }

    pub fn window(&self) -> &Window<T> {
        &self.window
    }

    pub fn spectra(&self) -> &[ReturnSpectrum<T>] {
        &self.spectra
    }

    pub fn max_freq(&self) -> usize {
        self.spectra[0].max_freq()
    }

    fn check(&self, needed: usize, eval_times: &[T]) -> Result<()> {
        if needed > self.max_freq() {
            return Err(Error::arg(format!(
                "frequency {needed} needed but spectra only reach {}",
                self.max_freq()
            )));
        }
        if let Some(t) = eval_times.iter().find(|&&t| !self.window.contains(t)) {
            return Err(Error::arg(format!(
                "evaluation time {t} outside the window [{}, {}]",
                self.window.t0, self.window.t_end
            )));
        }
        Ok(())
    }

    /// V(t) = kappa sum_{u,u'} c(u - u') f_j(u; t) conj(f_j'(u'; t)) as
    /// G = F C F^H, with the banded Toeplitz product over the nonzero
    /// weights. Upper triangle computed, lower mirrored.
    pub fn pdf(&self, freq: &FreqParams, weight: &PsdWeight, eval_times: &[T], opts: &EstimateOptions) -> Result<SpotCovEstimate<T>> {
        let n = freq.cutoff;
        self.check(n, eval_times)?;
        weight.validate(n)?;
        let kappa = self.window_scale(opts, n)?;
        let d = self.dim();
        let width = 2 * n + 1;
        let a: Vec<Vec<Complex<T>>> = self.spectra.iter().map(|s| s.symmetric(n)).collect();
        let ctab: Vec<T> = weight.table(2 * n).into_iter().map(T::from_f64_lossy).collect();
        let band = ctab.len() - 1;
        let zero = Complex::new(T::zero(), T::zero());
        let mut ct = vec![zero; 2 * band + 1];
        let mut hs: Vec<Vec<Complex<T>>> = vec![vec![zero; width]; d];
        let mut matrices = Vec::with_capacity(eval_times.len());
        let mut diagnostics = Vec::with_capacity(eval_times.len());
        for &t in eval_times {
            let tau = self.window.phase(t);
            for (k, &c) in ctab.iter().enumerate() {
                let z = Complex::cis(tau * T::from_usize(k).expect("lag fits")) * c;
                ct[band + k] = z;
                ct[band - k] = z.conj();
            }
            for (aj, hj) in a.iter().zip(hs.iter_mut()) {
                // h[u'] = sum_u a(u) c(u - u') e^{i(u - u') tau}
                for (up, out) in hj.iter_mut().enumerate() {
                    let lo = up.saturating_sub(band);
                    let hi = (up + band).min(width - 1);
                    let mut acc = zero;
                    for u in lo..=hi {
                        acc = acc + aj[u] * ct[band + u - up];
                    }
                    *out = acc;
                }
            }
            let mut m = SquareMatrix::zeros(d);
            let mut imag = T::zero();
            for j in 0..d {
                for jp in j..d {
                    let g: Complex<T> = hs[j]
                        .iter()
                        .zip(&a[jp])
                        .fold(zero, |s, (x, y)| s + *x * y.conj());
                    let v = g.re * kappa;
                    imag = imag.max((g.im * kappa).abs());
                    m.set(j, jp, v);
                    m.set(jp, j, v);
                }
            }
            diagnostics.push(MatrixDiagnostics::of(&m, imag.to_f64_lossy()));
            matrices.push(m);
        }
        Ok(SpotCovEstimate {
            eval_times: eval_times.to_vec(),
            matrices,
            tag: EstimatorTag::Pdf,
            freq: *freq,
            diagnostics,
        })
    }

    /// Classical Fejer-Dirichlet estimator:
    /// V = kappa Re sum_{|k|<=M} (1 - |k|/(M+1)) e^{ik tau} sum_{|s|<=N} a_j(k - s) a_j'(s).
    /// Needs spectra up to N + M. No symmetry or PSD guarantee.
    pub fn classical(&self, n: usize, m: usize, eval_times: &[T], opts: &EstimateOptions, freq: &FreqParams) -> Result<SpotCovEstimate<T>> {
        self.check(n + m, eval_times)?;
        let kappa = self.window_scale(opts, n)?;
        let d = self.dim();
        let w: Vec<T> = fejer_weights(m);
        let zero = Complex::new(T::zero(), T::zero());
        let n_i = n as i64;
        // phi[j][jp][k] for k = 0..=m; negative k are conjugates
        let mut phi = vec![vec![vec![zero; m + 1]; d]; d];
        for j in 0..d {
            for jp in 0..d {
                let (aj, ajp) = (&self.spectra[j], &self.spectra[jp]);
                for (k, out) in phi[j][jp].iter_mut().enumerate() {
                    let k = k as i64;
                    *out = (-n_i..=n_i).fold(zero, |s, q| s + aj.at(k - q) * ajp.at(q));
                }
            }
        }
        let two = T::one() + T::one();
        let mut matrices = Vec::with_capacity(eval_times.len());
        let mut diagnostics = Vec::with_capacity(eval_times.len());
        for &t in eval_times {
            let tau = self.window.phase(t);
            let rot: Vec<Complex<T>> = (0..=m)
                .map(|k| Complex::cis(tau * T::from_usize(k).expect("lag fits")))
                .collect();
            let mtx = SquareMatrix::from_fn(d, |j, jp| {
                let p = &phi[j][jp];
                let mut s = w[0] * p[0].re;
                for k in 1..=m {
                    s = s + two * w[k] * (rot[k] * p[k]).re;
                }
                s * kappa
            });
            diagnostics.push(MatrixDiagnostics::of(&mtx, 0.0));
            matrices.push(mtx);
        }
        let mut freq = *freq;
        freq.cutoff = n;
        Ok(SpotCovEstimate {
            eval_times: eval_times.to_vec(),
            matrices,
            tag: EstimatorTag::Classical,
            freq,
            diagnostics,
        })
    }

    fn window_scale(&self, opts: &EstimateOptions, n: usize) -> Result<T> {
        opts.scale(&self.window, n)
    }
}

/// PDF estimate at the given times (seconds).
pub fn estimate_pdf<T: Scalar>(
    ticks: &[TickSeries<T>],
    freq: &FreqParams,
    weight: &PsdWeight,
    eval_times: &[T],
    opts: &EstimateOptions,
) -> Result<SpotCovEstimate<T>> {
    PreparedTicks::new(ticks, freq.cutoff)?.pdf(freq, weight, eval_times, opts)
}

/// PDF estimate with the Gaussian weight of localization `freq.localization`.
pub fn estimate_pdf_gaussian<T: Scalar>(
    ticks: &[TickSeries<T>],
    freq: &FreqParams,
    eval_times: &[T],
    opts: &EstimateOptions,
) -> Result<SpotCovEstimate<T>> {
    estimate_pdf(ticks, freq, &PsdWeight::gaussian(freq.localization)?, eval_times, opts)
}

/// Classical estimate with Dirichlet order `n` and Fejer order `m`.
pub fn estimate_classical<T: Scalar>(
    ticks: &[TickSeries<T>],
    n: usize,
    m: usize,
    eval_times: &[T],
    opts: &EstimateOptions,
) -> Result<SpotCovEstimate<T>> {
    if m == 0 {
        return Err(Error::arg("Fejer order must be positive"));
    }
    let freq = FreqParams::new(n, m as f64)?;
    PreparedTicks::new(ticks, n + m)?.classical(n, m, eval_times, opts, &freq)
}
