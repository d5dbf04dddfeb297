//! Fourier estimators of the spot covariance matrix from asynchronous ticks.
//!
//! Times are mapped affinely from the observation window to [0, 2 pi]. With
//! a(u) = sum_l e^{-iu tau_l} dX_l and f(u; t) = e^{iu tau} a(u), the PDF
//! estimator is
//!
//! V^{jj'}(t) = unit / (L (2N + 1)) sum_{|u|,|u'|<=N} c(u - u') f_j(u; t) conj(f_j'(u'; t)),
//!
//! with L the window length and `unit` the time unit the output variance is
//! expressed per.

mod coeffs;
mod estimate;
mod freq;
pub mod kernels;
mod oracle;
mod sweep;
mod weight;

pub use coeffs::{fourier_coeffs, FourierCoeffVector, ReturnSpectrum, Window};
pub use estimate::{
    estimate_classical, estimate_pdf, estimate_pdf_gaussian, EstimateOptions, EstimatorTag,
    MatrixDiagnostics, PreparedTicks, SpotCovEstimate,
};
pub use freq::{
    cutoff_rule, detect_noise, localization_rule, select_freq, signature_ratio, FreqParams,
    ALPHA_NOISE, ALPHA_NO_NOISE, DEFAULT_BETA, NOISE_SIGNATURE_RATIO,
};
pub use oracle::{estimate_reference_oracle, index_set, ORACLE_MAX_CUTOFF, ORACLE_MAX_INCREMENTS};
pub use sweep::cross_estimates_by_cutoff;
pub use weight::PsdWeight;

#[cfg(test)]
mod tests;
