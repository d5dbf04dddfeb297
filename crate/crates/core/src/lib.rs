//! Positive semi-definite Fourier estimation of spot covariance matrices
//! from asynchronous tick data, with the simulation and Monte Carlo harness
//! used to benchmark it.

pub mod error;
pub mod fourier;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod microstructure;
pub mod path_sim;
pub mod rng;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};
pub use fourier::{estimate_classical, estimate_pdf, estimate_pdf_gaussian, EstimateOptions, EstimatorTag, FreqParams, PsdWeight};
pub use scalar::Scalar;

/// f64 instantiations of the generic estimator types.
pub type TickSeriesF64 = sampling::TickSeries<f64>;
pub type SpotCovEstimateF64 = fourier::SpotCovEstimate<f64>;
pub type PreparedTicksF64 = fourier::PreparedTicks<f64>;
pub type WindowF64 = fourier::Window<f64>;
pub type ReturnSpectrumF64 = fourier::ReturnSpectrum<f64>;
pub type SquareMatrixF64 = linalg::SquareMatrix<f64>;
