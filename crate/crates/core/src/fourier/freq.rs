//! Cut-off frequency N and localization M, and the rules choosing them from
//! the number of observations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::TickSeries;
use crate::scalar::Scalar;

pub const ALPHA_NO_NOISE: f64 = 0.75;
pub const ALPHA_NOISE: f64 = 2.0 / 3.0;
pub const DEFAULT_BETA: f64 = 4.0 / 9.0;

/// Tick-to-subsampled realized variance ratio above which data is treated
/// as noisy.
pub const NOISE_SIGNATURE_RATIO: f64 = 1.5;

/// Subsampling stride of the signature test.
pub const SIGNATURE_STRIDE: usize = 5;

/// Estimator frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqParams {
    /// Cut-off frequency N.
    pub cutoff: usize,
    /// Localization M of the Gaussian weight.
    pub localization: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ref: Option<usize>,
}

impl FreqParams {
    pub fn new(cutoff: usize, localization: f64) -> Result<Self> {
        if !(localization > 0.0) || !localization.is_finite() {
            return Err(Error::arg(format!("localization M must be positive, got {localization}")));
        }
        Ok(Self {
            cutoff,
            localization,
            alpha: None,
            beta: None,
            n_ref: None,
        })
    }

    /// Integer Fejer order used by the classical estimator: M rounded, at
    /// least 1.
    pub fn fejer_order(&self) -> usize {
        (self.localization.round() as usize).max(1)
    }
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::arg(format!("{name} = {v} outside (0, 1]")));
    }
    Ok(())
}

/// N = max(1, floor(n^alpha / 2)).
pub fn cutoff_rule(n: usize, alpha: f64) -> Result<usize> {
    check_exponent("alpha", alpha)?;
    let x = (n as f64).powf(alpha) / 2.0;
    // powf may land a hair below an exact integer
    let x = x * (1.0 + 4.0 * f64::EPSILON);
    Ok((x.floor() as usize).max(1))
}

/// M = N^beta.
pub fn localization_rule(cutoff: usize, beta: f64) -> Result<f64> {
    check_exponent("beta", beta)?;
    if cutoff == 0 {
        return Err(Error::arg("localization rule needs N >= 1"));
    }
    Ok((cutoff as f64).powf(beta))
}

/// Frequencies from the number of observations. Missing exponents take the
/// defaults: alpha = 3/4 without noise, 2/3 with noise, beta = 4/9.
pub fn select_freq(n: usize, alpha: Option<f64>, beta: Option<f64>, noise_present: bool) -> Result<FreqParams> {
    if n < 4 {
        return Err(Error::arg(format!("need at least 4 observations, got {n}")));
    }
    let alpha = alpha.unwrap_or(if noise_present { ALPHA_NOISE } else { ALPHA_NO_NOISE });
    let beta = beta.unwrap_or(DEFAULT_BETA);
    let cutoff = cutoff_rule(n, alpha)?;
    Ok(FreqParams {
        cutoff,
        localization: localization_rule(cutoff, beta)?,
        alpha: Some(alpha),
        beta: Some(beta),
        n_ref: Some(n),
    })
}

/// Ratio of tick-level realized variance to the realized variance of every
/// `SIGNATURE_STRIDE`-th tick, averaged over the stride offsets.
pub fn signature_ratio<T: Scalar>(series: &TickSeries<T>) -> Option<f64> {
    let x: Vec<f64> = series.log_prices().iter().map(|v| v.to_f64_lossy()).collect();
    let k = SIGNATURE_STRIDE;
    if x.len() < 2 * k + 1 {
        return None;
    }
    let rv = |step: usize, start: usize| -> f64 {
        x[start..]
            .iter()
            .step_by(step)
            .zip(x[start..].iter().step_by(step).skip(1))
            .map(|(a, b)| (b - a) * (b - a))
            .sum()
    };
    let tick = rv(1, 0);
    let sub = (0..k).map(|o| rv(k, o)).sum::<f64>() / k as f64;
    if sub > 0.0 {
        Some(tick / sub)
    } else {
        None
    }
}

/// Signature test: noisy when any asset's ratio exceeds the threshold.
pub fn detect_noise<T: Scalar>(series: &[TickSeries<T>]) -> bool {
    series
        .iter()
        .filter_map(signature_ratio)
        .any(|r| r > NOISE_SIGNATURE_RATIO)
}
