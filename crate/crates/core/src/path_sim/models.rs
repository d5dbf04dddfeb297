//! Volatility model parameterizations. All rates are per model time unit
//! (one trading day by default).

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HestonParams {
    pub mu: f64,
    /// Mean reversion speed of the variance.
    pub gamma: f64,
    /// Long run variance; also the starting variance.
    pub theta: f64,
    /// Volatility of variance.
    pub nu: f64,
    /// Correlation between price and variance shocks.
    pub lambda: f64,
}

impl Default for HestonParams {
    fn default() -> Self {
        Self {
            mu: 0.05 / 252.0,
            gamma: 5.0 / 252.0,
            theta: 0.1,
            nu: 0.5 / 252.0,
            lambda: -0.5,
        }
    }
}

/// One factor model: sigma = exp(beta0 + beta1 tau), d tau = alpha tau dt + dZ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sv1fParams {
    pub mu: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub alpha: f64,
    pub lambda: f64,
}

impl Default for Sv1fParams {
    fn default() -> Self {
        let beta1 = 0.125;
        let alpha = -0.025;
        Self {
            mu: 0.03,
            beta0: beta1 / (2.0 * alpha),
            beta1,
            alpha,
            lambda: -0.3,
        }
    }
}

/// Two factor model with spliced exponential volatility link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sv2fParams {
    pub mu: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta_v: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub lambda: f64,
}

impl Default for Sv2fParams {
    fn default() -> Self {
        Self {
            mu: 0.03,
            beta0: -1.1,
            beta1: 0.04,
            beta2: 0.3,
            beta_v: -0.003,
            alpha1: -0.6,
            alpha2: 0.25,
            lambda: -0.3,
        }
    }
}

/// Rough Heston in Volterra form with kernel K(t) = C t^(H - 1/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoughHestonParams {
    pub v0: f64,
    pub theta: f64,
    pub gamma: f64,
    pub nu: f64,
    pub lambda: f64,
    pub hurst: f64,
    pub kernel_c: f64,
}

impl Default for RoughHestonParams {
    fn default() -> Self {
        let (theta, gamma, hurst) = (0.2, 0.3, 0.1);
        Self {
            v0: theta / gamma,
            theta,
            gamma,
            nu: 0.2,
            lambda: -0.7,
            hurst,
            kernel_c: 1.0 / gamma_fn(hurst + 0.5),
        }
    }
}


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Heston(HestonParams),
    Sv1f(Sv1fParams),
    Sv2f(Sv2fParams),
    RoughHeston(RoughHestonParams),
}

impl ModelParams {
    pub fn name(&self) -> &'static str {
        match self {
            ModelParams::Heston(_) => "heston",
            ModelParams::Sv1f(_) => "sv1f",
            ModelParams::Sv2f(_) => "sv2f",
            ModelParams::RoughHeston(_) => "rough_heston",
        }
    }

    /// Number of volatility drivers per asset.
    pub fn vol_factors(&self) -> usize {
        match self {
            ModelParams::Sv2f(_) => 2,
            _ => 1,
        }
    }

    /// Price/volatility shock correlation.
    pub fn leverage(&self) -> f64 {
        match self {
            ModelParams::Heston(p) => p.lambda,
            ModelParams::Sv1f(p) => p.lambda,
            ModelParams::Sv2f(p) => p.lambda,
            ModelParams::RoughHeston(p) => p.lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lev = self.leverage();
        if !(lev > -1.0 && lev < 1.0) {
            return Err(Error::arg(format!("leverage {lev} outside (-1, 1)")));
        }
        match self {
            ModelParams::Heston(p) => {
                if p.theta <= 0.0 || p.gamma < 0.0 || p.nu < 0.0 {
                    return Err(Error::arg("Heston requires theta > 0, gamma >= 0, nu >= 0"));
                }
            }
            ModelParams::Sv1f(_) | ModelParams::Sv2f(_) => {}
            ModelParams::RoughHeston(p) => {
                if !(p.hurst > 0.0 && p.hurst <= 0.5) {
                    return Err(Error::arg(format!(
                        "Hurst index {} outside (0, 1/2]",
                        p.hurst
                    )));
                }
                if p.kernel_c <= 0.0 {
                    return Err(Error::arg("kernel constant must be positive"));
                }
                if p.v0 < 0.0 {
                    return Err(Error::arg("initial variance must be nonnegative"));
                }
            }
        }
        Ok(())
    }
}

/// Splice point of the two factor volatility link.
pub fn s_exp_threshold() -> f64 {
    1.5f64.ln()
}

/// Exponential below `log(1.5)`, square-root growth above it.
pub fn s_exp(x: f64) -> f64 {
    let x0 = s_exp_threshold();
    if x <= x0 {
        x.exp()
    } else {
        x0.exp() / x0.sqrt() * (x0 - x0 * x0 + x * x).sqrt()
    }
}
