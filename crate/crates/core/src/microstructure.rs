//! Market microstructure noise: observed log-prices X~ = X + eta on the dense
//! grid.
//!
//! Noise magnitudes are calibrated per asset and per path against the sample
//! variance of the efficient 10 second log-returns.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path_sim::PanelBundle;
use crate::rng;

/// Calibration horizon for noise variances, in seconds.
pub const CALIBRATION_GAP_SECONDS: f64 = 10.0;

/// Default i.i.d.-equivalent variance ratio for the autocorrelated cases.
pub const DEFAULT_OU_VARIANCE_RATIO: f64 = 2.0;

/// Default mean reversion (per second) of the correlated and
/// heteroskedastic noise.
pub const DEFAULT_OU_THETA: f64 = 0.3;

fn default_ratio() -> f64 {
    DEFAULT_OU_VARIANCE_RATIO
}

/// Noise specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    None,
    /// Prices rounded to a tick of `tick` currency units.
    Rounding { tick: f64 },
    /// Gaussian white noise with variance `variance_ratio * var(10 s returns)`.
    Iid { variance_ratio: f64 },
    /// Ornstein-Uhlenbeck noise, `theta` per second.
    Ou {
        theta: f64,
        #[serde(default = "default_ratio")]
        variance_ratio: f64,
    },
    /// OU noise whose innovations are correlated with the price driver.
    CorrelatedOu {
        theta: f64,
        rho: f64,
        #[serde(default = "default_ratio")]
        variance_ratio: f64,
    },
    /// Correlated OU noise with the intraday cosine level profile.
    Heteroskedastic { sigma_bar: f64, theta: f64, rho: f64 },
}

impl NoiseSpec {
    pub fn is_none(&self) -> bool {
        matches!(self, NoiseSpec::None)
    }

    /// Short label such as `iid(2.5)`.
    pub fn label(&self) -> String {
        match *self {
            NoiseSpec::None => "none".into(),
            NoiseSpec::Rounding { tick } => format!("rounding({tick})"),
            NoiseSpec::Iid { variance_ratio } => format!("iid({variance_ratio})"),
            NoiseSpec::Ou { theta, .. } => format!("ou({theta})"),
            NoiseSpec::CorrelatedOu { rho, .. } => format!("correlated({rho})"),
            NoiseSpec::Heteroskedastic { sigma_bar, .. } => format!("heteroskedastic({sigma_bar})"),
        }
    }

    /// Noise families of the scenario grid: none, two rounding levels, four
    /// i.i.d. ratios, three OU speeds, three price correlations and three
    /// heteroskedastic levels.
    pub fn standard_grid() -> Vec<NoiseSpec> {
        let mut out = vec![NoiseSpec::None];
        out.extend([0.01, 0.05].map(|tick| NoiseSpec::Rounding { tick }));
        out.extend([1.0, 1.5, 2.0, 2.5].map(|variance_ratio| NoiseSpec::Iid { variance_ratio }));
        out.extend([0.2, 0.3, 0.4].map(|theta| NoiseSpec::Ou {
            theta,
            variance_ratio: DEFAULT_OU_VARIANCE_RATIO,
        }));
        out.extend([-0.1, -0.3, -0.5].map(|rho| NoiseSpec::CorrelatedOu {
            theta: DEFAULT_OU_THETA,
            rho,
            variance_ratio: DEFAULT_OU_VARIANCE_RATIO,
        }));
        out.extend([3.0, 3.5, 4.0].map(|sigma_bar| NoiseSpec::Heteroskedastic {
            sigma_bar,
            theta: DEFAULT_OU_THETA,
            rho: -0.3,
        }));
        out
    }
}

/// Time profile multiplying the OU noise scale, on the normalized day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseProfile {
    Flat,
    /// 0.9 * (cos(2 pi u) + 1) / 2 + 0.1: high at the open and close.
    IntradayCosine,
    Constant(f64),
}

impl NoiseProfile {
    pub fn at(&self, u: f64) -> f64 {
        match *self {
            NoiseProfile::Flat => 1.0,
            NoiseProfile::IntradayCosine => intraday_cosine(u),
            NoiseProfile::Constant(c) => c,
        }
    }
}

pub fn intraday_cosine(u: f64) -> f64 {
    0.5 * ((2.0 * PI * u).cos() + 1.0) * 0.9 + 0.1
}

/// Parameters of the OU noise transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuNoise {
    /// Mean reversion per second.
    pub theta: f64,
    /// Correlation of noise innovations with the price driver.
    pub rho: f64,
    /// Noise standard deviation in units of sqrt(var(10 s returns)).
    pub level: f64,
    pub profile: NoiseProfile,
}

/// Efficient panel plus observed prices.
#[derive(Debug, Clone)]
pub struct NoisyPanel<'a> {
    pub base: &'a PanelBundle,
    pub obs_log_prices: Vec<Vec<f64>>,
    pub noise_paths: Vec<Vec<f64>>,
    pub spec: NoiseSpec,
}

impl<'a> NoisyPanel<'a> {
    pub fn identity(base: &'a PanelBundle) -> Self {
        Self {
            base,
            obs_log_prices: base.log_prices.clone(),
            noise_paths: base.log_prices.iter().map(|x| vec![0.0; x.len()]).collect(),
            spec: NoiseSpec::None,
        }
    }

    pub fn dim(&self) -> usize {
        self.obs_log_prices.len()
    }

    /// Path dump with the extra `obs_log_price` column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.base.write_csv(out, Some(&self.obs_log_prices))
    }
}

/// Sample variance of the efficient 10 second log-returns of one asset.
pub fn ten_second_variance(base: &PanelBundle, asset: usize) -> Result<f64> {
    let k = base.grid.steps_per_gap(CALIBRATION_GAP_SECONDS)?;
    let x = &base.log_prices[asset];
    let r: Vec<f64> = x.iter().step_by(k).zip(x.iter().step_by(k).skip(1)).map(|(a, b)| b - a).collect();
    if r.len() < 2 {
        return Err(Error::arg("need at least two 10 second returns for noise calibration"));
    }
    let n = r.len() as f64;
    let m = r.iter().sum::<f64>() / n;
    Ok(r.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0))
}

/// Round prices to the nearest tick (ties to even) and take logs again.
pub fn apply_rounding(base: &PanelBundle, tick: f64) -> Result<NoisyPanel<'_>> {
    if !(tick > 0.0) || !tick.is_finite() {
        return Err(Error::arg(format!("rounding tick must be positive, got {tick}")));
    }
    // dividing by an integral tick count keeps prices at the nearest double
    // to the decimal tick multiple
    let inv = 1.0 / tick;
    let per_unit = if (inv - inv.round()).abs() <= 1e-9 * inv { Some(inv.round()) } else { None };
    let round = |x: f64| -> Result<f64> {
        let p = x.exp();
        if !p.is_finite() {
            return Err(Error::config(format!("price exp({x}) overflows")));
        }
        let q = match per_unit {
            Some(u) => (p * u).round_ties_even() / u,
            None => (p / tick).round_ties_even() * tick,
        };
        if q <= 0.0 {
            return Err(Error::config(format!(
                "price {p} rounds to zero at tick {tick}; raise the price level"
            )));
        }
        Ok(q.ln())
    };
    let obs = base
        .log_prices
        .iter()
        .map(|xs| xs.iter().map(|&x| round(x)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(with_observed(base, obs, NoiseSpec::Rounding { tick }))
}

fn with_observed(base: &PanelBundle, obs: Vec<Vec<f64>>, spec: NoiseSpec) -> NoisyPanel<'_> {
    let noise = obs
        .iter()
        .zip(&base.log_prices)
        .map(|(o, x)| o.iter().zip(x).map(|(a, b)| a - b).collect())
        .collect();
    NoisyPanel {
        base,
        obs_log_prices: obs,
        noise_paths: noise,
        spec,
    }
}

fn with_noise(base: &PanelBundle, noise: Vec<Vec<f64>>, spec: NoiseSpec) -> NoisyPanel<'_> {
    let obs = noise
        .iter()
        .zip(&base.log_prices)
        .map(|(e, x)| e.iter().zip(x).map(|(a, b)| a + b).collect())
        .collect();
    NoisyPanel {
        base,
        obs_log_prices: obs,
        noise_paths: noise,
        spec,
    }
}

/// Gaussian white noise at every grid point.
pub fn apply_iid_noise(base: &PanelBundle, variance_ratio: f64, seed: u64) -> Result<NoisyPanel<'_>> {
    if !(variance_ratio >= 0.0) {
        return Err(Error::arg(format!("noise variance ratio must be >= 0, got {variance_ratio}")));
    }
    let spec = NoiseSpec::Iid { variance_ratio };
    if variance_ratio == 0.0 {
        return Ok(NoisyPanel { spec, ..NoisyPanel::identity(base) });
    }
    let noise = (0..base.dim())
        .map(|j| {
            let sd = (variance_ratio * ten_second_variance(base, j)?).sqrt();
            let mut rng = rng::stream(seed, &[rng::tag::NOISE, j as u64]);
            Ok((0..base.grid.len())
                .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(with_noise(base, noise, spec))
}

/// OU noise d eta = -theta eta dt + s(t) dE with the exact AR(1) transition
/// over each grid step, where s(t) = level * profile(t) * sqrt(2 theta var10)
/// and dE has correlation `rho` with the asset's price driver. eta(0) is drawn
/// from the stationary law at the opening scale.
pub fn apply_ou_noise<'a>(base: &'a PanelBundle, ou: &OuNoise, spec: NoiseSpec, seed: u64) -> Result<NoisyPanel<'a>> {
    if !(ou.theta > 0.0) || !ou.theta.is_finite() {
        return Err(Error::arg(format!("OU mean reversion must be positive, got {}", ou.theta)));
    }
    if !(ou.rho > -1.0 && ou.rho <= 0.0) {
        return Err(Error::arg(format!("noise-price correlation {} outside (-1, 0]", ou.rho)));
    }
    if !(ou.level >= 0.0) {
        return Err(Error::arg("noise level must be >= 0"));
    }
    let grid = base.grid;
    let a = (-ou.theta * grid.step).exp();
    let innov = (1.0 - a * a).sqrt();
    let rc = (1.0 - ou.rho * ou.rho).sqrt();
    let noise = (0..base.dim())
        .map(|j| {
            let scale = ou.level * ten_second_variance(base, j)?.sqrt();
            let mut rng = rng::stream(seed, &[rng::tag::NOISE, j as u64]);
            let z_w = &base.price_shocks[j];
            let mut eta = Vec::with_capacity(grid.len());
            let z0: f64 = rng.sample(StandardNormal);
            eta.push(scale * ou.profile.at(0.0) * z0);
            for (i, &zw) in z_w.iter().enumerate() {
                let xi: f64 = rng.sample(StandardNormal);
                let e = ou.rho * zw + rc * xi;
                let s = scale * ou.profile.at(grid.normalized(grid.time(i)));
                eta.push(a * eta[i] + s * innov * e);
            }
            Ok(eta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(with_noise(base, noise, spec))
}

/// Apply `spec` to every asset of `base`.
pub fn apply_noise<'a>(base: &'a PanelBundle, spec: &NoiseSpec, seed: u64) -> Result<NoisyPanel<'a>> {
    match *spec {
        NoiseSpec::None => Ok(NoisyPanel::identity(base)),
        NoiseSpec::Rounding { tick } => apply_rounding(base, tick),
        NoiseSpec::Iid { variance_ratio } => apply_iid_noise(base, variance_ratio, seed),
        NoiseSpec::Ou { theta, variance_ratio } => {
            let ou = flat_ou(theta, 0.0, variance_ratio)?;
            apply_ou_noise(base, &ou, *spec, seed)
        }
        NoiseSpec::CorrelatedOu { theta, rho, variance_ratio } => {
            let ou = flat_ou(theta, rho, variance_ratio)?;
            apply_ou_noise(base, &ou, *spec, seed)
        }
        NoiseSpec::Heteroskedastic { sigma_bar, theta, rho } => {
            let ou = OuNoise {
                theta,
                rho,
                level: sigma_bar,
                profile: NoiseProfile::IntradayCosine,
            };
            apply_ou_noise(base, &ou, *spec, seed)
        }
    }
}

fn flat_ou(theta: f64, rho: f64, variance_ratio: f64) -> Result<OuNoise> {
    if !(variance_ratio >= 0.0) {
        return Err(Error::arg(format!("noise variance ratio must be >= 0, got {variance_ratio}")));
    }
    Ok(OuNoise {
        theta,
        rho,
        level: variance_ratio.sqrt(),
        profile: NoiseProfile::Flat,
    })
}
