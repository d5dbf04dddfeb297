//! Efficient price simulation under Heston, one and two factor stochastic
//! volatility, and rough Heston dynamics.
//!
//! Asset `j` has a price driver W^j and one or two volatility drivers. Price
//! drivers are equicorrelated across assets, each volatility driver is
//! correlated with its own asset's price driver through the model leverage,
//! and volatility drivers of different assets are independent. The driver
//! correlation matrix is Cholesky-factored once per simulation.

mod bundle;
mod grid;
mod models;
mod volterra;

pub use bundle::PanelBundle;
pub use grid::{DenseGrid, TRADING_DAY_SECONDS};
pub use models::{
    s_exp, s_exp_threshold, HestonParams, ModelParams, RoughHestonParams, Sv1fParams, Sv2fParams,
};
pub use volterra::{VolterraAccumulator, VolterraKernel};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{checked_cholesky, SquareMatrix};
use crate::rng;

/// Default pairwise correlation of price drivers.
pub const DEFAULT_CROSS_RHO: f64 = 0.312;

/// Default initial price; the log-price starts at its logarithm.
pub const DEFAULT_INITIAL_PRICE: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSpec {
    pub cross_asset_rho: f64,
    /// Optional explicit correlation over all drivers, ordered as the d price
    /// drivers followed by the volatility drivers asset by asset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_matrix: Option<Vec<Vec<f64>>>,
}

impl Default for CorrelationSpec {
    fn default() -> Self {
        Self::equicorrelated(DEFAULT_CROSS_RHO)
    }
}

impl CorrelationSpec {
    pub fn equicorrelated(rho: f64) -> Self {
        Self {
            cross_asset_rho: rho,
            full_matrix: None,
        }
    }

    /// Driver correlation matrix for `d` assets with `factors` volatility
    /// drivers each.
    pub fn driver_matrix(&self, d: usize, factors: usize, leverage: f64) -> Result<SquareMatrix<f64>> {
        let m = d * (1 + factors);
        if let Some(full) = &self.full_matrix {
            if full.len() != m || full.iter().any(|r| r.len() != m) {
                return Err(Error::config(format!(
                    "explicit driver correlation must be {m}x{m}"
                )));
            }
            let mat = SquareMatrix::from_fn(m, |i, j| full[i][j]);
            if (0..m).any(|i| (mat.get(i, i) - 1.0).abs() > 1e-12) {
                return Err(Error::config("driver correlation needs a unit diagonal"));
            }
            return Ok(mat);
        }
        let rho = self.cross_asset_rho;
        if !(rho > -1.0 && rho <= 1.0) {
            return Err(Error::config(format!("cross-asset correlation {rho} outside (-1, 1]")));
        }
        let owner = |k: usize| if k < d { k } else { (k - d) / factors };
        Ok(SquareMatrix::from_fn(m, |i, j| {
            if i == j {
                1.0
            } else if i < d && j < d {
                rho
            } else if (i < d) != (j < d) && owner(i) == owner(j) {
                leverage
            } else {
                0.0
            }
        }))
    }
}

/// Correlated Gaussian shocks for all drivers, step-major.
struct DriverShocks {
    m: usize,
    z: Vec<f64>,
}

impl DriverShocks {
    fn draw(chol: &SquareMatrix<f64>, n_steps: usize, seed: u64) -> Self {
        let m = chol.dim();
        let mut rng = rng::stream(seed, &[rng::tag::PRICE]);
        let mut z = vec![0.0; m * n_steps];
        let mut e = vec![0.0; m];
        for step in 0..n_steps {
            for x in e.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let row = &mut z[step * m..(step + 1) * m];
            for (i, out) in row.iter_mut().enumerate() {
                let l = &chol.as_slice()[i * m..i * m + i + 1];
                *out = l.iter().zip(&e[..=i]).map(|(a, b)| a * b).sum();
            }
        }
        Self { m, z }
    }

    #[inline]
    fn get(&self, step: usize, driver: usize) -> f64 {
        self.z[step * self.m + driver]
    }
}

struct Setup {
    d: usize,
    factors: usize,
    shocks: DriverShocks,
    price_corr: SquareMatrix<f64>,
}

impl Setup {
    fn new(model: &ModelParams, corr: &CorrelationSpec, grid: &DenseGrid, d: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::arg("need at least one asset"));
        }
        model.validate()?;
        let factors = model.vol_factors();
        let full = corr.driver_matrix(d, factors, model.leverage())?;
        let chol = checked_cholesky(&full, 1e-12)?;
        let price_corr = SquareMatrix::from_fn(d, |i, j| full.get(i, j));
        Ok(Self {
            d,
            factors,
            shocks: DriverShocks::draw(&chol, grid.n_steps, seed),
            price_corr,
        })
    }

    fn vol_driver(&self, asset: usize, factor: usize) -> usize {
        self.d + asset * self.factors + factor
    }

    fn bundle(self, grid: DenseGrid, seed: u64, paths: Vec<AssetPath>) -> PanelBundle {
        let n = grid.n_steps;
        let price_shocks = (0..self.d)
            .map(|j| (0..n).map(|i| self.shocks.get(i, j)).collect())
            .collect();
        let mut log_prices = Vec::with_capacity(self.d);
        let mut spot_var = Vec::with_capacity(self.d);
        let mut truncation_events = Vec::with_capacity(self.d);
        for p in paths {
            log_prices.push(p.log_price);
            spot_var.push(p.spot_var);
            truncation_events.push(p.truncations);
        }
        PanelBundle {
            grid,
            log_prices,
            spot_var,
            price_shocks,
            price_corr: self.price_corr,
            seed,
            truncation_events,
        }
    }
}

struct AssetPath {
    log_price: Vec<f64>,
    spot_var: Vec<f64>,
    truncations: usize,
}

impl AssetPath {
    fn with_capacity(n: usize, x0: f64) -> Self {
        let mut log_price = Vec::with_capacity(n + 1);
        log_price.push(x0);
        Self {
            log_price,
            spot_var: Vec::with_capacity(n + 1),
            truncations: 0,
        }
    }
}

/// Euler scheme for the Heston model with full truncation of the variance.
pub fn simulate_heston(
    params: &HestonParams,
    corr: &CorrelationSpec,
    grid: &DenseGrid,
    d: usize,
    seed: u64,
) -> Result<PanelBundle> {
    let setup = Setup::new(&ModelParams::Heston(*params), corr, grid, d, seed)?;
    let n = grid.n_steps;
    let dt = grid.dt();
    let sdt = dt.sqrt();
    let x0 = DEFAULT_INITIAL_PRICE.ln();
    let paths = (0..d)
        .map(|j| {
            let mut p = AssetPath::with_capacity(n, x0);
            let mut v = params.theta;
            let vd = setup.vol_driver(j, 0);
            for i in 0..n {
                if v < 0.0 {
                    p.truncations += 1;
                }
                let vp = v.max(0.0);
                p.spot_var.push(vp);
                let sv = vp.sqrt();
                let x = p.log_price[i];
                p.log_price
                    .push(x + (params.mu - 0.5 * vp) * dt + sv * sdt * setup.shocks.get(i, j));
                v += params.gamma * (params.theta - vp) * dt
                    + params.nu * sv * sdt * setup.shocks.get(i, vd);
            }
            if v < 0.0 {
                p.truncations += 1;
            }
            p.spot_var.push(v.max(0.0));
            p
        })
        .collect();
    Ok(setup.bundle(*grid, seed, paths))
}

/// One factor model, Euler scheme for the factor; the factor starts at 0.
pub fn simulate_sv1f(
    params: &Sv1fParams,
    corr: &CorrelationSpec,
    grid: &DenseGrid,
    d: usize,
    seed: u64,
) -> Result<PanelBundle> {
    let setup = Setup::new(&ModelParams::Sv1f(*params), corr, grid, d, seed)?;
    let n = grid.n_steps;
    let dt = grid.dt();
    let sdt = dt.sqrt();
    let x0 = DEFAULT_INITIAL_PRICE.ln();
    let paths = (0..d)
        .map(|j| {
            let mut p = AssetPath::with_capacity(n, x0);
            let mut tau = 0.0;
            let vd = setup.vol_driver(j, 0);
            for i in 0..n {
                let sigma = (params.beta0 + params.beta1 * tau).exp();
                p.spot_var.push(sigma * sigma);
                let x = p.log_price[i];
                p.log_price
                    .push(x + params.mu * dt + sigma * sdt * setup.shocks.get(i, j));
                tau += params.alpha * tau * dt + sdt * setup.shocks.get(i, vd);
            }
            let sigma = (params.beta0 + params.beta1 * tau).exp();
            p.spot_var.push(sigma * sigma);
            p
        })
        .collect();
    Ok(setup.bundle(*grid, seed, paths))
}

/// Two factor model with the spliced exponential link; factors start at 0.
pub fn simulate_sv2f(
    params: &Sv2fParams,
    corr: &CorrelationSpec,
    grid: &DenseGrid,
    d: usize,
    seed: u64,
) -> Result<PanelBundle> {
    let setup = Setup::new(&ModelParams::Sv2f(*params), corr, grid, d, seed)?;
    let n = grid.n_steps;
    let dt = grid.dt();
    let sdt = dt.sqrt();
    let x0 = DEFAULT_INITIAL_PRICE.ln();
    let vol = |t1: f64, t2: f64| s_exp(params.beta0 + params.beta1 * t1 + params.beta2 * t2);
    let paths = (0..d)
        .map(|j| {
            let mut p = AssetPath::with_capacity(n, x0);
            let (mut t1, mut t2) = (0.0, 0.0);
            let (d1, d2) = (setup.vol_driver(j, 0), setup.vol_driver(j, 1));
            for i in 0..n {
                let sigma = vol(t1, t2);
                p.spot_var.push(sigma * sigma);
                let x = p.log_price[i];
                p.log_price
                    .push(x + params.mu * dt + sigma * sdt * setup.shocks.get(i, j));
                let z1 = setup.shocks.get(i, d1);
                let z2 = setup.shocks.get(i, d2);
                t1 += params.alpha1 * t1 * dt + sdt * z1;
                t2 += params.alpha2 * t2 * dt + (1.0 + params.beta_v * t2) * sdt * z2;
            }
            let sigma = vol(t1, t2);
            p.spot_var.push(sigma * sigma);
            p
        })
        .collect();
    Ok(setup.bundle(*grid, seed, paths))
}

/// Euler-type Volterra scheme for rough Heston:
/// v_i = v0 + sum_{j<i} K(t_i - t_j) [(theta - gamma v_j^+) dt + nu sqrt(v_j^+) dZ_j],
/// with log-price dX = -v^+/2 dt + sqrt(v^+) dW.
pub fn simulate_rough_heston(
    params: &RoughHestonParams,
    corr: &CorrelationSpec,
    grid: &DenseGrid,
    d: usize,
    seed: u64,
) -> Result<PanelBundle> {
    let setup = Setup::new(&ModelParams::RoughHeston(*params), corr, grid, d, seed)?;
    let n = grid.n_steps;
    let dt = grid.dt();
    let sdt = dt.sqrt();
    let x0 = DEFAULT_INITIAL_PRICE.ln();
    let kernel = VolterraKernel::power_law(params.kernel_c, params.hurst, dt, n);
    let paths = (0..d)
        .map(|j| {
            let mut p = AssetPath::with_capacity(n, x0);
            let vd = setup.vol_driver(j, 0);
            kernel.solve(|i, acc| {
                let v = params.v0 + acc;
                if v < 0.0 {
                    p.truncations += 1;
                }
                let vp = v.max(0.0);
                p.spot_var.push(vp);
                if i == n {
                    return 0.0;
                }
                let sv = vp.sqrt();
                let x = p.log_price[i];
                p.log_price
                    .push(x - 0.5 * vp * dt + sv * sdt * setup.shocks.get(i, j));
                (params.theta - params.gamma * vp) * dt + params.nu * sv * sdt * setup.shocks.get(i, vd)
            });
            p
        })
        .collect();
    Ok(setup.bundle(*grid, seed, paths))
}

/// Dispatch on the model variant.
pub fn simulate(
    model: &ModelParams,
    corr: &CorrelationSpec,
    grid: &DenseGrid,
    d: usize,
    seed: u64,
) -> Result<PanelBundle> {
    match model {
        ModelParams::Heston(p) => simulate_heston(p, corr, grid, d, seed),
        ModelParams::Sv1f(p) => simulate_sv1f(p, corr, grid, d, seed),
        ModelParams::Sv2f(p) => simulate_sv2f(p, corr, grid, d, seed),
        ModelParams::RoughHeston(p) => simulate_rough_heston(p, corr, grid, d, seed),
    }
}

/// Correlated pair of standard Brownian motions (unit variance per model
/// time unit) with constant spot covariance [[1, rho], [rho, 1]].
pub fn simulate_brownian_pair(rho: f64, grid: &DenseGrid, seed: u64) -> Result<PanelBundle> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::arg(format!("correlation {rho} outside [-1, 1]")));
    }
    let n = grid.n_steps;
    let sdt = grid.dt().sqrt();
    let mut rng = rng::stream(seed, &[rng::tag::PRICE]);
    let rc = (1.0 - rho * rho).max(0.0).sqrt();
    let mut x = vec![vec![0.0; n + 1], vec![0.0; n + 1]];
    let mut shocks = vec![vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        let z2 = rho * e1 + rc * e2;
        shocks[0][i] = e1;
        shocks[1][i] = z2;
        x[0][i + 1] = x[0][i] + sdt * e1;
        x[1][i + 1] = x[1][i] + sdt * z2;
    }
    Ok(PanelBundle {
        grid: *grid,
        log_prices: x,
        spot_var: vec![vec![1.0; n + 1]; 2],
        price_shocks: shocks,
        price_corr: SquareMatrix::from_row_major(2, vec![1.0, rho, rho, 1.0])?,
        seed,
        truncation_events: vec![0, 0],
    })
}
