use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;

use super::grid::DenseGrid;

/// Simulated efficient prices and their true spot covariance.
#[derive(Debug, Clone)]
pub struct PanelBundle {
    pub grid: DenseGrid,
    /// d x (n_steps + 1) log-prices.
    pub log_prices: Vec<Vec<f64>>,
    /// d x (n_steps + 1) spot variances per model time unit.
    pub spot_var: Vec<Vec<f64>>,
    /// d x n_steps standard normal shocks of the price Brownian motions.
    pub price_shocks: Vec<Vec<f64>>,
    /// Correlation of the price Brownian motions.
    pub price_corr: SquareMatrix<f64>,
    pub seed: u64,
    /// Count of steps where the raw variance went negative and was truncated.
    pub truncation_events: Vec<usize>,
}

impl PanelBundle {
    pub fn dim(&self) -> usize {
        self.log_prices.len()
    }

    /// V^{jj'} = rho_{jj'} sigma_j sigma_j' at grid index `i`.
    pub fn true_cov_at_index(&self, i: usize) -> SquareMatrix<f64> {
        let d = self.dim();
        let sig: Vec<f64> = (0..d).map(|j| self.spot_var[j][i].sqrt()).collect();
        SquareMatrix::from_fn(d, |a, b| {
            if a == b {
                self.spot_var[a][i]
            } else {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                self.price_corr.get(lo, hi) * (sig[lo] * sig[hi])
            }
        })
    }

    /// True spot covariance at the grid point nearest to `t` (seconds).
    pub fn true_spot_cov(&self, t: f64) -> Result<SquareMatrix<f64>> {
        let i = self.grid.nearest_index(t)?;
        Ok(self.true_cov_at_index(i))
    }

    /// Sum of spot variance over the day times dt, per asset.
    pub fn integrated_variance(&self, asset: usize) -> f64 {
        let v = &self.spot_var[asset];
        let dt = self.grid.dt();
        v[..v.len() - 1].iter().sum::<f64>() * dt
    }

    /// Write `asset,time_s,log_price,spot_var[,obs_log_price]`.
    pub fn write_csv<W: Write>(&self, out: W, observed: Option<&[Vec<f64>]>) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let ser = |e: csv::Error| Error::Serde(e.to_string());
        let mut header = vec!["asset", "time_s", "log_price", "spot_var"];
        if observed.is_some() {
            header.push("obs_log_price");
        }
        w.write_record(&header).map_err(ser)?;
        for j in 0..self.dim() {
            for i in 0..self.grid.len() {
                let mut row = vec![
                    j.to_string(),
                    format!("{}", self.grid.time(i)),
                    format!("{:.17e}", self.log_prices[j][i]),
                    format!("{:.17e}", self.spot_var[j][i]),
                ];
                if let Some(obs) = observed {
                    row.push(format!("{:.17e}", obs[j][i]));
                }
                w.write_record(&row).map_err(ser)?;
            }
        }
        w.flush()
            .map_err(|e| Error::Serde(format!("flushing path csv: {e}")))
    }
}
