//! Bias and MSE of the cross-covariance against N on synchronous and
//! shifted regular grids, for a correlated pair of Brownian motions.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{cross_estimates_by_cutoff, EstimateOptions, ReturnSpectrum, Window, DEFAULT_BETA};
use crate::metrics::{bias_mse_vs_n, paired_difference, CutoffCurves};
use crate::microstructure::NoisyPanel;
use crate::path_sim::{simulate_brownian_pair, DenseGrid};
use crate::rng::derive_seed;
use crate::sampling::sample_shifted_pair;

use super::map_paths;

const SENSITIVITY_TAG: u64 = 0x5345_4e53;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    pub rhos: Vec<f64>,
    /// Observations per asset on the unit window.
    pub n: usize,
    pub n_paths: usize,
    pub beta: f64,
    /// Offset of the second grid, as a fraction of the sampling interval.
    pub shift_fraction: f64,
    /// Evaluation time as a fraction of the window.
    pub t_eval: f64,
    /// Dense simulation steps per sampling interval.
    pub substeps: usize,
    pub master_seed: u64,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            rhos: vec![0.2, 0.3, -0.3, 0.5, -0.5, 0.7, -0.7, 1.0, -1.0],
            n: 500,
            n_paths: 1000,
            beta: DEFAULT_BETA,
            shift_fraction: 0.5,
            t_eval: 0.5,
            substeps: 2,
            master_seed: 0,
        }
    }
}

/// Curves for one correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCurves {
    pub rho: f64,
    pub sync: CutoffCurves,
    pub async_: CutoffCurves,
    /// Per N, standard error of the path-paired difference of the squared
    /// (relative) errors, async minus sync.
    pub mse_diff_se: Vec<f64>,
}

impl SensitivityCurves {
    /// N = 0..=n/2.
    pub fn cutoffs(&self) -> &[usize] {
        &self.sync.cutoffs
    }
}

/// Run the study: per correlation, the same paths are observed on the
/// synchronous grid i/n and on the shifted pair, and V^12 at `t_eval` is
/// estimated for every N up to n/2 with M = N^beta.
pub fn run_sensitivity_study(cfg: &SensitivityConfig) -> Result<Vec<SensitivityCurves>> {
    if cfg.n < 4 || cfg.n_paths == 0 || cfg.substeps == 0 {
        return Err(Error::arg("sensitivity study needs n >= 4, paths >= 1 and substeps >= 1"));
    }
    if !(cfg.t_eval > 0.0 && cfg.t_eval < 1.0) {
        return Err(Error::arg(format!("t_eval {} outside (0, 1)", cfg.t_eval)));
    }
    let steps = cfg.n * cfg.substeps;
    let shift_steps = cfg.shift_fraction * cfg.substeps as f64;
    if (shift_steps - shift_steps.round()).abs() > 1e-9 {
        return Err(Error::arg("shift must land on the dense grid"));
    }
    // unit window: variance per unit equals the Brownian variance 1
    let span = steps as f64;
    let grid = DenseGrid::with_unit(0.0, 1.0, steps, span)?;
    let window = Window::new(0.0, span)?;
    let opts = EstimateOptions::per_unit(span);
    let t_eval = cfg.t_eval * span;
    let n_max = cfg.n / 2;
    let mut out = Vec::with_capacity(cfg.rhos.len());
    for &rho in &cfg.rhos {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::arg(format!("correlation {rho} outside [-1, 1]")));
        }
        let per_path = map_paths(cfg.n_paths, |p| {
            let seed = derive_seed(cfg.master_seed, &[SENSITIVITY_TAG, rho.to_bits(), p as u64]);
            let bundle = simulate_brownian_pair(rho, &grid, seed)?;
            let panel = NoisyPanel::identity(&bundle);
            let run = |shift: f64| -> Result<Vec<f64>> {
                let (a, b) = sample_shifted_pair(&panel, cfg.n, shift)?;
                let sa = ReturnSpectrum::new(&a, &window, n_max)?;
                let sb = ReturnSpectrum::new(&b, &window, n_max)?;
                cross_estimates_by_cutoff(&sa, &sb, &window, t_eval, n_max, cfg.beta, &opts)
            };
            Ok((run(0.0)?, run(cfg.shift_fraction)?))
        })?;
        let sync: Vec<Vec<f64>> = per_path.iter().map(|p| p.0.clone()).collect();
        let asyn: Vec<Vec<f64>> = per_path.iter().map(|p| p.1.clone()).collect();
        let sync_c = bias_mse_vs_n(&sync, rho)?;
        let async_c = bias_mse_vs_n(&asyn, rho)?;
        let scale = if sync_c.relative { rho * rho } else { 1.0 };
        let mse_diff_se = (0..=n_max)
            .map(|n| {
                let sq = |v: &[Vec<f64>]| -> Vec<f64> { v.iter().map(|p| (p[n] - rho).powi(2) / scale).collect() };
                paired_difference(&sq(&asyn), &sq(&sync)).map(|(_, se)| se)
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(SensitivityCurves {
            rho,
            sync: sync_c,
            async_: async_c,
            mse_diff_se,
        });
    }
    Ok(out)
}

/// Plot-ready rows for one correlation. Errors are relative unless the
/// `relative` column is false.
pub fn write_sensitivity_csv<W: Write>(out: W, curves: &SensitivityCurves) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record([
        "N",
        "rel_bias_sync",
        "rel_bias_async",
        "rel_mse_sync",
        "rel_mse_async",
        "rel_bias_sync_se",
        "rel_bias_async_se",
        "rel_mse_sync_se",
        "rel_mse_async_se",
        "relative",
    ])
    .map_err(ser)?;
    let (s, a) = (&curves.sync, &curves.async_);
    for (i, n) in s.cutoffs.iter().enumerate() {
        w.write_record([
            n.to_string(),
            format!("{:.10e}", s.bias[i]),
            format!("{:.10e}", a.bias[i]),
            format!("{:.10e}", s.mse[i]),
            format!("{:.10e}", a.mse[i]),
            format!("{:.10e}", s.bias_se[i]),
            format!("{:.10e}", a.bias_se[i]),
            format!("{:.10e}", s.mse_se[i]),
            format!("{:.10e}", a.mse_se[i]),
            s.relative.to_string(),
        ])
        .map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serde(e.to_string()))
}
