//! Grid search over the exponents of N = n^alpha / 2 and M = N^beta.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{cutoff_rule, localization_rule, EstimatorTag, FreqParams, PreparedTicks};
use crate::linalg::mean_and_se;
use crate::metrics::{paired_difference, score_path, weighted_selection};

use super::{map_paths, run_estimator, simulate_path, ScenarioConfig};

/// Exponent grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl GridSpec {
    /// alpha in {1, 5/6, 3/4, 2/3, 1/2, 1/3}, beta in {5/6, 3/4, 2/3, 1/2, 4/9}.
    pub fn standard() -> Self {
        Self {
            alphas: vec![1.0, 5.0 / 6.0, 0.75, 2.0 / 3.0, 0.5, 1.0 / 3.0],
            betas: vec![5.0 / 6.0, 0.75, 2.0 / 3.0, 0.5, 4.0 / 9.0],
        }
    }
}

/// Scores of one (alpha, beta) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub alpha: f64,
    pub beta: f64,
    pub cutoff: usize,
    pub localization: f64,
    pub mise_var: f64,
    pub mise_var_se: f64,
    pub mise_cov: f64,
    pub mise_cov_se: f64,
    pub weighted: f64,
    pub weighted_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub spec: GridSpec,
    /// Row-major over (alpha, beta).
    pub cells: Vec<GridCell>,
    /// Index of the cell with the smallest weighted loss.
    pub best: usize,
    /// Per cell, the per-path covariance MISE in path order.
    pub path_mise_cov: Vec<Vec<f64>>,
    /// Per cell, the per-path weighted loss in path order.
    pub path_weighted: Vec<Vec<f64>>,
}

impl GridSearchResult {
    pub fn best_cell(&self) -> &GridCell {
        &self.cells[self.best]
    }

    pub fn cell_index(&self, alpha: f64, beta: f64) -> Option<usize> {
        self.cells
            .iter()
            .position(|c| (c.alpha - alpha).abs() < 1e-12 && (c.beta - beta).abs() < 1e-12)
    }

    /// Mean and standard error over paths of MISE_cov(a) - MISE_cov(b).
    pub fn cov_gap(&self, a: (f64, f64), b: (f64, f64)) -> Result<(f64, f64)> {
        let ia = self.cell_index(a.0, a.1).ok_or_else(|| Error::arg(format!("no cell {a:?}")))?;
        let ib = self.cell_index(b.0, b.1).ok_or_else(|| Error::arg(format!("no cell {b:?}")))?;
        paired_difference(&self.path_mise_cov[ia], &self.path_mise_cov[ib])
    }

    /// Grid of covariance MISE: one row per alpha, one column per beta.
    pub fn write_cov_table<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let ser = |e: csv::Error| Error::Serde(e.to_string());
        let mut header = vec!["alpha".to_string()];
        header.extend(self.spec.betas.iter().map(|b| format!("beta={b:.6}")));
        w.write_record(&header).map_err(ser)?;
        for (r, a) in self.spec.alphas.iter().enumerate() {
            let mut row = vec![format!("{a:.6}")];
            let nb = self.spec.betas.len();
            row.extend(self.cells[r * nb..(r + 1) * nb].iter().map(|c| format!("{:.6e}", c.mise_cov)));
            w.write_record(&row).map_err(ser)?;
        }
        w.flush().map_err(|e| Error::Serde(e.to_string()))
    }

    /// Every cell with its scores.
    pub fn write_cells<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cells {
            w.serialize(c).map_err(|e| Error::Serde(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Serde(e.to_string()))
    }
}

/// Score the PDF estimator at every grid cell on the same paths. The
/// scenario must have d = 2; its own frequency choice is ignored.
pub fn run_grid_search(cfg: &ScenarioConfig, spec: &GridSpec) -> Result<GridSearchResult> {
    if spec.alphas.is_empty() || spec.betas.is_empty() {
        return Err(Error::arg("empty parameter grid"));
    }
    if cfg.d != 2 {
        return Err(Error::config(format!("grid search runs with d = 2, got {}", cfg.d)));
    }
    cfg.validate()?;
    let n = cfg.expected_n()?;
    let mut freqs = Vec::new();
    for &alpha in &spec.alphas {
        let cutoff = cutoff_rule(n, alpha)?;
        for &beta in &spec.betas {
            let mut f = FreqParams::new(cutoff, localization_rule(cutoff, beta)?)?;
            f.alpha = Some(alpha);
            f.beta = Some(beta);
            f.n_ref = Some(n);
            freqs.push(f);
        }
    }
    let max_freq = freqs.iter().map(|f| f.cutoff).max().expect("grid is non-empty");
    let eval = cfg.eval_times()?;
    // per path: (mise_var, mise_cov) per cell
    let per_path = map_paths(cfg.n_paths, |p| {
        let data = simulate_path(cfg, p)?;
        let prepared = PreparedTicks::new(&data.ticks, max_freq)?;
        freqs
            .iter()
            .map(|f| {
                let s = score_path(&run_estimator(&prepared, EstimatorTag::Pdf, f, &eval)?, &data.truth)?;
                Ok((s.mise_var(), s.mise_cov().expect("d = 2")))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut cells = Vec::with_capacity(freqs.len());
    let mut path_mise_cov = Vec::with_capacity(freqs.len());
    let mut path_weighted = Vec::with_capacity(freqs.len());
    for (c, f) in freqs.iter().enumerate() {
        let var: Vec<f64> = per_path.iter().map(|row| row[c].0).collect();
        let cov: Vec<f64> = per_path.iter().map(|row| row[c].1).collect();
        let wsel: Vec<f64> = var.iter().zip(&cov).map(|(&v, &k)| weighted_selection(v, k)).collect();
        let (mv, mv_se) = mean_and_se(&var);
        let (mc, mc_se) = mean_and_se(&cov);
        let (mw, mw_se) = mean_and_se(&wsel);
        cells.push(GridCell {
            alpha: f.alpha.expect("set above"),
            beta: f.beta.expect("set above"),
            cutoff: f.cutoff,
            localization: f.localization,
            mise_var: mv,
            mise_var_se: mv_se,
            mise_cov: mc,
            mise_cov_se: mc_se,
            weighted: mw,
            weighted_se: mw_se,
        });
        path_mise_cov.push(cov);
        path_weighted.push(wsel);
    }
    let best = cells
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.weighted.total_cmp(&b.1.weighted))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    Ok(GridSearchResult {
        spec: spec.clone(),
        cells,
        best,
        path_mise_cov,
        path_weighted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microstructure::NoiseSpec;
    use crate::path_sim::{HestonParams, ModelParams};

    fn small() -> ScenarioConfig {
        ScenarioConfig::new(ModelParams::Heston(HestonParams::default()), NoiseSpec::None, 2, 2, 3)
    }

    #[test]
    fn single_cell_grid_returns_that_cell() {
        let spec = GridSpec {
            alphas: vec![0.5],
            betas: vec![0.5],
        };
        let r = run_grid_search(&small(), &spec).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.best, 0);
        assert_eq!(r.best_cell().cutoff, 24);
        let mut buf = Vec::new();
        r.write_cov_table(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn empty_grid_is_an_argument_error() {
        let spec = GridSpec {
            alphas: vec![],
            betas: vec![0.5],
        };
        assert!(matches!(run_grid_search(&small(), &spec), Err(Error::Argument(_))));
    }

    #[test]
    fn grid_search_needs_two_assets() {
        let mut c = small();
        c.d = 3;
        assert!(matches!(run_grid_search(&c, &GridSpec::standard()), Err(Error::Config(_))));
    }
}
