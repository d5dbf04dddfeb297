//! Scores of spot covariance estimates against the true covariance path.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::SpotCovEstimate;
use crate::linalg::{compensated_sum, mean_and_se, SquareMatrix};
use crate::scalar::Scalar;

/// Entries with |V| below this are left out of relative errors.
pub const RMISE_EXCLUSION: f64 = 1e-12;

/// Relative PSD and symmetry tolerance for f64 estimates.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// True covariance matrices on an evaluation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthPath {
    pub times: Vec<f64>,
    pub matrices: Vec<SquareMatrix<f64>>,
}

impl TruthPath {
    pub fn new(times: Vec<f64>, matrices: Vec<SquareMatrix<f64>>) -> Result<Self> {
        if times.len() != matrices.len() {
            return Err(Error::arg(format!(
                "{} times but {} truth matrices",
                times.len(),
                matrices.len()
            )));
        }
        Ok(Self { times, matrices })
    }
}

/// Trapezoid-rule average of `values` over `times`, (1/span) int f dt.
/// A single point averages to itself.
pub fn time_average(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::arg("time average needs matching non-empty grids"));
    }
    if times.len() == 1 {
        return Ok(values[0]);
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("evaluation times must be strictly increasing"));
    }
    let span = times[times.len() - 1] - times[0];
    let area = compensated_sum(
        times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])),
    );
    Ok(area / span)
}

/// Scores of one Monte Carlo path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathScore {
    pub dim: usize,
    pub eval_times: Vec<f64>,
    /// Time-averaged squared error per entry, row-major.
    pub ise: Vec<f64>,
    /// Time-averaged squared relative error per entry; `None` when every
    /// time point of the entry is excluded.
    pub rise: Vec<Option<f64>>,
    /// Number of (time, entry) points excluded from relative errors.
    pub rel_excluded: usize,
    /// Per eval time, mean over entries of V_hat - V.
    pub mean_error: Vec<f64>,
    /// Per eval time, mean over entries of (V_hat - V)^2.
    pub mean_sq_error: Vec<f64>,
    pub n_matrices: usize,
    pub n_psd: usize,
}

impl PathScore {
    /// Mean of the entrywise integrated squared errors.
    pub fn mise(&self) -> f64 {
        compensated_sum(self.ise.iter().copied()) / self.ise.len() as f64
    }

    /// Mean over the diagonal entries.
    pub fn mise_var(&self) -> f64 {
        let d = self.dim;
        compensated_sum((0..d).map(|i| self.ise[i * d + i])) / d as f64
    }

    /// Mean over the off-diagonal entries; `None` for d = 1.
    pub fn mise_cov(&self) -> Option<f64> {
        let d = self.dim;
        if d < 2 {
            return None;
        }
        let off = (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)));
        Some(compensated_sum(off.map(|(i, j)| self.ise[i * d + j])) / (d * (d - 1)) as f64)
    }

    /// Mean over entries with at least one usable time point.
    pub fn rmise(&self) -> Option<f64> {
        let vals: Vec<f64> = self.rise.iter().flatten().copied().collect();
        (!vals.is_empty()).then(|| compensated_sum(vals.iter().copied()) / vals.len() as f64)
    }

    pub fn all_psd(&self) -> bool {
        self.n_psd == self.n_matrices
    }
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0))
}

/// Score one path of estimates against its truth.
pub fn score_path<T: Scalar>(est: &SpotCovEstimate<T>, truth: &TruthPath) -> Result<PathScore> {
    let times: Vec<f64> = est.eval_times.iter().map(|t| t.to_f64_lossy()).collect();
    if !same_grid(&times, &truth.times) {
        return Err(Error::arg("estimate and truth evaluation grids differ"));
    }
    if times.is_empty() {
        return Err(Error::arg("empty evaluation grid"));
    }
    let d = truth.matrices[0].dim();
    if est.matrices.iter().any(|m| m.dim() != d) || truth.matrices.iter().any(|m| m.dim() != d) {
        return Err(Error::arg("estimate and truth dimensions differ"));
    }
    let nt = times.len();
    let err = |k: usize, i: usize, j: usize| est.matrices[k].get(i, j).to_f64_lossy() - truth.matrices[k].get(i, j);

    let mut ise = Vec::with_capacity(d * d);
    let mut rise = Vec::with_capacity(d * d);
    let mut rel_excluded = 0;
    for i in 0..d {
        for j in 0..d {
            let sq: Vec<f64> = (0..nt).map(|k| err(k, i, j).powi(2)).collect();
            ise.push(time_average(&times, &sq)?);
            let (mut rt, mut rv) = (Vec::new(), Vec::new());
            for k in 0..nt {
                let v = truth.matrices[k].get(i, j);
                if v.abs() < RMISE_EXCLUSION {
                    rel_excluded += 1;
                } else {
                    rt.push(times[k]);
                    rv.push(sq[k] / (v * v));
                }
            }
            rise.push(if rt.is_empty() {
                None
            } else {
                Some(time_average(&rt, &rv)?)
            });
        }
    }
    let entries = (d * d) as f64;
    let mean_error = (0..nt)
        .map(|k| compensated_sum((0..d * d).map(|e| err(k, e / d, e % d))) / entries)
        .collect();
    let mean_sq_error = (0..nt)
        .map(|k| compensated_sum((0..d * d).map(|e| err(k, e / d, e % d).powi(2))) / entries)
        .collect();
    let tol = T::check_tolerance().to_f64_lossy();
    Ok(PathScore {
        dim: d,
        eval_times: times,
        ise,
        rise,
        rel_excluded,
        mean_error,
        mean_sq_error,
        n_matrices: est.diagnostics.len(),
        n_psd: est.diagnostics.iter().filter(|g| g.is_psd(tol)).count(),
    })
}

/// Monte Carlo summary over paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub n_paths: usize,
    pub dim: usize,
    pub eval_times: Vec<f64>,
    pub mise: f64,
    pub mise_se: f64,
    pub mise_var: f64,
    pub mise_var_se: f64,
    pub mise_cov: Option<f64>,
    pub mise_cov_se: Option<f64>,
    pub rmise: Option<f64>,
    pub rmise_excluded: usize,
    /// Fraction of (path, eval time) matrices that are symmetric PSD.
    pub psd_rate: f64,
    /// Fraction of paths whose matrices are all symmetric PSD.
    pub psd_rate_paths: f64,
    /// Mean integrated squared error per entry, symmetrized.
    pub per_entry_mise: Vec<Vec<f64>>,
    /// Per eval time, mean over paths and entries of V_hat - V.
    pub bias_curve: Vec<f64>,
    /// Per eval time, mean over paths and entries of (V_hat - V)^2.
    pub mse_curve: Vec<f64>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    compensated_sum(v.iter().copied()) / v.len() as f64
}

/// Standard errors of a single path are reported as 0.
fn mean_se(values: &[f64]) -> (f64, f64) {
    let (m, se) = mean_and_se(values);
    (m, if se.is_nan() { 0.0 } else { se })
}

/// Combine path scores in path order.
pub fn aggregate(scores: &[PathScore]) -> Result<ScoreReport> {
    let first = scores.first().ok_or_else(|| Error::arg("no paths to aggregate"))?;
    let d = first.dim;
    if scores
        .iter()
        .any(|s| s.dim != d || !same_grid(&s.eval_times, &first.eval_times))
    {
        return Err(Error::arg("paths have different dimensions or evaluation grids"));
    }
    let k = scores.len();
    let (mise, mise_se) = mean_se(&scores.iter().map(PathScore::mise).collect::<Vec<_>>());
    let (mise_var, mise_var_se) = mean_se(&scores.iter().map(PathScore::mise_var).collect::<Vec<_>>());
    let (mise_cov, mise_cov_se) = if d > 1 {
        let v: Vec<f64> = scores.iter().filter_map(PathScore::mise_cov).collect();
        let (m, se) = mean_se(&v);
        (Some(m), Some(se))
    } else {
        (None, None)
    };
    let rel: Vec<f64> = scores.iter().filter_map(PathScore::rmise).collect();
    let rmise = (!rel.is_empty()).then(|| mean(rel.iter().copied()));
    let per_entry_mise = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| 0.5 * (mean(scores.iter().map(|s| s.ise[i * d + j])) + mean(scores.iter().map(|s| s.ise[j * d + i]))))
                .collect()
        })
        .collect();
    let nt = first.eval_times.len();
    let n_matrices: usize = scores.iter().map(|s| s.n_matrices).sum();
    let n_psd: usize = scores.iter().map(|s| s.n_psd).sum();
    Ok(ScoreReport {
        n_paths: k,
        dim: d,
        eval_times: first.eval_times.clone(),
        mise,
        mise_se,
        mise_var,
        mise_var_se,
        mise_cov,
        mise_cov_se,
        rmise,
        rmise_excluded: scores.iter().map(|s| s.rel_excluded).sum(),
        psd_rate: if n_matrices == 0 { 1.0 } else { n_psd as f64 / n_matrices as f64 },
        psd_rate_paths: scores.iter().filter(|s| s.all_psd()).count() as f64 / k as f64,
        per_entry_mise,
        bias_curve: (0..nt).map(|t| mean(scores.iter().map(|s| s.mean_error[t]))).collect(),
        mse_curve: (0..nt).map(|t| mean(scores.iter().map(|s| s.mean_sq_error[t]))).collect(),
    })
}

/// Score every path and aggregate.
pub fn mise<T: Scalar>(estimates: &[SpotCovEstimate<T>], truth: &[TruthPath]) -> Result<ScoreReport> {
    if estimates.len() != truth.len() {
        return Err(Error::arg(format!(
            "{} estimate paths but {} truth paths",
            estimates.len(),
            truth.len()
        )));
    }
    let scores = estimates
        .iter()
        .zip(truth)
        .map(|(e, t)| score_path(e, t))
        .collect::<Result<Vec<_>>>()?;
    aggregate(&scores)
}

/// Share of symmetric PSD matrices, per matrix and per path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdRate {
    pub per_matrix: f64,
    pub per_path: f64,
}

pub fn psd_rate<T: Scalar>(estimates: &[SpotCovEstimate<T>]) -> PsdRate {
    let tol = T::check_tolerance().to_f64_lossy();
    let total: usize = estimates.iter().map(|e| e.diagnostics.len()).sum();
    let good: usize = estimates
        .iter()
        .map(|e| e.diagnostics.iter().filter(|g| g.is_psd(tol)).count())
        .sum();
    let paths = estimates.iter().filter(|e| e.diagnostics.iter().all(|g| g.is_psd(tol))).count();
    PsdRate {
        per_matrix: if total == 0 { 1.0 } else { good as f64 / total as f64 },
        per_path: if estimates.is_empty() { 1.0 } else { paths as f64 / estimates.len() as f64 },
    }
}

/// Parameter selection loss 0.1 MISE_var + 0.9 MISE_cov.
pub fn weighted_selection(mise_var: f64, mise_cov: f64) -> f64 {
    0.1 * mise_var + 0.9 * mise_cov
}

/// Mean of a - b over paired samples and its standard error.
pub fn paired_difference(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::arg("paired samples need equal non-zero length"));
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok(mean_se(&diff))
}

/// Bias and MSE of a point estimate against the cut-off frequency N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffCurves {
    pub cutoffs: Vec<usize>,
    pub bias: Vec<f64>,
    pub bias_se: Vec<f64>,
    pub mse: Vec<f64>,
    pub mse_se: Vec<f64>,
    /// Errors divided by the truth (bias) and its square (MSE); false when
    /// the truth is numerically zero and absolute errors are reported.
    pub relative: bool,
}

/// `by_path[k][n]` is path k's estimate at cut-off n; `truth` is the common
/// true value.
pub fn bias_mse_vs_n(by_path: &[Vec<f64>], truth: f64) -> Result<CutoffCurves> {
    let first = by_path.first().ok_or_else(|| Error::arg("no paths"))?;
    let n_len = first.len();
    if by_path.iter().any(|p| p.len() != n_len) {
        return Err(Error::arg("paths cover different cut-off ranges"));
    }
    let relative = truth.abs() >= RMISE_EXCLUSION;
    let scale = if relative { truth } else { 1.0 };
    let mut curves = CutoffCurves {
        cutoffs: (0..n_len).collect(),
        bias: Vec::with_capacity(n_len),
        bias_se: Vec::with_capacity(n_len),
        mse: Vec::with_capacity(n_len),
        mse_se: Vec::with_capacity(n_len),
        relative,
    };
    for n in 0..n_len {
        let e: Vec<f64> = by_path.iter().map(|p| (p[n] - truth) / scale).collect();
        let (b, bse) = mean_se(&e);
        let (m, mse) = mean_se(&e.iter().map(|x| x * x).collect::<Vec<_>>());
        curves.bias.push(b);
        curves.bias_se.push(bse);
        curves.mse.push(m);
        curves.mse_se.push(mse);
    }
    Ok(curves)
}

/// One row of an estimator by scenario accuracy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub scenario: String,
    pub estimator: String,
    pub d: usize,
    pub n_paths: usize,
    pub mise: f64,
    pub mise_se: f64,
    pub rmise: Option<f64>,
    pub psd_pct: f64,
    pub psd_path_pct: f64,
}

impl TableRow {
    pub fn new(scenario: impl Into<String>, estimator: impl Into<String>, r: &ScoreReport) -> Self {
        Self {
            scenario: scenario.into(),
            estimator: estimator.into(),
            d: r.dim,
            n_paths: r.n_paths,
            mise: r.mise,
            mise_se: r.mise_se,
            rmise: r.rmise,
            psd_pct: 100.0 * r.psd_rate,
            psd_path_pct: 100.0 * r.psd_rate_paths,
        }
    }
}

pub fn write_table_csv<W: Write>(out: W, rows: &[TableRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Serde(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Serde(e.to_string()))
}

impl ScoreReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Serde(e.to_string()))
    }
}
