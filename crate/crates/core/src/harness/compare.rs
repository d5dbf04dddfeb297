//! Estimator comparison across scenarios, including estimates computed
//! elsewhere and supplied as CSV.

use std::collections::BTreeMap;
use std::io::Read;

use crate::error::{Error, Result};
use crate::fourier::{EstimatorTag, FreqParams, MatrixDiagnostics, SpotCovEstimate};
use crate::linalg::SquareMatrix;
use crate::metrics::{aggregate, score_path, TableRow};

use super::{map_paths, score_scenario, simulate_path, ScenarioConfig};

/// Externally computed estimates for every path of one scenario.
#[derive(Debug, Clone)]
pub struct ExternalEstimates {
    /// Estimator name shown in tables.
    pub label: String,
    /// Hash of the scenario the estimates belong to.
    pub scenario_hash: String,
    pub paths: Vec<SpotCovEstimate>,
}

/// Read rows `path,time_s,j,jp,value` (extra columns such as
/// `min_eig_at_t` are ignored; a missing `path` column means path 0).
/// Paths must be numbered 0..K-1 and give every (j, jp) at every time.
pub fn read_external_estimates<R: Read>(
    input: R,
    name: &str,
    label: &str,
    scenario_hash: &str,
) -> Result<ExternalEstimates> {
    let bad = |row: usize, message: String| Error::Input {
        path: name.to_string(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    let pos = |h: &str| headers.iter().position(|x| x == h);
    let need = |h: &str| pos(h).ok_or_else(|| bad(1, format!("missing column `{h}`")));
    let (cp, ct, cj, cjp, cv) = (pos("path"), need("time_s")?, need("j")?, need("jp")?, need("value")?);
    // path -> (first row, time bits -> (time, entries))
    type Entries = BTreeMap<(usize, usize), f64>;
    type Times = BTreeMap<u64, (f64, Entries)>;
    let mut paths: BTreeMap<usize, (usize, Times)> = BTreeMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| bad(row, e.to_string()))?;
        let field = |c: usize| rec.get(c).ok_or_else(|| bad(row, "short row".into()));
        let uint = |c: usize, what: &str| -> Result<usize> {
            let s = field(c)?;
            s.parse().map_err(|_| bad(row, format!("bad {what} `{s}`")))
        };
        let real = |c: usize, what: &str| -> Result<f64> {
            let s = field(c)?;
            let v: f64 = s.parse().map_err(|_| bad(row, format!("bad {what} `{s}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(row, format!("non-finite {what}")))
            }
        };
        let p = match cp {
            Some(c) => uint(c, "path")?,
            None => 0,
        };
        let t = real(ct, "time")?;
        let (j, jp) = (uint(cj, "j")?, uint(cjp, "jp")?);
        let v = real(cv, "value")?;
        let slot = paths.entry(p).or_insert_with(|| (row, BTreeMap::new()));
        let cell = slot.1.entry(t.to_bits()).or_insert_with(|| (t, BTreeMap::new()));
        if cell.1.insert((j, jp), v).is_some() {
            return Err(bad(row, format!("duplicate entry ({j}, {jp}) at time {t}")));
        }
    }
    let mut out = Vec::with_capacity(paths.len());
    for (expect, (p, (first_row, times))) in paths.into_iter().enumerate() {
        if p != expect {
            return Err(bad(first_row, format!("path {p} found but path {expect} is missing")));
        }
        let mut by_time: Vec<(f64, Entries)> = times.into_values().collect();
        by_time.sort_by(|a, b| a.0.total_cmp(&b.0));
        let d = by_time
            .iter()
            .flat_map(|(_, e)| e.keys().map(|&(j, jp)| j.max(jp) + 1))
            .max()
            .unwrap_or(0);
        let mut est = SpotCovEstimate {
            eval_times: Vec::with_capacity(by_time.len()),
            matrices: Vec::with_capacity(by_time.len()),
            tag: EstimatorTag::External,
            freq: FreqParams::new(0, 1.0)?,
            diagnostics: Vec::with_capacity(by_time.len()),
        };
        for (t, entries) in by_time {
            if entries.len() != d * d {
                return Err(bad(
                    first_row,
                    format!("path {p} time {t}: {} of {} matrix entries given", entries.len(), d * d),
                ));
            }
            let m = SquareMatrix::from_fn(d, |i, j| entries[&(i, j)]);
            est.diagnostics.push(MatrixDiagnostics::of(&m, 0.0));
            est.matrices.push(m);
            est.eval_times.push(t);
        }
        out.push(est);
    }
    Ok(ExternalEstimates {
        label: label.to_string(),
        scenario_hash: scenario_hash.to_string(),
        paths: out,
    })
}

/// Accuracy and PSD table rows: every scenario by every estimator, plus
/// each external estimate set against the scenario whose hash it names.
pub fn run_comparison(
    scenarios: &[ScenarioConfig],
    estimators: &[EstimatorTag],
    external: &[ExternalEstimates],
) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for cfg in scenarios {
        let label = cfg.label();
        for (tag, scores) in estimators.iter().zip(score_scenario(cfg, estimators)?) {
            rows.push(TableRow::new(&label, tag.name(), &aggregate(&scores)?));
        }
        let hash = cfg.hash();
        for ext in external.iter().filter(|e| e.scenario_hash == hash) {
            if ext.paths.len() != cfg.n_paths {
                return Err(Error::arg(format!(
                    "external `{}` has {} paths, scenario {label} has {}",
                    ext.label,
                    ext.paths.len(),
                    cfg.n_paths
                )));
            }
            let scores = map_paths(cfg.n_paths, |p| score_path(&ext.paths[p], &simulate_path(cfg, p)?.truth))?;
            rows.push(TableRow::new(&label, &ext.label, &aggregate(&scores)?));
        }
    }
    Ok(rows)
}
