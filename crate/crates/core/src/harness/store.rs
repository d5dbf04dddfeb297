//! Run configuration files and the on-disk result store.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{EstimatorTag, FreqParams};
use crate::metrics::{aggregate, write_table_csv, ScoreReport, TableRow};

use super::{standard_scenarios, score_scenario, ScenarioConfig};

fn default_estimators() -> Vec<EstimatorTag> {
    vec![EstimatorTag::Pdf]
}

/// The 64-scenario enumeration at each listed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioGrid {
    pub dims: Vec<usize>,
    pub n_paths: usize,
    #[serde(default)]
    pub master_seed: u64,
}

/// Contents of a run configuration file (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorTag>,
    #[serde(default)]
    pub scenario_grid: Option<ScenarioGrid>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioConfig>,
}

impl RunConfig {
    pub fn from_toml(text: &str, name: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let row = e
                .span()
                .map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::Input {
                path: name.to_string(),
                row,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// Scenario grid expansions first, then the listed ones.
    pub fn all_scenarios(&self) -> Vec<ScenarioConfig> {
        let mut out = Vec::new();
        if let Some(g) = &self.scenario_grid {
            for &d in &g.dims {
                out.extend(standard_scenarios(d, g.n_paths, g.master_seed));
            }
        }
        out.extend(self.scenarios.iter().cloned());
        out
    }
}

/// One (scenario, estimator, frequency) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario_hash: String,
    pub scenario_label: String,
    pub scenario: ScenarioConfig,
    pub estimator: EstimatorTag,
    pub freq: FreqParams,
    pub master_seed: u64,
    /// Wall time of the scenario run that produced the record.
    pub wall_time_s: f64,
    pub report: ScoreReport,
}

/// Directory of JSON records plus `index.csv`.
#[derive(Debug, Clone)]
pub struct ResultStore {
    root: PathBuf,
}

#[derive(Debug, Serialize)]
struct IndexRow<'a> {
    file: &'a str,
    scenario_hash: &'a str,
    scenario: &'a str,
    estimator: &'a str,
    d: usize,
    n_paths: usize,
    cutoff: usize,
    localization: f64,
    mise: f64,
    mise_se: f64,
    rmise: Option<f64>,
    psd_pct: f64,
}

impl ResultStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let rec = root.join("records");
        fs::create_dir_all(&rec).map_err(|e| Error::io(&rec, e))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn record_file(&self, scenario_hash: &str, estimator: EstimatorTag, freq: &FreqParams) -> PathBuf {
        self.root.join("records").join(format!(
            "{scenario_hash}-{}-N{}-M{:.6}.json",
            estimator.name(),
            freq.cutoff,
            freq.localization
        ))
    }

    pub fn contains(&self, scenario_hash: &str, estimator: EstimatorTag, freq: &FreqParams) -> bool {
        self.record_file(scenario_hash, estimator, freq).exists()
    }

    pub fn write(&self, record: &RunRecord) -> Result<PathBuf> {
        let path = self.record_file(&record.scenario_hash, record.estimator, &record.freq);
        let json = serde_json::to_string_pretty(record).map_err(|e| Error::Serde(e.to_string()))?;
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// All records, ordered by file name.
    pub fn records(&self) -> Result<Vec<(String, RunRecord)>> {
        let dir = self.root.join("records");
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| {
                let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                let rec: RunRecord = serde_json::from_str(&text)
                    .map_err(|e| Error::Serde(format!("{}: {e}", p.display())))?;
                let name = p.file_name().expect("record file").to_string_lossy().into_owned();
                Ok((name, rec))
            })
            .collect()
    }

    /// Rebuild `index.csv` from the records.
    pub fn write_index(&self) -> Result<PathBuf> {
        let path = self.root.join("index.csv");
        let records = self.records()?;
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_writer(file);
        for (name, r) in &records {
            w.serialize(IndexRow {
                file: name,
                scenario_hash: &r.scenario_hash,
                scenario: &r.scenario_label,
                estimator: r.estimator.name(),
                d: r.report.dim,
                n_paths: r.report.n_paths,
                cutoff: r.freq.cutoff,
                localization: r.freq.localization,
                mise: r.report.mise,
                mise_se: r.report.mise_se,
                rmise: r.report.rmise,
                psd_pct: 100.0 * r.report.psd_rate,
            })
            .map_err(|e| Error::Serde(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Estimator by scenario table from the stored records.
    pub fn write_table<W: Write>(&self, out: W) -> Result<()> {
        let rows: Vec<TableRow> = self
            .records()?
            .iter()
            .map(|(_, r)| TableRow::new(&r.scenario_label, r.estimator.name(), &r.report))
            .collect();
        write_table_csv(out, &rows)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub computed: usize,
    pub skipped: usize,
    pub written: Vec<PathBuf>,
}

/// Compute every missing (scenario, estimator) record; with `force`,
/// recompute all of them. The index is rebuilt when anything is written.
pub fn run_scenarios(cfg: &RunConfig, store: &ResultStore, force: bool) -> Result<RunSummary> {
    let mut summary = RunSummary::default();
    for sc in cfg.all_scenarios() {
        sc.validate()?;
        let freq = sc.resolve_freq()?;
        let hash = sc.hash();
        let todo: Vec<EstimatorTag> = cfg
            .estimators
            .iter()
            .copied()
            .filter(|&t| force || !store.contains(&hash, t, &freq))
            .collect();
        summary.skipped += cfg.estimators.len() - todo.len();
        if todo.is_empty() {
            continue;
        }
        let start = Instant::now();
        let scores = score_scenario(&sc, &todo)?;
        let wall = start.elapsed().as_secs_f64();
        for (tag, s) in todo.iter().zip(scores) {
            let record = RunRecord {
                scenario_hash: hash.clone(),
                scenario_label: sc.label(),
                scenario: sc.clone(),
                estimator: *tag,
                freq,
                master_seed: sc.master_seed,
                wall_time_s: wall,
                report: aggregate(&s)?,
            };
            summary.written.push(store.write(&record)?);
            summary.computed += 1;
        }
    }
    if summary.computed > 0 {
        store.write_index()?;
    }
    Ok(summary)
}
