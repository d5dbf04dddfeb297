//! Monte Carlo experiments: scenario enumeration, per-path pipeline,
//! parameter grid search, asynchronicity sensitivity study, estimator
//! comparison and the on-disk result store.

mod compare;
mod grid_search;
mod sensitivity;
mod store;

pub use compare::{read_external_estimates, run_comparison, ExternalEstimates};
pub use grid_search::{run_grid_search, GridCell, GridSearchResult, GridSpec};
pub use sensitivity::{run_sensitivity_study, write_sensitivity_csv, SensitivityConfig, SensitivityCurves};
pub use store::{run_scenarios, ResultStore, RunConfig, RunRecord, RunSummary, ScenarioGrid};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fourier::{
    localization_rule, select_freq, EstimateOptions, EstimatorTag, FreqParams, PreparedTicks, PsdWeight,
    SpotCovEstimate, DEFAULT_BETA,
};
use crate::metrics::{aggregate, score_path, PathScore, ScoreReport, TruthPath};
use crate::microstructure::{apply_noise, NoiseSpec};
use crate::path_sim::{
    simulate, CorrelationSpec, DenseGrid, HestonParams, ModelParams, PanelBundle, RoughHestonParams, Sv1fParams,
    Sv2fParams, TRADING_DAY_SECONDS,
};
use crate::rng::derive_seed;
use crate::sampling::{sample, SamplingSpec, TickSeries};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "SPOTCOV_WORKERS";

pub const DEFAULT_N_PATHS: usize = 100;
pub const DEFAULT_EVAL_MINUTES: f64 = 20.0;
pub const DEFAULT_GRID_STEP: f64 = 2.0;
pub const DEFAULT_MEAN_GAP: f64 = 10.0;

fn default_d() -> usize {
    2
}
fn default_n_paths() -> usize {
    DEFAULT_N_PATHS
}
fn default_eval_minutes() -> f64 {
    DEFAULT_EVAL_MINUTES
}
fn default_grid_step() -> f64 {
    DEFAULT_GRID_STEP
}
fn default_sampling() -> SamplingSpec {
    SamplingSpec::Poisson {
        mean_gap: DEFAULT_MEAN_GAP,
    }
}
fn default_noise() -> NoiseSpec {
    NoiseSpec::None
}

/// Which cut-off rule exponent applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseRule {
    /// Noisy rule whenever the scenario adds noise.
    #[default]
    Scenario,
    Yes,
    No,
}

/// Frequency selection for a scenario. Explicit `cutoff` and
/// `localization` override the rules.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreqChoice {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub cutoff: Option<usize>,
    pub localization: Option<f64>,
    pub noise_rule: NoiseRule,
}

/// One Monte Carlo scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Display name; not part of the scenario hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelParams,
    #[serde(default)]
    pub correlation: CorrelationSpec,
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
    #[serde(default = "default_sampling")]
    pub sampling: SamplingSpec,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_eval_minutes")]
    pub eval_grid_minutes: f64,
    /// Simulation grid step in seconds over a 6.5 hour day.
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default)]
    pub freq: FreqChoice,
}

impl ScenarioConfig {
    pub fn new(model: ModelParams, noise: NoiseSpec, d: usize, n_paths: usize, master_seed: u64) -> Self {
        Self {
            name: None,
            model,
            correlation: CorrelationSpec::default(),
            noise,
            sampling: default_sampling(),
            d,
            n_paths,
            master_seed,
            eval_grid_minutes: DEFAULT_EVAL_MINUTES,
            grid_step: DEFAULT_GRID_STEP,
            freq: FreqChoice::default(),
        }
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{}/{}/d{}", self.model.name(), self.noise.label(), self.d))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.d == 0 {
            return Err(Error::config("scenario needs at least one asset"));
        }
        if self.n_paths == 0 {
            return Err(Error::config("scenario needs at least one path"));
        }
        if matches!(self.sampling, SamplingSpec::ShiftedRegular { .. }) && self.d != 2 {
            return Err(Error::config("shifted regular sampling needs d = 2"));
        }
        self.grid()?;
        self.eval_times()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<DenseGrid> {
        DenseGrid::trading_day_with_step(self.grid_step)
    }

    /// Eval times every `eval_grid_minutes`, leaving one step of margin at
    /// each end of the day.
    pub fn eval_times(&self) -> Result<Vec<f64>> {
        eval_grid(&self.grid()?, self.eval_grid_minutes)
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON of the
    /// configuration without its name.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.name = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
    }

    pub fn path_seed(&self, path: usize) -> u64 {
        let h = u64::from_str_radix(&self.hash(), 16).expect("hash is hex");
        derive_seed(self.master_seed, &[h, path as u64])
    }

    /// Expected increments per asset, the n of the frequency rules.
    pub fn expected_n(&self) -> Result<usize> {
        Ok(self.sampling.expected_increments(&self.grid()?).round() as usize)
    }

    pub fn noise_present(&self) -> bool {
        match self.freq.noise_rule {
            NoiseRule::Scenario => !self.noise.is_none(),
            NoiseRule::Yes => true,
            NoiseRule::No => false,
        }
    }

    /// Frequencies from the rules, with explicit overrides applied.
    pub fn resolve_freq(&self) -> Result<FreqParams> {
        let n = self.expected_n()?;
        let mut f = select_freq(n, self.freq.alpha, self.freq.beta, self.noise_present())?;
        if let Some(c) = self.freq.cutoff {
            f.cutoff = c;
            f.localization = localization_rule(c, self.freq.beta.unwrap_or(DEFAULT_BETA))?;
        }
        if let Some(m) = self.freq.localization {
            f.localization = m;
        }
        FreqParams::new(f.cutoff, f.localization)?;
        Ok(f)
    }
}

/// Times k * step for k >= 1 up to t_end - step, with step in minutes.
pub fn eval_grid(grid: &DenseGrid, minutes: f64) -> Result<Vec<f64>> {
    let step = minutes * 60.0;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::arg(format!("eval grid spacing must be positive, got {minutes} min")));
    }
    let last = grid.t_end() - step;
    let times: Vec<f64> = (1..)
        .map(|k| grid.t0 + k as f64 * step)
        .take_while(|&t| t <= last + 1e-9 * step)
        .collect();
    if times.is_empty() {
        return Err(Error::arg(format!("eval spacing {minutes} min leaves no interior point")));
    }
    Ok(times)
}

/// The four volatility models with their default parameters.
pub fn standard_models() -> Vec<ModelParams> {
    vec![
        ModelParams::Heston(HestonParams::default()),
        ModelParams::Sv1f(Sv1fParams::default()),
        ModelParams::Sv2f(Sv2fParams::default()),
        ModelParams::RoughHeston(RoughHestonParams::default()),
    ]
}

/// Every model crossed with every noise family: 64 scenarios.
pub fn standard_scenarios(d: usize, n_paths: usize, master_seed: u64) -> Vec<ScenarioConfig> {
    standard_models()
        .into_iter()
        .flat_map(|m| {
            NoiseSpec::standard_grid()
                .into_iter()
                .map(move |noise| ScenarioConfig::new(m, noise, d, n_paths, master_seed))
        })
        .collect()
}

/// Simulated panel, observed ticks and truth on the eval grid of one path.
#[derive(Debug, Clone)]
pub struct PathData {
    pub bundle: PanelBundle,
    pub ticks: Vec<TickSeries>,
    pub truth: TruthPath,
}

/// Simulate, contaminate and sample path `path` of the scenario.
pub fn simulate_path(cfg: &ScenarioConfig, path: usize) -> Result<PathData> {
    let grid = cfg.grid()?;
    let seed = cfg.path_seed(path);
    let bundle = simulate(&cfg.model, &cfg.correlation, &grid, cfg.d, seed)?;
    let ticks = {
        let noisy = apply_noise(&bundle, &cfg.noise, seed)?;
        sample(&noisy, &cfg.sampling, seed)?
    };
    let times = cfg.eval_times()?;
    let matrices = times
        .iter()
        .map(|&t| bundle.true_spot_cov(t))
        .collect::<Result<Vec<_>>>()?;
    let truth = TruthPath::new(times, matrices)?;
    Ok(PathData { bundle, ticks, truth })
}

/// Estimates are variance per trading day.
pub fn estimate_options() -> EstimateOptions {
    EstimateOptions::per_unit(TRADING_DAY_SECONDS)
}

/// Run one estimator on prepared ticks.
pub fn run_estimator(
    prepared: &PreparedTicks,
    tag: EstimatorTag,
    freq: &FreqParams,
    eval_times: &[f64],
) -> Result<SpotCovEstimate> {
    let opts = estimate_options();
    match tag {
        EstimatorTag::Pdf => prepared.pdf(freq, &PsdWeight::gaussian(freq.localization)?, eval_times, &opts),
        EstimatorTag::Classical => prepared.classical(freq.cutoff, freq.fejer_order(), eval_times, &opts, freq),
        other => Err(Error::arg(format!("estimator `{}` cannot run inside the harness", other.name()))),
    }
}

/// Spectrum order the estimator needs.
pub fn required_freq(tag: EstimatorTag, freq: &FreqParams) -> usize {
    match tag {
        EstimatorTag::Classical => freq.cutoff + freq.fejer_order(),
        _ => freq.cutoff,
    }
}

/// Worker count from the argument, else the environment, else rayon's default.
pub fn worker_count(requested: Option<usize>) -> Result<usize> {
    if let Some(w) = requested {
        return if w == 0 {
            Err(Error::config("worker count must be positive"))
        } else {
            Ok(w)
        };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&w| w > 0)
            .ok_or_else(|| Error::config(format!("{WORKERS_ENV}=`{v}` is not a positive integer"))),
        Err(_) => Ok(rayon::current_num_threads()),
    }
}

/// Run `f` inside a dedicated pool of `workers` threads.
pub fn in_pool<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let n = worker_count(workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::config(format!("building worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Map over path indices in parallel, keeping path order in the output.
pub(crate) fn map_paths<R: Send>(n_paths: usize, f: impl Fn(usize) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    (0..n_paths).into_par_iter().map(f).collect()
}

/// Per-path scores of each estimator, in path order.
pub fn score_scenario(cfg: &ScenarioConfig, estimators: &[EstimatorTag]) -> Result<Vec<Vec<PathScore>>> {
    cfg.validate()?;
    let freq = cfg.resolve_freq()?;
    let max_freq = estimators.iter().map(|&t| required_freq(t, &freq)).max().unwrap_or(0);
    let per_path = map_paths(cfg.n_paths, |p| {
        let data = simulate_path(cfg, p)?;
        let prepared = PreparedTicks::new(&data.ticks, max_freq)?;
        estimators
            .iter()
            .map(|&tag| score_path(&run_estimator(&prepared, tag, &freq, &data.truth.times)?, &data.truth))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((0..estimators.len())
        .map(|e| per_path.iter().map(|row| row[e].clone()).collect())
        .collect())
}

/// Score report of each estimator on a scenario.
pub fn run_scenario(cfg: &ScenarioConfig, estimators: &[EstimatorTag]) -> Result<Vec<ScoreReport>> {
    score_scenario(cfg, estimators)?.iter().map(|s| aggregate(s)).collect()
}
