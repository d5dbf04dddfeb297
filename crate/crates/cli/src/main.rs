//! `spotcov` command line front end.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use spotcov::fourier::{detect_noise, select_freq, FreqParams, PreparedTicks, DEFAULT_BETA};
use spotcov::harness::{
    eval_grid, in_pool, read_external_estimates, run_comparison, run_grid_search, run_scenarios,
    run_sensitivity_study, simulate_path, write_sensitivity_csv, GridSpec, ScenarioGrid, ResultStore, RunConfig,
    ScenarioConfig, SensitivityConfig, DEFAULT_EVAL_MINUTES,
};
use spotcov::metrics::write_table_csv;
use spotcov::microstructure::NoiseSpec;
use spotcov::path_sim::{DenseGrid, HestonParams, ModelParams};
use spotcov::sampling::{read_ticks, write_ticks};
use spotcov::{EstimatorTag, Error};

#[derive(Parser)]
#[command(name = "spotcov", version, about = "Fourier spot covariance estimation and Monte Carlo harness")]
struct Cli {
    /// Worker threads (overrides SPOTCOV_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseFlag {
    Auto,
    Yes,
    No,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorFlag {
    Pdf,
    Classical,
}

impl From<EstimatorFlag> for EstimatorTag {
    fn from(e: EstimatorFlag) -> Self {
        match e {
            EstimatorFlag::Pdf => EstimatorTag::Pdf,
            EstimatorFlag::Classical => EstimatorTag::Classical,
        }
    }
}

/// Scenario source shared by the simulation subcommands.
#[derive(clap::Args)]
struct ScenarioArgs {
    /// Scenario TOML file; without it, Heston with default parameters and no noise.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Override the number of assets.
    #[arg(long)]
    d: Option<usize>,
    /// Override the number of Monte Carlo paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioArgs {
    fn load(&self, default_d: usize) -> anyhow::Result<ScenarioConfig> {
        let mut cfg = match &self.scenario {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| not_found(p, e))?;
                toml::from_str::<ScenarioConfig>(&text).map_err(|e| Error::Input {
                    path: p.display().to_string(),
                    row: e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1),
                    message: e.message().to_string(),
                })?
            }
            None => ScenarioConfig::new(
                ModelParams::Heston(HestonParams::default()),
                NoiseSpec::None,
                default_d,
                100,
                0,
            ),
        };
        if let Some(d) = self.d {
            cfg.d = d;
        }
        if let Some(k) = self.paths {
            cfg.n_paths = k;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path of a scenario and write its observed ticks.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Path index within the scenario.
        #[arg(long, default_value_t = 0)]
        path: usize,
        /// Tick CSV (asset,time_s,log_price).
        #[arg(long)]
        out: PathBuf,
        /// Also write the dense simulated panel with spot variances.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Estimate the spot covariance from a tick CSV.
    Estimate {
        /// Tick CSV (asset,time_s,log_price).
        input: PathBuf,
        /// Cutting frequency; overrides the rule.
        #[arg(long = "N")]
        cutoff: Option<usize>,
        /// Localization parameter; defaults to N^beta.
        #[arg(long = "M")]
        localization: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, value_enum, default_value_t = NoiseFlag::Auto)]
        noise: NoiseFlag,
        #[arg(long, value_enum, default_value_t = EstimatorFlag::Pdf)]
        estimator: EstimatorFlag,
        #[arg(long, default_value_t = DEFAULT_EVAL_MINUTES)]
        eval_grid_minutes: f64,
        /// Seconds per variance unit (default: a 6.5 hour trading day).
        #[arg(long, default_value_t = spotcov::path_sim::TRADING_DAY_SECONDS)]
        unit_seconds: f64,
        /// Result CSV (time_s,j,jp,value,min_eig_at_t); stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search the (alpha, beta) grid on a two-asset scenario.
    GridSearch {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory for mise_cov_grid.csv and grid_cells.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Bias and MSE against N on synchronous and shifted grids.
    Sensitivity {
        /// Correlations; default 0.2, +-0.3, +-0.5, +-0.7, +-1.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        rhos: Option<Vec<f64>>,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory, one CSV per correlation.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// MISE and PSD table over the scenarios of a run config.
    Compare {
        /// Run config TOML.
        #[arg(long)]
        config: PathBuf,
        /// External estimates CSV (path,time_s,j,jp,value).
        #[arg(long, requires_all = ["external_label", "external_scenario"])]
        external: Option<PathBuf>,
        /// Table label of the external estimates.
        #[arg(long)]
        external_label: Option<String>,
        /// Hash of the scenario the external estimates belong to.
        #[arg(long)]
        external_scenario: Option<String>,
        /// Table CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute missing records of a run config into a result store.
    Run {
        /// Run config TOML; without it, the 64-scenario sweep.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        store: PathBuf,
        /// Recompute records that already exist.
        #[arg(long)]
        force: bool,
        /// Sweep at K=500 and d up to 40 instead of K=100 and d up to 10.
        #[arg(long, conflicts_with = "config")]
        full: bool,
    },
    /// Rebuild the index and print the table of a result store.
    Report {
        #[arg(long)]
        store: PathBuf,
        /// Table CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn not_found(p: &Path, e: io::Error) -> anyhow::Error {
    let kind = e.kind();
    let err = anyhow::Error::new(e).context(format!("reading {}", p.display()));
    if kind == io::ErrorKind::NotFound {
        err.context(InputFault)
    } else {
        err
    }
}

/// Marks an error caused by the user's input.
#[derive(Debug)]
struct InputFault;

impl std::fmt::Display for InputFault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("input error")
    }
}

fn create(p: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
}

fn output(p: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match p {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    input: &Path,
    cutoff: Option<usize>,
    localization: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    noise: NoiseFlag,
    estimator: EstimatorTag,
    minutes: f64,
    unit_seconds: f64,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let file = File::open(input).map_err(|e| not_found(input, e))?;
    let ticks = read_ticks(BufReader::new(file), &input.display().to_string())?;
    let freq = match cutoff {
        Some(n) => {
            let m = match localization {
                Some(m) => m,
                None => (n.max(1) as f64).powf(beta.unwrap_or(DEFAULT_BETA)),
            };
            FreqParams::new(n, m)?
        }
        None => {
            let noisy = match noise {
                NoiseFlag::Auto => detect_noise(&ticks),
                NoiseFlag::Yes => true,
                NoiseFlag::No => false,
            };
            let n_obs = ticks.iter().map(|s| s.n_increments()).sum::<usize>() / ticks.len().max(1);
            let mut f = select_freq(n_obs, alpha, beta, noisy)?;
            if let Some(m) = localization {
                f = FreqParams::new(f.cutoff, m)?;
            }
            f
        }
    };
    let needed = match estimator {
        EstimatorTag::Classical => freq.cutoff + freq.fejer_order(),
        _ => freq.cutoff,
    };
    let prepared = PreparedTicks::new(&ticks, needed)?;
    let w = prepared.window();
    let span = w.t_end - w.t0;
    let times = eval_grid(&DenseGrid::new(w.t0, span, 1)?, minutes)?;
    let est = match estimator {
        EstimatorTag::Pdf => prepared.pdf(
            &freq,
            &spotcov::PsdWeight::gaussian(freq.localization)?,
            &times,
            &spotcov::EstimateOptions::per_unit(unit_seconds),
        )?,
        EstimatorTag::Classical => prepared.classical(
            freq.cutoff,
            freq.fejer_order(),
            &times,
            &spotcov::EstimateOptions::per_unit(unit_seconds),
            &freq,
        )?,
        _ => unreachable!("only pdf and classical are selectable"),
    };
    let mut w = csv::Writer::from_writer(output(out)?);
    w.write_record(["time_s", "j", "jp", "value", "min_eig_at_t"])?;
    for ((t, m), g) in est.eval_times.iter().zip(&est.matrices).zip(&est.diagnostics) {
        for j in 0..m.dim() {
            for jp in 0..m.dim() {
                w.write_record([
                    t.to_string(),
                    j.to_string(),
                    jp.to_string(),
                    format!("{:.17e}", m.get(j, jp)),
                    format!("{:.17e}", g.min_eigenvalue),
                ])?;
            }
        }
    }
    w.flush()?;
    eprintln!("N = {}, M = {:.6}, {} eval times", freq.cutoff, freq.localization, times.len());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            path,
            out,
            truth,
        } => {
            let cfg = scenario.load(2)?;
            let data = simulate_path(&cfg, path)?;
            write_ticks(create(&out)?, &data.ticks)?;
            if let Some(t) = truth {
                data.bundle.write_csv(create(&t)?, None)?;
            }
            eprintln!("scenario {} hash {} path {path}", cfg.label(), cfg.hash());
        }
        Command::Estimate {
            input,
            cutoff,
            localization,
            alpha,
            beta,
            noise,
            estimator,
            eval_grid_minutes,
            unit_seconds,
            out,
        } => estimate(
            &input,
            cutoff,
            localization,
            alpha,
            beta,
            noise,
            estimator.into(),
            eval_grid_minutes,
            unit_seconds,
            out.as_deref(),
        )?,
        Command::GridSearch { scenario, out_dir } => {
            let cfg = scenario.load(2)?;
            let r = in_pool(cli.workers, || run_grid_search(&cfg, &GridSpec::standard()))??;
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            r.write_cov_table(create(&out_dir.join("mise_cov_grid.csv"))?)?;
            r.write_cells(create(&out_dir.join("grid_cells.csv"))?)?;
            let b = r.best_cell();
            println!(
                "best alpha = {:.4}, beta = {:.4} (N = {}, M = {:.4}, weighted MISE {:.4e})",
                b.alpha, b.beta, b.cutoff, b.localization, b.weighted
            );
        }
        Command::Sensitivity {
            rhos,
            n,
            paths,
            seed,
            out_dir,
        } => {
            let mut cfg = SensitivityConfig {
                n,
                n_paths: paths,
                master_seed: seed,
                ..SensitivityConfig::default()
            };
            if let Some(r) = rhos {
                cfg.rhos = r;
            }
            let curves = in_pool(cli.workers, || run_sensitivity_study(&cfg))??;
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            for c in &curves {
                let p = out_dir.join(format!("sensitivity_rho{}.csv", c.rho));
                write_sensitivity_csv(create(&p)?, c)?;
                println!("{}", p.display());
            }
        }
        Command::Compare {
            config,
            external,
            external_label,
            external_scenario,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let ext = match external {
                Some(p) => {
                    let file = File::open(&p).map_err(|e| not_found(&p, e))?;
                    vec![read_external_estimates(
                        BufReader::new(file),
                        &p.display().to_string(),
                        external_label.as_deref().unwrap_or("external"),
                        external_scenario.as_deref().unwrap_or_default(),
                    )?]
                }
                None => Vec::new(),
            };
            let rows = in_pool(cli.workers, || run_comparison(&cfg.all_scenarios(), &cfg.estimators, &ext))??;
            write_table_csv(output(out.as_deref())?, &rows)?;
        }
        Command::Run {
            config,
            store,
            force,
            full,
        } => {
            let cfg = match config {
                Some(p) => RunConfig::load(&p)?,
                None => RunConfig {
                    estimators: vec![EstimatorTag::Pdf],
                    scenario_grid: Some(if full {
                        ScenarioGrid {
                            dims: vec![2, 5, 10, 15, 20, 25, 30, 40],
                            n_paths: 500,
                            master_seed: 0,
                        }
                    } else {
                        ScenarioGrid {
                            dims: vec![2, 5, 10],
                            n_paths: 100,
                            master_seed: 0,
                        }
                    }),
                    scenarios: Vec::new(),
                },
            };
            let store = ResultStore::open(&store)?;
            let s = in_pool(cli.workers, || run_scenarios(&cfg, &store, force))??;
            println!("computed {}, skipped {}", s.computed, s.skipped);
        }
        Command::Report { store, out } => {
            if !store.join("records").is_dir() {
                return Err(anyhow::anyhow!("{} is not a result store", store.display()).context(InputFault));
            }
            let store = ResultStore::open(&store)?;
            store.write_index()?;
            store.write_table(output(out.as_deref())?)?;
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let input = e.downcast_ref::<InputFault>().is_some()
        || e.chain().any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_input_error));
    if input {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
