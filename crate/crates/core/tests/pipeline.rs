//! Cross-module behaviour: simulation through scoring.

use std::time::Instant;

use proptest::prelude::*;

use spotcov::fourier::{cutoff_rule, PreparedTicks, PsdWeight};
use spotcov::harness::{
    estimate_options, in_pool, standard_models, run_estimator, run_sensitivity_study, simulate_path, ScenarioConfig,
    SensitivityConfig,
};
use spotcov::linalg::SquareMatrix;
use spotcov::metrics::{psd_rate, score_path, weighted_selection, TruthPath, PSD_TOLERANCE};
use spotcov::microstructure::{apply_noise, apply_rounding, NoiseSpec};
use spotcov::path_sim::{simulate, CorrelationSpec, DenseGrid, ModelParams};
use spotcov::sampling::{sample, SamplingSpec};
use spotcov::{EstimatorTag, FreqParams, SpotCovEstimateF64, TickSeriesF64};

fn small_scenario(model: ModelParams, noise: NoiseSpec, d: usize, seed: u64) -> ScenarioConfig {
    ScenarioConfig::new(model, noise, d, 1, seed)
}

fn check_ticks(series: &[TickSeriesF64], grid: &DenseGrid) {
    for s in series {
        let t = s.times();
        assert_eq!(t[0], grid.t0);
        assert_eq!(*t.last().unwrap(), grid.t_end());
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn every_model_and_noise_family_gives_psd_estimates() {
    for (m, model) in standard_models().into_iter().enumerate() {
        for noise in NoiseSpec::standard_grid().into_iter().step_by(3) {
            let cfg = small_scenario(model, noise, 3, 10 + m as u64);
            let data = simulate_path(&cfg, 0).unwrap();
            check_ticks(&data.ticks, &cfg.grid().unwrap());
            let freq = cfg.resolve_freq().unwrap();
            let prepared = PreparedTicks::new(&data.ticks, freq.cutoff).unwrap();
            let est = run_estimator(&prepared, EstimatorTag::Pdf, &freq, &data.truth.times).unwrap();
            for g in &est.diagnostics {
                assert!(g.is_psd(PSD_TOLERANCE), "{} {:?}: {g:?}", model.name(), noise);
                assert!(g.imag_residue_ok(1e-10), "{g:?}");
            }
            let score = score_path(&est, &data.truth).unwrap();
            assert!(score.mise() >= 0.0 && score.mise().is_finite());
        }
    }
}

#[test]
fn simulation_is_identical_across_worker_counts() {
    let cfg = small_scenario(ModelParams::RoughHeston(Default::default()), NoiseSpec::Iid { variance_ratio: 2.0 }, 4, 5);
    let run = |w: usize| {
        in_pool(Some(w), || {
            (0..4)
                .map(|p| {
                    let d = simulate_path(&cfg, p).unwrap();
                    (d.bundle.log_prices, d.bundle.spot_var, d.ticks)
                })
                .collect::<Vec<_>>()
        })
        .unwrap()
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn estimation_budget_at_twenty_assets() {
    // 10 s mean gap over the day gives about 2340 returns per asset; N = 87
    let mut cfg = ScenarioConfig::new(ModelParams::Heston(Default::default()), NoiseSpec::None, 20, 1, 3);
    cfg.freq.cutoff = Some(87);
    let data = simulate_path(&cfg, 0).unwrap();
    let freq = cfg.resolve_freq().unwrap();
    let span = cfg.grid().unwrap().t_end();
    let times: Vec<f64> = (1..=20).map(|k| k as f64 * span / 21.0).collect();
    let elapsed = in_pool(Some(1), || {
        let start = Instant::now();
        let prepared = PreparedTicks::new(&data.ticks, freq.cutoff).unwrap();
        let est = prepared
            .pdf(&freq, &PsdWeight::gaussian(freq.localization).unwrap(), &times, &estimate_options())
            .unwrap();
        assert_eq!(est.len(), 20);
        start.elapsed().as_secs_f64()
    })
    .unwrap();
    assert!(elapsed <= 2.0, "d=20 estimate took {elapsed:.3}s");
}

#[test]
fn shifted_sampling_keeps_the_rule_cutoff_stable() {
    // rho = 0.312, n = 500: at N = floor(500^{3/4}/2) the async MSE stays within 10% of sync
    let cfg = SensitivityConfig {
        rhos: vec![0.312],
        n_paths: 1000,
        master_seed: 1,
        ..SensitivityConfig::default()
    };
    let c = &run_sensitivity_study(&cfg).unwrap()[0];
    let n = cutoff_rule(cfg.n, 0.75).unwrap();
    let (sync, asyn) = (c.sync.mse[n], c.async_.mse[n]);
    assert!((asyn - sync).abs() <= 0.1 * sync, "N={n}: sync {sync} async {asyn}");
}

fn heston_pair_panel(seed: u64) -> spotcov::path_sim::PanelBundle {
    let grid = DenseGrid::new(0.0, 2.0, 600).unwrap();
    simulate(
        &ModelParams::Heston(Default::default()),
        &CorrelationSpec::equicorrelated(0.4),
        &grid,
        2,
        seed,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sampled_series_are_increasing_and_pinned(seed in any::<u64>(), gap in 4.0f64..60.0, regular in any::<bool>()) {
        let base = heston_pair_panel(seed % 1000);
        let panel = apply_noise(&base, &NoiseSpec::None, seed).unwrap();
        let spec = if regular { SamplingSpec::Regular { gap: 2.0 * (gap / 2.0).round() } } else { SamplingSpec::Poisson { mean_gap: gap } };
        let ticks = sample(&panel, &spec, seed).unwrap();
        check_ticks(&ticks, &base.grid);
    }

    #[test]
    fn rounding_is_idempotent(seed in 0u64..500, tick in prop::sample::select(vec![0.01, 0.05, 0.25])) {
        let base = heston_pair_panel(seed);
        let once = apply_rounding(&base, tick).unwrap();
        let mut rebased = base.clone();
        rebased.log_prices = once.obs_log_prices.clone();
        let twice = apply_rounding(&rebased, tick).unwrap();
        for (a, b) in once.obs_log_prices.iter().zip(&twice.obs_log_prices) {
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn mise_is_nonnegative_and_zero_only_at_truth(
        entries in prop::collection::vec(-1.0f64..1.0, 12),
        offset in prop::collection::vec(-0.1f64..0.1, 12),
    ) {
        let times = vec![0.0, 10.0, 30.0];
        let mats = |v: &[f64]| -> Vec<SquareMatrix<f64>> {
            v.chunks(4).map(|c| SquareMatrix::from_fn(2, |i, j| if i == j { 1.0 + c[3 * i].abs() } else { c[1] })).collect()
        };
        let truth_m = mats(&entries);
        let truth = TruthPath::new(times.clone(), truth_m.clone()).unwrap();
        let est = |m: Vec<SquareMatrix<f64>>| SpotCovEstimateF64 {
            eval_times: times.clone(),
            diagnostics: m.iter().map(|x| spotcov::fourier::MatrixDiagnostics::of(x, 0.0)).collect(),
            matrices: m,
            tag: EstimatorTag::External,
            freq: FreqParams::new(0, 1.0).unwrap(),
        };
        prop_assert_eq!(score_path(&est(truth_m), &truth).unwrap().mise(), 0.0);
        let shifted: Vec<f64> = entries.iter().zip(&offset).map(|(a, b)| a + b).collect();
        let s = score_path(&est(mats(&shifted)), &truth).unwrap();
        prop_assert!(s.mise() >= 0.0);
        let moved = truth.matrices.iter().zip(&mats(&shifted)).any(|(a, b)| a != b);
        prop_assert_eq!(s.mise() > 0.0, moved);
    }

    #[test]
    fn psd_rate_ignores_asset_order(
        vals in prop::collection::vec(-1.0f64..1.0, 27),
        perm in Just(vec![0usize, 1, 2]).prop_shuffle(),
    ) {
        let mats: Vec<SquareMatrix<f64>> = vals
            .chunks(9)
            .map(|c| SquareMatrix::from_fn(3, |i, j| c[3 * i.min(j) + i.max(j)] + if i == j { 0.8 } else { 0.0 }))
            .collect();
        let est = |m: Vec<SquareMatrix<f64>>| SpotCovEstimateF64 {
            eval_times: vec![1.0, 2.0, 3.0],
            diagnostics: m.iter().map(|x| spotcov::fourier::MatrixDiagnostics::of(x, 0.0)).collect(),
            matrices: m,
            tag: EstimatorTag::External,
            freq: FreqParams::new(0, 1.0).unwrap(),
        };
        let permuted = mats.iter().map(|m| m.permuted(&perm)).collect();
        prop_assert_eq!(psd_rate(&[est(mats)]), psd_rate(&[est(permuted)]));
    }

    #[test]
    fn weighted_selection_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0, da in 0.0f64..1.0, db in 0.0f64..1.0) {
        prop_assert!(weighted_selection(a + da, b) >= weighted_selection(a, b));
        prop_assert!(weighted_selection(a, b + db) >= weighted_selection(a, b));
    }
}
