use spotcov::harness::{run_grid_search, GridSpec, ScenarioConfig};
use spotcov::microstructure::NoiseSpec;
use spotcov::path_sim::{HestonParams, ModelParams};

#[test]
fn iid_noise_moves_the_weighted_winner_to_two_thirds() {
    let cfg = ScenarioConfig::new(
        ModelParams::Heston(HestonParams::default()),
        NoiseSpec::Iid { variance_ratio: 2.5 },
        2,
        100,
        1,
    );
    let r = run_grid_search(&cfg, &GridSpec::standard()).unwrap();
    assert_eq!(r.cells.len(), 30);
    let best = r.best_cell();
    assert!((best.alpha - 2.0 / 3.0).abs() < 1e-12, "winner alpha {}", best.alpha);
    assert!((best.beta - 4.0 / 9.0).abs() < 1e-12, "winner beta {}", best.beta);
    // the largest cut-off is heavily penalized once noise is present
    let (gap, se) = r.cov_gap((2.0 / 3.0, 4.0 / 9.0), (1.0, 4.0 / 9.0)).unwrap();
    assert!(gap < -2.0 * se, "{gap} {se}");
}

#[test]
fn cov_table_has_one_row_per_alpha() {
    let mut cfg = ScenarioConfig::new(ModelParams::Heston(HestonParams::default()), NoiseSpec::None, 2, 3, 2);
    cfg.name = Some("small".into());
    let spec = GridSpec {
        alphas: vec![0.75, 0.5],
        betas: vec![0.5, 4.0 / 9.0],
    };
    let r = run_grid_search(&cfg, &spec).unwrap();
    let mut buf = Vec::new();
    r.write_cov_table(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 3);
    let mut cells = Vec::new();
    r.write_cells(&mut cells).unwrap();
    assert_eq!(String::from_utf8(cells).unwrap().lines().count(), 5);
}
