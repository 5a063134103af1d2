use excir::dataset::{load_dataset, write_dataset, LoadOptions};
use excir::synthgen;
use excir::{explain, DependenceMode, ExplainConfig};

#[test]
fn report_survives_a_csv_round_trip() {
    let (ds, _) = synthgen::preset("independent_k4", 1200, 6).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    write_dataset(&ds, &path).unwrap();
    let loaded = load_dataset(&path, &LoadOptions::with_output("y")).unwrap();
    assert_eq!(loaded.feature_names(), ds.feature_names());

    let mut cfg = ExplainConfig::for_output_column("y");
    cfg.mode = DependenceMode::Full;
    cfg.n_prime = Some(150);
    let a = explain(&ds, &cfg).unwrap();
    let b = explain(&loaded, &cfg).unwrap();
    assert_eq!(a.sample_rows, b.sample_rows);
    assert_eq!(a.report.to_json(), b.report.to_json());
}

#[test]
fn sample_rows_are_sorted_and_distinct() {
    let (ds, _) = synthgen::preset("chain_dependent_k3", 900, 2).unwrap();
    let mut cfg = ExplainConfig::for_output_column("y");
    cfg.n_prime = Some(120);
    let ex = explain(&ds, &cfg).unwrap();
    assert_eq!(ex.sample_rows.len(), 120);
    assert!(ex.sample_rows.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(ex.report.globals.n_prime, 120);
    assert_eq!(ex.report.globals.n, 900);
}
