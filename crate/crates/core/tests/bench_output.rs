use std::fs;

use fsi_core::bench::run_benchmark;
use fsi_core::config::RunConfig;

#[test]
fn benchmark_writes_reports_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let text = "levels = 2\nt_step = 2\nperiod = 0.0625\ncompare = direct\ndump_matrices = true\nvtk = true";
    let cfg = RunConfig::with_overrides(text, &[]).unwrap();
    let summary = run_benchmark(&cfg, &out).unwrap();

    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert_eq!(RunConfig::from_str_validated(&manifest).unwrap(), cfg);

    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    let rows = report.lines().count() - 1;
    let solves: usize = summary.aggregates.newton_steps;
    assert_eq!(rows, solves);

    let qoi = fs::read_to_string(out.join("qoi.csv")).unwrap();
    assert_eq!(qoi.lines().count(), 1 + 1 + summary.steps);

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["steps"], 2);
    let d = json["final_difference"].as_f64().unwrap();
    assert!(d < 1e-8, "{d}");

    assert!(fs::read_to_string(out.join("difference.csv")).unwrap().contains("as,direct,"));
    assert!(out.join("direct").join("report.csv").exists());
    assert!(fs::read_to_string(out.join("jacobian.mtx")).unwrap().starts_with("%%MatrixMarket"));
    assert!(out.join("step_0002.vtk").exists());
}

#[test]
fn invalid_configuration_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad");
    let cfg = RunConfig { t_step: 0, ..RunConfig::default() };
    assert!(run_benchmark(&cfg, &out).is_err());
    assert!(!out.exists());
}
