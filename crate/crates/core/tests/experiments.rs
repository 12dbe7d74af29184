use std::fs;

use consensus_lq::experiments::config::{ExperimentConfig, ExperimentKind};
use consensus_lq::experiments::{
    analyze_matrix, run_cayley_sweep, run_epsilon_sweep, run_geometric_sweep, run_validation_suite,
    AnalyzeSettings, CayleySettings, EpsilonSweepSettings, GeometricSettings, ValidateSettings,
};
use consensus_lq::graph_gen::commuting_example;
use consensus_lq::io::write_matrix_csv;
use consensus_lq::Error;

fn config(kind: ExperimentKind, pairs: &[(&str, &str)]) -> ExperimentConfig {
    let overrides: Vec<(String, String)> = pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    ExperimentConfig::from_text(kind, "", &overrides).unwrap()
}

#[test]
fn epsilon_sweep_default_grid() {
    let s = EpsilonSweepSettings::from_config(&config(ExperimentKind::EpsilonSweep, &[])).unwrap();
    let out = run_epsilon_sweep(&s).unwrap();
    assert_eq!(out.rows.len(), 100);
    for r in &out.rows {
        for up in r.j_upper_bounds() {
            assert!(r.j <= up * (1.0 + 1e-9));
        }
    }
    let last = out.rows.last().unwrap();
    assert_eq!(last.param, Some(0.5));
    assert!(last.lower_applicable);
    assert!(last.resistance_j_lower.unwrap() <= last.j_exact.unwrap() * (1.0 + 1e-9));
}

#[test]
fn epsilon_sweep_hypothetical_lower_fails_small_eps() {
    let s = EpsilonSweepSettings::from_config(&config(
        ExperimentKind::EpsilonSweep,
        &[("eps_min", "0.01"), ("eps_max", "0.01"), ("points", "1")],
    ))
    .unwrap();
    let row = &run_epsilon_sweep(&s).unwrap().rows[0];
    assert!(!row.lower_applicable);
    assert!(row.resistance_j_lower.unwrap() > row.j_exact.unwrap());
}

#[test]
fn cayley_single_circle() {
    let s = CayleySettings::from_config(&config(
        ExperimentKind::Cayley,
        &[("case", "2"), ("d", "1"), ("sizes", "3")],
    ))
    .unwrap();
    let out = run_cayley_sweep(&s).unwrap();
    assert_eq!(out.rows.len(), 1);
    assert!((out.rows[0].j_exact.unwrap() - 8.0 / 9.0).abs() < 1e-10);
}

#[test]
fn cayley_case1_rows_are_bracketed() {
    let s = CayleySettings::from_config(&config(
        ExperimentKind::Cayley,
        &[
            ("case", "1"),
            ("d", "3"),
            ("sizes", "4"),
            ("instances", "20"),
        ],
    ))
    .unwrap();
    let out = run_cayley_sweep(&s).unwrap();
    assert_eq!(out.rows.len(), 20);
    for r in &out.rows {
        let j = r.j_exact.unwrap();
        assert!(r.normal_j_lower.unwrap() <= j * (1.0 + 1e-9));
        assert!(j <= r.normal_j_upper.unwrap() * (1.0 + 1e-9));
    }
}

#[test]
fn cayley_case1_exhaustion_propagates() {
    let s = CayleySettings::from_config(&config(
        ExperimentKind::Cayley,
        &[
            ("case", "1"),
            ("d", "2"),
            ("sizes", "4"),
            ("p_min", "0.11"),
            ("p_max", "0.111"),
            ("attempts", "5"),
        ],
    ))
    .unwrap();
    assert!(matches!(
        run_cayley_sweep(&s),
        Err(Error::RejectionExhausted { attempts: 5 })
    ));
}

#[test]
fn geometric_sweep_is_reproducible() {
    let cfg = config(
        ExperimentKind::Geometric,
        &[("sizes", "25"), ("instances", "4"), ("seed", "7")],
    );
    let s = GeometricSettings::from_config(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = run_geometric_sweep(&s, None).unwrap();
    let b = run_geometric_sweep(&s, None).unwrap();
    a.write(&dir.path().join("a"), false).unwrap();
    b.write(&dir.path().join("b"), false).unwrap();
    let read = |x: &str| fs::read_to_string(dir.path().join(x).join("results.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_eq!(a.rows.len(), 4);
    for r in &a.rows {
        assert!(r.j <= r.topology_j_upper.unwrap() * (1.0 + 1e-9));
        assert!(r.j_over_log.is_some());
    }
    assert!(read("a").contains(",7,"));
}

#[test]
fn geometric_failures_are_skipped() {
    let s = GeometricSettings::from_config(&config(
        ExperimentKind::Geometric,
        &[
            ("sizes", "25"),
            ("instances", "2"),
            ("s", "0.9"),
            ("max_node_attempts", "3"),
        ],
    ))
    .unwrap();
    let out = run_geometric_sweep(&s, None).unwrap();
    assert!(out.rows.is_empty());
    assert!(out.audit.contains("skipped = 2"));
}

#[test]
fn geometric_export_writes_instances() {
    let s = GeometricSettings::from_config(&config(
        ExperimentKind::Geometric,
        &[("sizes", "25"), ("instances", "1")],
    ))
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_geometric_sweep(&s, Some(dir.path())).unwrap();
    for suffix in ["coordinates.csv", "edges.csv", "matrix.csv", "audit.txt"] {
        assert!(dir.path().join(format!("d2_n25_i0_{suffix}")).exists());
    }
}

#[test]
fn validation_suite_passes_and_detects_injection() {
    let s =
        ValidateSettings::from_config(&config(ExperimentKind::Validate, &[("instances", "20")]))
            .unwrap();
    let a = run_validation_suite(&s).unwrap();
    assert!(a.all_passed(), "{a}");
    assert_eq!(a, run_validation_suite(&s).unwrap());

    let s = ValidateSettings { inject: true, ..s };
    let bad = run_validation_suite(&s).unwrap();
    assert!(bad.checks.iter().all(|c| !c.passed()));
}

#[test]
fn analyze_reports_commuting_example() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    write_matrix_csv(&path, commuting_example().entries()).unwrap();
    let s = AnalyzeSettings::from_config(&config(ExperimentKind::Analyze, &[])).unwrap();
    let report = analyze_matrix(&path, &s).unwrap();
    assert!(report.class.commuting);
    assert!(report.resistance.lower_applicable && report.topology.lower_applicable);
    let text = report.to_string();
    assert!(text.contains("commuting = true"));
    assert!(text.contains("resistance.j_lower"));
}

#[test]
fn analyze_rejects_non_stochastic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "0.5,0.5\n0.7,0.2\n").unwrap();
    let s = AnalyzeSettings::from_config(&config(ExperimentKind::Analyze, &[])).unwrap();
    match analyze_matrix(&path, &s) {
        Err(e @ Error::NotStochastic { .. }) => {
            assert!(e.is_validation());
            assert!(e.to_string().contains("row 1"));
        }
        other => panic!("expected NotStochastic, got {other:?}"),
    }
}

#[test]
fn analyze_reports_parse_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "0.5,0.5\n0.5,abc\n").unwrap();
    let s = AnalyzeSettings::from_config(&config(ExperimentKind::Analyze, &[])).unwrap();
    assert!(matches!(
        analyze_matrix(&path, &s),
        Err(Error::Parse {
            line: 2,
            column: 2,
            ..
        })
    ));
}

#[test]
fn unknown_keys_are_rejected() {
    let cfg = config(ExperimentKind::Cayley, &[("bogus", "1")]);
    assert!(matches!(
        CayleySettings::from_config(&cfg),
        Err(Error::Config(_))
    ));
    let cfg = config(ExperimentKind::EpsilonSweep, &[("eps_max", "0.7")]);
    assert!(EpsilonSweepSettings::from_config(&cfg).is_err());
}
