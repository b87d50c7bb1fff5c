//! Golden campaign output. Set `UPDATE_GOLDEN=1` to rewrite the fixture after
//! an intended numerical change.

use std::path::PathBuf;

use changeplane::simulate::{
    generate_dataset, power_design_gamma, run_estimation_experiment, run_test_experiment, ErrorFamily,
    ExperimentConfig, LambdaRule, SimScenario,
};
use changeplane::AdmmConfig;

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/simulate_golden.json")
}

fn campaign_cells() -> serde_json::Value {
    let cfg = AdmmConfig::new(0.5, 1.0);
    let est = run_estimation_experiment(
        &[SimScenario::new(30, 6, 0.5, ErrorFamily::T3, 1.0, 21)],
        &cfg,
        2,
        LambdaRule::Fixed { lambda_tilde: 5.0 },
    )
    .unwrap();
    let mut sc = SimScenario::new(30, 6, 0.5, ErrorFamily::Gaussian, 0.5, 22);
    sc.gamma0 = power_design_gamma(1.0, 0.65);
    let pow = run_test_experiment(&[sc], &cfg, 2, 5, 0.05, LambdaRule::Fixed { lambda_tilde: 5.0 }).unwrap();
    serde_json::json!({ "estimation": est.cells, "power": pow.cells })
}

#[test]
fn campaign_matches_golden_fixture() {
    let got = campaign_cells();
    let path = fixture();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, serde_json::to_string_pretty(&got).unwrap() + "\n").unwrap();
    }
    let want: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(got, want);
}

#[test]
fn campaigns_are_reproducible() {
    assert_eq!(campaign_cells(), campaign_cells());
}

#[test]
fn t3_errors_have_heavier_tails_than_gaussian() {
    let kurt = |fam: ErrorFamily| {
        let (ds, _) = generate_dataset::<f64>(&SimScenario::new(2000, 3, 0.5, fam, 0.0, 8)).unwrap();
        // Under the null the first component is the only signal at a fixed point;
        // remove the per-point mean and look at the standardized fourth moment.
        let col: Vec<f64> = ds.y().column(0).to_vec();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let m2 = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
        let m4 = col.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / col.len() as f64;
        m4 / (m2 * m2)
    };
    assert!(kurt(ErrorFamily::T3) > kurt(ErrorFamily::Gaussian));
}

#[test]
fn oracle_rule_rejected_for_testing() {
    let sc = SimScenario::new(30, 6, 0.5, ErrorFamily::Gaussian, 0.0, 1);
    assert!(run_test_experiment(&[sc], &AdmmConfig::new(0.5, 1.0), 1, 5, 0.05, LambdaRule::Oracle).is_err());
}

#[test]
fn config_file_shape() {
    let text = r#"{
        "kind": "power",
        "cells": [{"n": 50, "m": 10, "tau": 0.5, "error_family": "gaussian", "xi_effect": 0.25, "seed": 3}],
        "reps": 10,
        "b": 100,
        "alpha": 0.05,
        "lambda_rule": {"rule": "fixed", "lambda_tilde": 5.0}
    }"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    assert_eq!(cfg.cells[0].gamma0, vec![-1.0, 1.0]);
    assert_eq!(cfg.lambda_rule, LambdaRule::Fixed { lambda_tilde: 5.0 });
}
