//! Parameter-study harness for the shipped scenarios. Not part of the
//! regular suite; run explicitly when retuning a scenario file:
//! `cargo test --release -p safe-mpomdp-cli --test tuning -- --ignored --nocapture`

use std::path::PathBuf;

use safe_mpomdp_cli::{cmd_compare, CompareOptions, ScenarioOverrides};

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn print_stats(name: &str) {
    let dir = tempfile::tempdir().unwrap();
    let summary = cmd_compare(&CompareOptions {
        scenario_path: scenario_path(name),
        seeds: (0..100).collect(),
        out_dir: dir.path().to_path_buf(),
        emit_beliefs: false,
        overrides: ScenarioOverrides::default(),
    })
    .unwrap();
    println!("== {name}");
    println!(
        "nominal:  outcomes={:?} runs_with_violations={}",
        summary.nominal_outcomes, summary.nominal_runs_with_violations
    );
    println!(
        "filtered: outcomes={:?} runs_with_violations={} runs_with_interventions={}",
        summary.filtered_outcomes,
        summary.filtered_runs_with_violations,
        summary.filtered_runs_with_interventions
    );
    let min_interventions =
        summary.rows.iter().map(|r| r.filtered_interventions).min().unwrap_or(0);
    println!("filtered min interventions per run: {min_interventions}");
}

#[test]
#[ignore]
fn adversarial_statistics() {
    print_stats("adversarial.json");
}

#[test]
#[ignore]
fn default_statistics() {
    print_stats("default.json");
}
