//! Command implementations behind the `safe-mpomdp` binary.
//!
//! `run` executes seeded missions against a scenario file and writes one
//! JSONL trace per seed; `verify` re-checks a recorded trace against the
//! barrier condition offline; `compare` runs the unchecked nominal policy and
//! the filtered policy side by side on the same seeds.
//!
//! Exit-code conventions: 0 on success (mission failures are data, not
//! errors), 1 from `verify` when a trace violates the condition, 2 for
//! invalid scenarios/arguments/traces, 3 for I/O failures.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use safe_mpomdp::dtbf::{condition_from_values, KappaFn, TraceReport, MARGIN_TOLERANCE};
use safe_mpomdp::gridworld::{
    run_exploration_mission, scenario_from_json_str, segway_safety_barrier, AgentObservation,
    AlgorithmChoice, ExplorationMissionResult, ExplorationScenario, FactoredBelief,
    MissionSettings, MissionStepRecord, Robot, ScenarioConfig, StepOutcome,
};
use safe_mpomdp::planner::MissionOutcome;

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "SAFE_MPOMDP_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid arguments: {0}")]
    InvalidArgs(String),

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidScenario(_) | CliError::InvalidArgs(_) | CliError::MalformedTrace(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

// ---------------------------------------------------------------------------
// Trace records (one JSON object per line).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionNames {
    pub uav: String,
    pub flipper: String,
    pub segway: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellsRecord {
    pub uav: [usize; 2],
    pub flipper: [usize; 2],
    pub segway: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReadingRecord {
    pub cell: [usize; 2],
    pub habitable: bool,
    pub sample: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub robot: Robot,
    pub readings: Vec<ReadingRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    /// Absent only on a terminal safety-deadlock marker.
    pub action: Option<ActionNames>,
    pub observations: Vec<ObservationRecord>,
    pub h_value: f64,
    pub margin: Option<f64>,
    pub intervened: bool,
    pub forced_fallback: bool,
    pub expected_reward: Option<f64>,
    pub true_cells: CellsRecord,
    pub outcome: StepOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beliefs: Option<FactoredBelief>,
}

fn observation_records(
    scenario: &ExplorationScenario,
    observations: &[AgentObservation],
) -> Vec<ObservationRecord> {
    observations
        .iter()
        .map(|obs| ObservationRecord {
            robot: obs.robot,
            readings: obs
                .readings
                .iter()
                .map(|r| {
                    let (row, col) = scenario.dims.coords(r.cell);
                    ReadingRecord { cell: [row, col], habitable: r.habitable, sample: r.sample }
                })
                .collect(),
        })
        .collect()
}

fn trace_record(
    scenario: &ExplorationScenario,
    step: &MissionStepRecord,
    belief: Option<&FactoredBelief>,
) -> TraceRecord {
    let coords = |cell: usize| {
        let (row, col) = scenario.dims.coords(cell);
        [row, col]
    };
    TraceRecord {
        t: step.t,
        action: step.action.as_ref().map(|a| {
            let [uav, flipper, segway] = scenario.action_names(a);
            ActionNames { uav, flipper, segway }
        }),
        observations: observation_records(scenario, &step.observations),
        h_value: step.h_value,
        margin: step.margin,
        intervened: step.intervened,
        forced_fallback: step.forced_fallback,
        expected_reward: step.expected_reward,
        true_cells: CellsRecord {
            uav: coords(step.true_cells[0]),
            flipper: coords(step.true_cells[1]),
            segway: coords(step.true_cells[2]),
        },
        outcome: step.outcome,
        beliefs: belief.cloned(),
    }
}

/// Writes one mission as JSONL. With `emit_beliefs`, each committed step
/// carries its committed factored belief (the opening record carries the
/// initial belief).
pub fn write_trace(
    path: &Path,
    scenario: &ExplorationScenario,
    result: &ExplorationMissionResult,
    emit_beliefs: bool,
) -> Result<(), CliError> {
    let mut file = fs::File::create(path)?;
    let mut committed = 0usize;
    for step in &result.steps {
        let belief = if emit_beliefs {
            // beliefs[0] is initial; each Some-margin step committed one more.
            if step.margin.is_some() {
                committed += 1;
            }
            result.beliefs.get(committed)
        } else {
            None
        };
        let record = trace_record(scenario, step, belief);
        serde_json::to_writer(&mut file, &record)
            .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Scenario loading with CLI overrides.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct ScenarioOverrides {
    pub algorithm: Option<AlgorithmChoice>,
    pub horizon: Option<usize>,
    pub theta: Option<f64>,
    pub alpha0: Option<f64>,
}

pub struct LoadedScenario {
    pub config: ScenarioConfig,
    pub scenario: ExplorationScenario,
    pub initial_belief: FactoredBelief,
    pub settings: MissionSettings,
}

pub fn load_scenario(
    path: &Path,
    overrides: &ScenarioOverrides,
) -> Result<LoadedScenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::InvalidScenario(format!("{}: {e}", path.display())))?;
    let mut config: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::InvalidScenario(format!("{}: {e}", path.display())))?;
    if let Some(theta) = overrides.theta {
        config.safety.theta = theta;
    }
    if let Some(alpha0) = overrides.alpha0 {
        config.safety.alpha0 = alpha0;
    }
    if let Some(horizon) = overrides.horizon {
        config.planner.horizon = horizon;
    }
    if let Some(algorithm) = overrides.algorithm {
        config.planner.algorithm = algorithm;
    }
    if config.planner.horizon == 0 {
        return Err(CliError::InvalidScenario("horizon must be at least 1".into()));
    }
    let (scenario, initial_belief) = safe_mpomdp::gridworld::build_scenario(&config)
        .map_err(|e| CliError::InvalidScenario(e.to_string()))?;
    let settings = MissionSettings {
        algorithm: config.planner.algorithm,
        horizon: config.planner.horizon,
        deadlock: config.planner.deadlock_policy,
    };
    Ok(LoadedScenario { config, scenario, initial_belief, settings })
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub success: usize,
    pub failure: usize,
    pub horizon_exceeded: usize,
    pub safety_deadlock: usize,
}

impl OutcomeCounts {
    pub fn record(&mut self, outcome: MissionOutcome) {
        match outcome {
            MissionOutcome::Success => self.success += 1,
            MissionOutcome::Failure => self.failure += 1,
            MissionOutcome::HorizonExceeded => self.horizon_exceeded += 1,
            MissionOutcome::SafetyDeadlock => self.safety_deadlock += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.success + self.failure + self.horizon_exceeded + self.safety_deadlock
    }
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub algorithm: AlgorithmChoice,
    pub seeds: Vec<u64>,
    pub outcomes: OutcomeCounts,
    /// Fraction of executed steps on which the filter replaced the nominal
    /// action (filter runs only).
    pub intervention_rate: Option<f64>,
    pub mean_steps_to_success: Option<f64>,
    pub min_barrier_value: f64,
    pub trace_files: Vec<String>,
}

pub struct RunOptions {
    pub scenario_path: PathBuf,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub emit_beliefs: bool,
    pub overrides: ScenarioOverrides,
}

pub fn cmd_run(options: &RunOptions) -> Result<RunSummary, CliError> {
    if options.seeds.is_empty() {
        return Err(CliError::InvalidArgs("at least one seed is required".into()));
    }
    let loaded = load_scenario(&options.scenario_path, &options.overrides)?;
    fs::create_dir_all(&options.out_dir)?;

    let mut outcomes = OutcomeCounts::default();
    let mut total_steps = 0usize;
    let mut total_interventions = 0usize;
    let mut success_steps = Vec::new();
    let mut min_h = f64::INFINITY;
    let mut trace_files = Vec::new();

    for &seed in &options.seeds {
        let result = run_exploration_mission(
            &loaded.scenario,
            &loaded.initial_belief,
            &loaded.settings,
            seed,
        );
        outcomes.record(result.outcome);
        total_steps += result.steps.iter().filter(|s| s.action.is_some()).count();
        total_interventions += result.interventions;
        if let Some(steps) = result.steps_to_success {
            success_steps.push(steps as f64);
        }
        min_h = min_h.min(result.min_h());

        let file_name = format!("trace_seed{seed}.jsonl");
        let path = options.out_dir.join(&file_name);
        write_trace(&path, &loaded.scenario, &result, options.emit_beliefs)?;
        trace_files.push(file_name);
    }

    let intervention_rate = (loaded.settings.algorithm == AlgorithmChoice::Filter && total_steps > 0)
        .then(|| total_interventions as f64 / total_steps as f64);
    let mean_steps_to_success = (!success_steps.is_empty())
        .then(|| success_steps.iter().sum::<f64>() / success_steps.len() as f64);

    let summary = RunSummary {
        scenario: options.scenario_path.display().to_string(),
        algorithm: loaded.settings.algorithm,
        seeds: options.seeds.clone(),
        outcomes,
        intervention_rate,
        mean_steps_to_success,
        min_barrier_value: min_h,
        trace_files,
    };
    let summary_path = options.out_dir.join("summary.json");
    fs::write(&summary_path, serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

pub struct VerifyOptions {
    pub trace_path: PathBuf,
    /// Linear gain slope; required unless a scenario file provides it.
    pub alpha0: Option<f64>,
    pub scenario_path: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub records: usize,
    pub checked_pairs: usize,
    pub violations: usize,
    /// `t` of the first record whose committed pair violates the condition.
    pub first_violation: Option<usize>,
    /// Worst (most negative) recomputed margin.
    pub min_margin: Option<f64>,
    /// Largest absolute difference between stored and recomputed margins.
    pub max_margin_mismatch: f64,
    pub margins: Vec<(usize, f64)>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.violations == 0
    }
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::MalformedTrace(format!("{}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::MalformedTrace(format!("line {}: {e}", lineno + 1)))?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(CliError::MalformedTrace(format!(
            "{}: no records",
            path.display()
        )));
    }
    Ok(records)
}

pub fn cmd_verify(options: &VerifyOptions) -> Result<VerifyReport, CliError> {
    let records = read_trace(&options.trace_path)?;

    let scenario = match &options.scenario_path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::InvalidScenario(format!("{}: {e}", path.display())))?;
            let (_, scenario, _) = scenario_from_json_str(&text)
                .map_err(|e| CliError::InvalidScenario(e.to_string()))?;
            Some(scenario)
        }
        None => None,
    };
    let alpha0 = options
        .alpha0
        .or_else(|| scenario.as_ref().map(|s| s.alpha0))
        .ok_or_else(|| CliError::InvalidArgs("provide --alpha0 or --scenario".into()))?;
    let kappa = KappaFn::constant(alpha0)
        .map_err(|e| CliError::InvalidArgs(e.to_string()))?;

    // With stored beliefs and a scenario, recompute the barrier values and
    // insist they match what the trace claims.
    if let Some(scenario) = &scenario {
        for record in &records {
            if let Some(beliefs) = &record.beliefs {
                let recomputed = segway_safety_barrier(beliefs, scenario);
                if (recomputed - record.h_value).abs() > 1e-9 {
                    return Err(CliError::MalformedTrace(format!(
                        "record t={}: stored h={} but beliefs give h={}",
                        record.t, record.h_value, recomputed
                    )));
                }
            }
        }
    }

    let mut checked_pairs = 0usize;
    let mut violations = 0usize;
    let mut first_violation = None;
    let mut min_margin: Option<f64> = None;
    let mut max_margin_mismatch = 0.0f64;
    let mut margins = Vec::new();

    for i in 1..records.len() {
        let Some(stored) = records[i].margin else { continue };
        let check = condition_from_values(&kappa, records[i - 1].h_value, records[i].h_value);
        checked_pairs += 1;
        margins.push((records[i].t, check.margin));
        min_margin = Some(min_margin.map_or(check.margin, |m: f64| m.min(check.margin)));
        max_margin_mismatch = max_margin_mismatch.max((stored - check.margin).abs());
        if !check.satisfied {
            violations += 1;
            if first_violation.is_none() {
                first_violation = Some(records[i].t);
            }
        }
    }

    Ok(VerifyReport {
        records: records.len(),
        checked_pairs,
        violations,
        first_violation,
        min_margin,
        max_margin_mismatch,
        margins,
    })
}

/// Trace-report form of a recorded h sequence (used by tests and `compare`).
pub fn report_from_h_values(alpha0: f64, h_values: &[f64]) -> TraceReport {
    let kappa = KappaFn::constant(alpha0).expect("alpha0 in range");
    TraceReport::from_values(&kappa, h_values.to_vec())
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

pub struct CompareOptions {
    pub scenario_path: PathBuf,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub emit_beliefs: bool,
    pub overrides: ScenarioOverrides,
}

#[derive(Debug, Serialize)]
pub struct CompareRow {
    pub seed: u64,
    pub nominal_outcome: MissionOutcome,
    pub nominal_violations: usize,
    pub nominal_min_h: f64,
    pub filtered_outcome: MissionOutcome,
    pub filtered_violations: usize,
    pub filtered_interventions: usize,
    pub first_intervention_step: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct CompareSummary {
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<CompareRow>,
    pub nominal_outcomes: OutcomeCounts,
    pub filtered_outcomes: OutcomeCounts,
    pub nominal_runs_with_violations: usize,
    pub filtered_runs_with_violations: usize,
    pub filtered_runs_with_interventions: usize,
}

pub fn cmd_compare(options: &CompareOptions) -> Result<CompareSummary, CliError> {
    if options.seeds.is_empty() {
        return Err(CliError::InvalidArgs("at least one seed is required".into()));
    }
    let loaded = load_scenario(&options.scenario_path, &options.overrides)?;
    fs::create_dir_all(&options.out_dir)?;

    let mut rows = Vec::new();
    let mut nominal_outcomes = OutcomeCounts::default();
    let mut filtered_outcomes = OutcomeCounts::default();
    let mut csv = String::from("run,seed,t,h_value\n");

    for &seed in &options.seeds {
        let nominal_settings = MissionSettings {
            algorithm: AlgorithmChoice::Nominal,
            ..loaded.settings
        };
        let filter_settings = MissionSettings {
            algorithm: AlgorithmChoice::Filter,
            ..loaded.settings
        };
        let nominal =
            run_exploration_mission(&loaded.scenario, &loaded.initial_belief, &nominal_settings, seed);
        let filtered =
            run_exploration_mission(&loaded.scenario, &loaded.initial_belief, &filter_settings, seed);

        write_trace(
            &options.out_dir.join(format!("nominal_seed{seed}.jsonl")),
            &loaded.scenario,
            &nominal,
            options.emit_beliefs,
        )?;
        write_trace(
            &options.out_dir.join(format!("filtered_seed{seed}.jsonl")),
            &loaded.scenario,
            &filtered,
            options.emit_beliefs,
        )?;

        for (t, h) in nominal.h_values.iter().enumerate() {
            csv.push_str(&format!("nominal,{seed},{t},{h}\n"));
        }
        for (t, h) in filtered.h_values.iter().enumerate() {
            csv.push_str(&format!("filtered,{seed},{t},{h}\n"));
        }

        let nominal_report = report_from_h_values(loaded.scenario.alpha0, &nominal.h_values);
        let filtered_report = report_from_h_values(loaded.scenario.alpha0, &filtered.h_values);
        nominal_outcomes.record(nominal.outcome);
        filtered_outcomes.record(filtered.outcome);
        rows.push(CompareRow {
            seed,
            nominal_outcome: nominal.outcome,
            nominal_violations: nominal_report.violation_count(),
            nominal_min_h: nominal.min_h(),
            filtered_outcome: filtered.outcome,
            filtered_violations: filtered_report.violation_count(),
            filtered_interventions: filtered.interventions,
            first_intervention_step: filtered
                .steps
                .iter()
                .find(|s| s.intervened)
                .map(|s| s.t),
        });
    }

    fs::write(options.out_dir.join("compare_h.csv"), csv)?;

    let summary = CompareSummary {
        scenario: options.scenario_path.display().to_string(),
        seeds: options.seeds.clone(),
        nominal_runs_with_violations: rows.iter().filter(|r| r.nominal_violations > 0).count(),
        filtered_runs_with_violations: rows.iter().filter(|r| r.filtered_violations > 0).count(),
        filtered_runs_with_interventions: rows
            .iter()
            .filter(|r| r.filtered_interventions > 0)
            .count(),
        nominal_outcomes,
        filtered_outcomes,
        rows,
    };
    fs::write(
        options.out_dir.join("compare_summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    Ok(summary)
}

/// Resolves the output directory: explicit flag, then the environment
/// variable, then `./traces`.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("traces"))
}

/// Seed list from either `--seeds N` (seeds `0..N`) or `--seed K`.
pub fn resolve_seeds(seeds: Option<u64>, seed: Option<u64>) -> Result<Vec<u64>, CliError> {
    match (seeds, seed) {
        (Some(n), None) => {
            if n == 0 {
                Err(CliError::InvalidArgs("--seeds must be at least 1".into()))
            } else {
                Ok((0..n).collect())
            }
        }
        (None, Some(k)) => Ok(vec![k]),
        (None, None) => Ok(vec![0]),
        (Some(_), Some(_)) => Err(CliError::InvalidArgs("--seeds conflicts with --seed".into())),
    }
}

/// Margins below this are condition violations, matching the planner.
pub fn violation_cutoff() -> f64 {
    -MARGIN_TOLERANCE
}
