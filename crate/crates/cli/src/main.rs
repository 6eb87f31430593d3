use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use safe_mpomdp::gridworld::AlgorithmChoice;
use safe_mpomdp_cli::{
    cmd_compare, cmd_run, cmd_verify, resolve_out_dir, resolve_seeds, CliError, CompareOptions,
    RunOptions, ScenarioOverrides, VerifyOptions,
};

#[derive(Parser)]
#[command(
    name = "safe-mpomdp",
    about = "Run, verify, and compare barrier-filtered multi-robot exploration missions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded missions against a scenario and write JSONL traces.
    Run(RunArgs),
    /// Re-check a recorded trace against the barrier condition.
    Verify(VerifyArgs),
    /// Run the unchecked nominal policy and the filtered policy on the same seeds.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Greedy,
    PerAgent,
    Filter,
}

impl From<AlgorithmArg> for AlgorithmChoice {
    fn from(arg: AlgorithmArg) -> Self {
        match arg {
            AlgorithmArg::Greedy => AlgorithmChoice::Greedy,
            AlgorithmArg::PerAgent => AlgorithmChoice::PerAgent,
            AlgorithmArg::Filter => AlgorithmChoice::Filter,
        }
    }
}

#[derive(Args)]
struct CommonRunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Run seeds 0..N.
    #[arg(long, conflicts_with = "seed")]
    seeds: Option<u64>,
    /// Run a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario's horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Output directory (default: $SAFE_MPOMDP_OUT, then ./traces).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Store full factored beliefs in each committed trace record.
    #[arg(long)]
    emit_beliefs: bool,
    /// Override the safety threshold.
    #[arg(long)]
    theta: Option<f64>,
    /// Override the condition gain slope.
    #[arg(long)]
    alpha0: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Planning algorithm (default: the scenario's).
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSONL trace to check.
    #[arg(long)]
    trace: PathBuf,
    /// Gain slope used when the trace was produced.
    #[arg(long)]
    alpha0: Option<f64>,
    /// Scenario file to take alpha0 from (and to cross-check stored beliefs).
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonRunArgs,
}

fn overrides(common: &CommonRunArgs, algorithm: Option<AlgorithmArg>) -> ScenarioOverrides {
    ScenarioOverrides {
        algorithm: algorithm.map(AlgorithmChoice::from),
        horizon: common.horizon,
        theta: common.theta,
        alpha0: common.alpha0,
    }
}

fn timestamp_header() {
    println!("# generated at {}", chrono::Utc::now().to_rfc3339());
}

fn run(args: RunArgs) -> Result<ExitCode, CliError> {
    let options = RunOptions {
        scenario_path: args.common.scenario.clone(),
        seeds: resolve_seeds(args.common.seeds, args.common.seed)?,
        out_dir: resolve_out_dir(args.common.out.clone()),
        emit_beliefs: args.common.emit_beliefs,
        overrides: overrides(&args.common, args.algorithm),
    };
    let summary = cmd_run(&options)?;
    timestamp_header();
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> Result<ExitCode, CliError> {
    let report = cmd_verify(&VerifyOptions {
        trace_path: args.trace,
        alpha0: args.alpha0,
        scenario_path: args.scenario,
    })?;
    for (t, margin) in &report.margins {
        let mark = if *margin >= safe_mpomdp_cli::violation_cutoff() { "ok " } else { "VIOLATION" };
        println!("t={t:4}  margin={margin:+.6e}  {mark}");
    }
    println!(
        "records={} pairs={} violations={} first_violation={:?} min_margin={:?}",
        report.records, report.checked_pairs, report.violations, report.first_violation,
        report.min_margin
    );
    if report.is_clean() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn compare(args: CompareArgs) -> Result<ExitCode, CliError> {
    let options = CompareOptions {
        scenario_path: args.common.scenario.clone(),
        seeds: resolve_seeds(args.common.seeds, args.common.seed)?,
        out_dir: resolve_out_dir(args.common.out.clone()),
        emit_beliefs: args.common.emit_beliefs,
        overrides: overrides(&args.common, None),
    };
    let summary = cmd_compare(&options)?;
    timestamp_header();
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Verify(args) => verify(args),
        Command::Compare(args) => compare(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
