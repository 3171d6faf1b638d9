//! `aeroarm`: run the planning pipeline from scenario files.
//!
//! Exit codes: 0 success, 2 scenario or artifact error, 3 planning failure,
//! 4 infeasible parametrization, 5 simulation divergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aeroarm_cli::pipeline::{run_stages, PipelineError, RunConfig, Stage};
use aeroarm_cli::{compare_runs, load_scenario};

#[derive(Parser)]
#[command(name = "aeroarm", version, about = "Aerial-manipulator trajectory pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search an obstacle-free control-space path (writes path.csv).
    Plan(StageArgs),
    /// Time-parametrize the planned path (writes trajectory.csv).
    Parametrize(StageArgs),
    /// Execute the trajectory against the rigid-body model (writes
    /// sim_trace.csv).
    Simulate(StageArgs),
    /// Rewrite arm joints against the simulated attitude (writes
    /// compensated.csv and comp_meta.json).
    Compensate(StageArgs),
    /// Execute both runs and score them (writes errors.csv and
    /// report.json).
    Evaluate(StageArgs),
    /// Run every stage in order.
    All(StageArgs),
    /// Compare the error traces of two finished runs (JSON on stdout).
    Compare {
        /// Output directory of run A.
        run_a: PathBuf,
        /// Output directory of run B.
        run_b: PathBuf,
    },
}

#[derive(Args)]
struct StageArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; defaults to the scenario's output_dir or ./out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario's planner seed.
    #[arg(long)]
    seed_planner: Option<u64>,
    /// Overrides the scenario's disturbance seed.
    #[arg(long)]
    seed_disturbance: Option<u64>,
    /// Skip the joint rewrite; compensated.csv copies trajectory.csv.
    #[arg(long)]
    no_compensation: bool,
}

fn run_stage_command(args: &StageArgs, stages: &[Stage]) -> Result<(), PipelineError> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed_planner {
        scenario.planner_seed = seed;
    }
    if let Some(seed) = args.seed_disturbance {
        scenario.disturbance.seed = seed;
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let cfg = RunConfig {
        out_dir,
        no_compensation: args.no_compensation,
    };
    run_stages(&scenario, stages, &cfg)
}

fn dispatch(command: &Command) -> Result<(), PipelineError> {
    match command {
        Command::Plan(a) => run_stage_command(a, &[Stage::Plan]),
        Command::Parametrize(a) => run_stage_command(a, &[Stage::Parametrize]),
        Command::Simulate(a) => run_stage_command(a, &[Stage::Simulate]),
        Command::Compensate(a) => run_stage_command(a, &[Stage::Compensate]),
        Command::Evaluate(a) => run_stage_command(a, &[Stage::Evaluate]),
        Command::All(a) => run_stage_command(a, &Stage::ALL),
        Command::Compare { run_a, run_b } => {
            let report = compare_runs(run_a, run_b)?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| {
                PipelineError::Artifact {
                    path: run_a.clone(),
                    message: e.to_string(),
                }
            })?;
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
