use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wcu_core::ModelError;
use wcu_planner::pipeline::{run_pipeline, PipelineOptions};
use wcu_planner::{generate_network, report, UsageError};

#[derive(Parser)]
#[command(name = "wcu-planner", version, about = "Plan wireless charging unit deployments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a rows x cols grid network file.
    GenerateNetwork {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        out: PathBuf,
        /// Scenario whose `grid` section overrides generator defaults.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Run every planning stage and write artifacts to the output directory.
    Pipeline {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Recompute every stage even when cached artifacts match.
        #[arg(long)]
        force: bool,
        /// Write a per-step CSV trace of the base run.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Rebuild summary.txt and plots from existing artifacts.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenerateNetwork { rows, cols, out, scenario } => {
            generate_network(rows, cols, scenario.as_deref(), &out)
        }
        Command::Pipeline { network, scenario, out, seed, jobs, force, trace } => {
            let outcome = run_pipeline(&PipelineOptions { network, scenario, out, seed, jobs, force, trace })?;
            for s in &outcome.stages {
                log::info!("{:<10} {}", s.name, if s.reused { "reused" } else { "ran" });
            }
            print!("{}", outcome.summary);
            Ok(())
        }
        Command::Report { out } => {
            print!("{}", report::write_report(&out)?);
            Ok(())
        }
    }
}

fn is_usage(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<UsageError>() || matches!(e.downcast_ref::<ModelError>(), Some(ModelError::Argument(_)))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WCU_PLANNER_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_usage(&err) { 2 } else { 1 })
        }
    }
}
