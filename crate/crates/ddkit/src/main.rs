use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddkit::config::ExperimentConfig;
use ddkit::error::{CliError, CliResult};
use ddkit::experiment::{cmd_aht, cmd_estimate, cmd_figure, cmd_run, RunOptions};
use ddkit::presets::{figure1, figure2, Overrides};

#[derive(Parser)]
#[command(name = "ddkit", version = env!("DDKIT_BUILD_ID"), about = "Dynamical decoupling simulator for spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run the figure presets on a smaller chain.
    #[arg(long, global = true, value_name = "N")]
    reduced: Option<usize>,
    /// Write each protocol's first-realization schedule next to its CSV.
    #[arg(long, global = true)]
    dump_schedule: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by --config.
    Run,
    /// Periodic vs random decoupling on the nested group.
    Figure1 {
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Deterministic vs random decoupling on the collective group.
    Figure2 {
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Average-Hamiltonian report for the protocols in --config.
    Aht,
    /// Predicted steps, memory and runtime for --config.
    Estimate {
        /// Skip the timing micro-run.
        #[arg(long)]
        no_calibrate: bool,
    },
}

fn load(cli: &Cli) -> CliResult<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation(vec!["--config: required for this command".into()]))?;
    ExperimentConfig::load(path)
}

fn run(cli: &Cli) -> CliResult<()> {
    let opts = RunOptions {
        out: cli.out.clone(),
        workers: cli.workers,
        seed: cli.seed,
        dump_schedule: cli.dump_schedule,
    };
    let overrides = |horizon: &Option<f64>, realizations: &Option<usize>| Overrides {
        reduced: cli.reduced,
        seed: cli.seed,
        horizon: *horizon,
        realizations: *realizations,
    };
    match &cli.command {
        Command::Run => print!("{}", cmd_run(&load(cli)?, &opts)?.summary),
        Command::Figure1 { horizon, realizations } => {
            for r in cmd_figure("figure1", &figure1(&overrides(horizon, realizations)), &opts)? {
                print!("{}", r.summary);
            }
        }
        Command::Figure2 { horizon, realizations } => {
            for r in cmd_figure("figure2", &figure2(&overrides(horizon, realizations)), &opts)? {
                print!("{}", r.summary);
            }
        }
        Command::Aht => print!("{}", cmd_aht(&load(cli)?)?),
        Command::Estimate { no_calibrate } => print!("{}", cmd_estimate(&load(cli)?, cli.workers, !no_calibrate)?.report()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
