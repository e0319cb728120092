use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mibo_cli::commands::{self, TrainRequest};
use mibo_cli::config::RunConfig;
use mibo_cli::error::CliError;
use mibo_cli::pipeline::run_label;
use mibo_core::solver::{Method, Task};

#[derive(Parser, Debug)]
#[command(name = "mibo", version, about = "Joint subcarrier selection for Wi-Fi localization and sensing")]
struct Cli {
    /// TOML config with [scenario], [solver] and [run] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory of the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Single seed replacing the configured seed list (the dataset seed for `simulate`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Seeds trained concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,
    /// Overwrite an existing dataset or run directory.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    SpgMibo,
    Penalty,
    SingleTask,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Loc,
    Sen,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a CSI dataset (default output: ./data).
    Simulate,
    /// Train one run per seed (default output: ./runs/<method>).
    Train {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
        /// Dataset directory written by `simulate`.
        #[arg(long, default_value = "data")]
        dataset: PathBuf,
    },
    /// Compare completed runs on the same dataset.
    Compare {
        #[arg(required = true, num_args = 2..)]
        runs: Vec<PathBuf>,
    },
    /// Summarise a completed run and export its loss curves.
    Report { run: PathBuf },
}

fn load_config(path: Option<&Path>, seed: Option<u64>, override_seeds: bool) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::resolve(path)?;
    if let (Some(s), true) = (seed, override_seeds) {
        config.run.seeds = vec![s];
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.print_defaults {
        print!("{}", RunConfig::defaults_toml());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(anyhow::anyhow!("no command given; see --help").into());
    };
    match command {
        Command::Simulate => {
            let config = load_config(cli.config.as_deref(), cli.seed, false)?;
            let out = cli.out.unwrap_or_else(|| PathBuf::from("data"));
            let m = commands::simulate(&config, cli.seed, &out, cli.force)?;
            println!(
                "simulated {} samples, {} subcarriers, seed {}",
                m.num_samples,
                m.n_pairs * m.subcarriers,
                m.seed
            );
            println!("manifest: {}", out.join("manifest.json").display());
        }
        Command::Train { method, task, dataset } => {
            let config = load_config(cli.config.as_deref(), cli.seed, true)?;
            let method = match method {
                MethodArg::SpgMibo => Method::SpgMibo,
                MethodArg::Penalty => Method::Penalty,
                MethodArg::SingleTask => Method::SingleTask,
            };
            let task = task.map(|t| match t {
                TaskArg::Loc => Task::Localization,
                TaskArg::Sen => Task::Sensing,
            });
            let out = cli.out.unwrap_or_else(|| Path::new("runs").join(run_label(method, task)));
            let req = TrainRequest { method, task, dataset: &dataset, out: &out, force: cli.force, jobs: cli.jobs };
            let report = commands::train(&config, &req)?;
            print!("{}", commands::render_run(&report));
            println!("report: {}", out.join("report.json").display());
        }
        Command::Compare { runs } => {
            let comparison = commands::compare(&runs)?;
            print!("{}", commands::render_comparison(&comparison));
            if let Some(out) = cli.out {
                commands::write_comparison(&comparison, &out)?;
                println!("comparison: {}", out.join("comparison.json").display());
            }
        }
        Command::Report { run } => {
            let out = cli.out.unwrap_or_else(|| run.clone());
            let (report, seeds) = commands::report(&run, &out)?;
            print!("{}", commands::render_report(&report, &seeds));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
