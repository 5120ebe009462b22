use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qnn_core::harness::{self, apply_text, ExperimentConfig, TaskKind};
use qnn_core::{Error, Result};

/// Train and evaluate an entanglement-witness quantum network.
#[derive(Parser)]
#[command(name = "qnn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a schedule; writes schedule.csv, report.json and pairs.json.
    Train(Common),
    /// Generalization curve on the P or M test family; writes test_curve.csv.
    Test(Common),
    /// Fourier coefficients against noise amplitude; writes coefficients.csv.
    SweepNoise(Common),
    /// R² against register size; writes r2.csv and qubit_coefficients.csv.
    SweepQubits(Common),
    /// Fourier fits of a schedule; writes fit.csv.
    Fit(Common),
}

#[derive(Args)]
struct Common {
    /// Config file of `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override applied after the config file, e.g. `--set learn.rate=0.002`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn configure(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)?;
        apply_text(&mut cfg, &text)?;
    }
    for o in &common.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(Error::config("--jobs", "must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (task, common) = match &cli.command {
        Command::Train(c) => (TaskKind::Train, c),
        Command::Test(c) => (TaskKind::Test, c),
        Command::SweepNoise(c) => (TaskKind::SweepNoise, c),
        Command::SweepQubits(c) => (TaskKind::SweepQubits, c),
        Command::Fit(c) => (TaskKind::Fit, c),
    };
    let result = configure(common).and_then(|cfg| harness::run(task, &cfg));
    match result {
        Ok(summary) => {
            println!("{}", summary.line);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qnn {}: {e}", task.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
