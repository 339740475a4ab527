use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lambda_holonomy::propagator::Method;
use lambda_holonomy::scenario::{self, RunSettings, ScenarioConfig, Table};

#[derive(Parser)]
#[command(
    name = "lambda-holonomy",
    version,
    about = "Geometric phases of the large-detuned Lambda system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Scenario file of `key = value` lines; defaults apply to absent keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Ordered-product steps for holonomies.
    #[arg(long, global = true, default_value_t = 10_000)]
    steps: usize,
    /// Accuracy requested from the three-level propagator.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tolerance: f64,
    /// Three-level integrator: magnus4 or rk4.
    #[arg(long, global = true, default_value = "magnus4")]
    method: Method,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Eigenvalues and mixing angle.
    Spectrum,
    /// Connection components over the grid.
    Connection,
    /// Curvature map over the grid.
    Curvature,
    /// Holonomy around the configured loop.
    Holonomy,
    /// Exact propagation compared with the subspace formula.
    Evolve,
    /// Diagnostics across the detuning sweep.
    Sweep,
    /// Run the claims suite; exits nonzero if any claim fails.
    Claims,
}

fn load_config(path: Option<&PathBuf>) -> Result<ScenarioConfig> {
    match path {
        None => Ok(ScenarioConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            ScenarioConfig::parse(&text).with_context(|| format!("invalid config {}", p.display()))
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let common = &cli.common;
    let cfg = load_config(common.config.as_ref())?;
    let settings = RunSettings {
        steps: common.steps,
        tolerance: common.tolerance,
        method: common.method,
        workers: common.workers,
    };
    settings.validate()?;

    let run: fn(&ScenarioConfig, &RunSettings) -> lambda_holonomy::Result<Table> = match cli.command
    {
        Command::Spectrum => scenario::run_spectrum,
        Command::Connection => scenario::run_connection,
        Command::Curvature => scenario::run_curvature_map,
        Command::Holonomy => scenario::run_holonomy,
        Command::Evolve => scenario::run_evolve,
        Command::Sweep => scenario::run_sweep,
        Command::Claims => {
            let report = scenario::run_claims(&cfg, &settings)?;
            print!("{}", report.summary());
            if let Some(p) = &common.out {
                emit(Some(p), &report.table(&cfg, &settings).to_csv())?;
            }
            return Ok(if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            });
        }
    };
    let table = run(&cfg, &settings)?;
    emit(common.out.as_ref(), &table.to_csv())?;
    Ok(ExitCode::SUCCESS)
}
