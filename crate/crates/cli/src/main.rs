//! `mfpmp`: run simulations and first-order checks from JSON scenario files.

mod commands;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mfpmp", version, about = "Mean-field optimal control checks on particle clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the controlled cloud; writes trajectory.csv and summary.json.
    Simulate(Common),
    /// Compare declared gradients against the chain-rule difference oracle.
    Gradcheck(Common),
    /// Solve the state/costate system and check the maximum principle certificate.
    PmpCheck(Common),
    /// Check first-order needle expansions as the needles shrink.
    NeedleCheck(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "mfpmp-out")]
    out: PathBuf,
    /// Replace the time step; must divide the horizon. Cell tables are resampled at cell midpoints.
    #[arg(long)]
    dt_override: Option<f64>,
    /// Replace the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(c: &Common, f: fn(&scenario::Scenario, &scenario::Setup, &Path) -> anyhow::Result<bool>) -> anyhow::Result<bool> {
    let sc = scenario::load(&c.scenario)?;
    let base = c.scenario.parent().unwrap_or(Path::new("."));
    let setup = sc.setup(base, c.dt_override, c.seed)?;
    f(&sc, &setup, &c.out)
}

fn blow_up(e: &anyhow::Error) -> Option<usize> {
    e.chain().find_map(|c| match c.downcast_ref::<mfpmp::Error>() {
        Some(mfpmp::Error::NonFinite { step }) => Some(*step),
        _ => None,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => run(c, commands::simulate),
        Command::Gradcheck(c) => run(c, commands::gradcheck),
        Command::PmpCheck(c) => run(c, commands::pmp_check),
        Command::NeedleCheck(c) => run(c, commands::needle_check),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => match blow_up(&e) {
            Some(step) => {
                eprintln!("error: numerical blow-up at step {step}: {e:#}");
                ExitCode::from(3)
            }
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
