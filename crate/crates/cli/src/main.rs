use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qfeedback_cli::{run_cli, CliArgs, Engine};

/// Open-quantum-system simulator with photodetection feedback: dense
/// master-equation integration, quantum-jump trajectories, a time-bin
/// collision oracle, and cross-engine statistical comparison.
#[derive(Parser)]
#[command(name = "qfeedback", version, about)]
struct Cli {
    #[command(subcommand)]
    engine: EngineCommand,
}

#[derive(Subcommand)]
enum EngineCommand {
    /// Integrate the feedback master equation (dense superoperator, RK4).
    Master(RunFlags),
    /// Average a seeded ensemble of quantum-jump trajectories.
    Trajectory(RunFlags),
    /// Run the first-principles time-bin collision model.
    Oracle(RunFlags),
    /// Run all three engines and cross-check them statistically.
    Compare(RunFlags),
}

#[derive(Args)]
struct RunFlags {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path (overrides the config's `output`).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Trajectory-count override.
    #[arg(long)]
    ntraj: Option<usize>,
    /// Suppress the effective-config echo on stderr.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (engine, flags) = match cli.engine {
        EngineCommand::Master(f) => (Engine::Master, f),
        EngineCommand::Trajectory(f) => (Engine::Trajectory, f),
        EngineCommand::Oracle(f) => (Engine::Oracle, f),
        EngineCommand::Compare(f) => (Engine::Compare, f),
    };
    let args = CliArgs {
        config: flags.config,
        output: flags.output,
        seed: flags.seed,
        ntraj: flags.ntraj,
        quiet: flags.quiet,
    };
    ExitCode::from(u8::try_from(run_cli(engine, &args)).unwrap_or(3))
}
