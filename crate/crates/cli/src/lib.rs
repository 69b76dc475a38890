//! Command-line front end for the feedback simulator: strict JSON
//! configs in, CSV tables out, with master-equation, trajectory,
//! collision-oracle, and cross-engine comparison modes.

pub mod config;
pub mod engines;
pub mod output;

use std::fs;
use std::path::PathBuf;

pub use config::{parse_config, CliError, Engine, Overrides, ResolvedRun, RunConfig};
pub use engines::{dispatch, EngineOutcome};

/// Flags shared by every subcommand.
#[derive(Clone, Debug)]
pub struct CliArgs {
    pub config: PathBuf,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub ntraj: Option<usize>,
    pub quiet: bool,
}

/// Full run for one subcommand; returns the process exit code.
/// 0 = success/pass, 1 = comparison fail, 2 = config error, 3 = numerical
/// invariant breach. The output file is written only after the engine
/// finishes, so failed runs leave nothing behind.
pub fn run_cli(engine: Engine, args: &CliArgs) -> i32 {
    match try_run(engine, args) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{err}");
            err.exit_code()
        }
    }
}

fn try_run(engine: Engine, args: &CliArgs) -> Result<i32, CliError> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        CliError::Config(vec![format!("cannot read config {}: {e}", args.config.display())])
    })?;
    let parsed = parse_config(&text)?;
    let overrides = Overrides {
        output: args.output.clone(),
        seed: args.seed,
        ntraj: args.ntraj,
    };
    let run = config::resolve(engine, parsed, &overrides)?;
    if !args.quiet {
        eprintln!("effective config: {}", run.effective_config());
    }

    let outcome = dispatch(&run)?;
    output::write_table(&run.output, &outcome.table).map_err(|e| {
        CliError::Config(vec![format!("cannot write output {}: {e}", run.output.display())])
    })?;
    for line in &outcome.summary {
        eprintln!("{line}");
    }
    Ok(if outcome.pass { 0 } else { 1 })
}
