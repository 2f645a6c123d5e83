use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use zeno_cli::run::with_output;
use zeno_cli::{run_scenario, CliError, ScenarioConfig, Task};

/// Runs a Zeno scenario from a TOML config and writes CSV reports.
#[derive(Debug, Parser)]
#[command(name = "zeno", version)]
struct Args {
    /// Task to run; must match the config's `task`.
    #[arg(value_enum)]
    task: Task,
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_path`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the report on stdout.
    #[arg(long)]
    quiet: bool,
}

fn execute(args: &Args) -> Result<bool, CliError> {
    let mut config = ScenarioConfig::load(&args.config)?;
    if config.task != args.task {
        return Err(CliError::Config {
            field: "task".into(),
            message: format!("config runs `{}` but `{}` was requested", config.task.name(), args.task.name()),
        });
    }
    if let Some(seed) = args.seed {
        config.override_seed(seed);
    }
    let config = with_output(&config, args.out.as_deref());
    let report = run_scenario(&config)?;
    if !args.quiet {
        print!("{}", report.to_toml());
    }
    for w in &report.warnings {
        eprintln!("warning: {:?}: {}", w.kind, w.detail);
    }
    Ok(report.has_warnings())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
