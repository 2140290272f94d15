mod commands;
mod config;
mod error;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use commands::Command;
use config::{merge, EngineKind, RunConfig};
use error::CliError;

/// Salpeter particle in a one-dimensional infinite well.
#[derive(Debug, Parser)]
#[command(name = "salpeter", version)]
struct Cli {
    /// JSON run configuration; overlays the preset when both are given.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Built-in workload (fig1, fig2a, fig2b, fig2c, fig3, fig4a, fig4b, fig5a, fig5b).
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Overrides `engine.kind`.
    #[arg(long, global = true, value_enum)]
    engine: Option<EngineKind>,

    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut value = serde_json::to_value(RunConfig::default())
        .map_err(|e| CliError::Validation(e.to_string()))?;
    if let Some(name) = &cli.preset {
        let preset = presets::lookup(name).ok_or_else(|| {
            CliError::validation(format!(
                "unknown preset {name:?}; known: {}",
                presets::NAMES.join(", ")
            ))
        })?;
        merge(&mut value, preset);
    }
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let patch: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        merge(&mut value, patch);
    }
    let mut config = RunConfig::from_value(value)?;
    if let Some(engine) = cli.engine {
        config.engine.kind = engine;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::validation("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation(e.to_string()))?;
    }
    let config = load(cli)?;
    commands::run(cli.command, &config, &cli.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", cli.out.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("salpeter: {e}");
            e.exit_code()
        }
    }
}
