//! `tlsbath`: simulate, fit and map qubit lifetimes in a TLS bath.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;
mod quantity;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{CliError, Context, Format};
use config::{ConfigError, ModelChoice, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "tlsbath", version, about = "Qubit relaxation in a bath of two-level systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML, or JSON with a .json extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent cells and traces.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decay traces from the configured bath (after the burn sequence, if any).
    Simulate,
    /// Hole-burning saturation curve, spectrum and relaxation traces.
    Holeburn,
    /// Fit multi-exponential models to trace CSV files or directories.
    Fit {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Lifetime map over coupling and TLS lifetime.
    Map,
    /// Lifetime versus qubit frequency with a band edge.
    FreqModel,
    /// Check a config and print its normalized form.
    ValidateConfig,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Bi,
    Tri,
}

fn context(cli: &Cli) -> Result<Context, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None if matches!(cli.command, Command::Fit { .. }) => RunConfig::default(),
        None => return Err(ConfigError::new("", "--config is required for this command").into()),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.output));
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    Ok(Context { config, out, format })
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let ctx = context(cli)?;
    match &cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Holeburn => commands::holeburn(&ctx),
        Command::Fit { inputs, model } => {
            let model = model.map(|m| match m {
                ModelArg::Bi => ModelChoice::Bi,
                ModelArg::Tri => ModelChoice::Tri,
            });
            commands::fit(&ctx, inputs, model)
        }
        Command::Map => commands::map(&ctx),
        Command::FreqModel => commands::freq_model(&ctx),
        Command::ValidateConfig => commands::validate_config(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n.into());
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| run(&cli)),
        Err(e) => Err(CliError::Numeric(format!("cannot start worker pool: {e}"))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tlsbath: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
