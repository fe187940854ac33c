use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use selfsim_cli::{cmd_analyze, cmd_pde, cmd_profile, cmd_properties, RunConfig};

#[derive(Parser)]
#[command(
    name = "selfsim",
    version,
    about = "Self-similar profiles and PDE runs for u_t = u_xx - u^p"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `output_dir` from the configuration.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the profile equation and write profile.csv and profile.json.
    Profile(Common),
    /// Run the evolution problem and write one snapshot per requested time.
    Pde(Common),
    /// Compare snapshots with the profile in similarity variables.
    Analyze(Common),
    /// Run the property harness and write properties.json.
    Properties(Common),
}

fn load(common: &Common) -> selfsim::Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &common.output_dir {
        config.output_dir = dir.clone();
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Profile(c) => load(c).and_then(|cfg| cmd_profile(&cfg)),
        Command::Pde(c) => load(c).and_then(|cfg| cmd_pde(&cfg)),
        Command::Analyze(c) => load(c).and_then(|cfg| cmd_analyze(&cfg)),
        Command::Properties(c) => load(c).and_then(|cfg| cmd_properties(&cfg)),
    };
    match result {
        Ok(outcome) if outcome.passed => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("selfsim: one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("selfsim: error: {e}");
            ExitCode::from(2)
        }
    }
}
