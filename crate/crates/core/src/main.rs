use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use jcm_coherence::cli::{self, CliError, Mode};

/// Coherence-freezing and multiphoton Jaynes-Cummings simulations driven by a
/// JSON config.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Strict JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Replace the mode given in the config.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

fn execute(args: &Args) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)?;
    let cfg = cli::parse_config_with_mode(&text, args.mode)?;
    // Buffered so a failed run leaves no partial artifact behind.
    let mut buf = Vec::new();
    cli::run(&cfg, &mut buf)?;
    match &args.output {
        Some(path) => fs::write(path, &buf)?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
