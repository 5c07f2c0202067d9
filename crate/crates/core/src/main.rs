use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use finsler_lab::cli::{run, Command};

/// Experiments for the normalized infinity Laplacian on quasi-metric spaces.
#[derive(Parser)]
#[command(name = "finsler-lab", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV, JSON and SVG artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args.command, &args.config, &args.out, args.seed) {
        Ok(artifacts) => {
            for f in artifacts.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
