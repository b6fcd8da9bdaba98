use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sfl_cli::config::Kind;
use sfl_cli::{run_scenario, RunOptions};

/// Experiment runner for the one-dimensional singular divergence problem.
#[derive(Parser)]
#[command(name = "sfl", version, about)]
struct Args {
    /// Scenario kind; must match the `kind` declared in the config file.
    kind: Kind,
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: current directory, or $SFL_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the grid cell count (power of two between 2^5 and 2^16).
    #[arg(long)]
    grid_n: Option<usize>,
    /// Suppress progress lines.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let out_dir = args
        .out
        .or_else(|| std::env::var_os("SFL_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let opts = RunOptions {
        out_dir,
        grid_n: args.grid_n,
        quiet: args.quiet,
    };
    match run_scenario(args.kind, &args.config, &opts) {
        Ok(summary) => {
            if !args.quiet {
                println!("wrote {}", summary.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sfl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
