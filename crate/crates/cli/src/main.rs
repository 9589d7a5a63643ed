use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hotspot_ipp::{compare, runner};

/// Budgeted hotspot-identification experiments: deterministic batch
/// runs from JSON configs, plus summary comparison.
#[derive(Parser)]
#[command(name = "hotspot-ipp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (seed x strategy) cell of an experiment config.
    Run {
        /// Path to the experiment JSON.
        config: PathBuf,
        /// Replace the config's seed list with 0..N.
        #[arg(long, value_name = "N")]
        seeds: Option<usize>,
        /// Write artifacts here instead of the config's output_dir.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Print the resolved plan and exit without running.
        #[arg(long)]
        dry_run: bool,
    },
    /// Merge two or more run summaries into a side-by-side table.
    Compare {
        /// Paths to `summary.csv` files written by `run`.
        #[arg(required = true, num_args = 1..)]
        summaries: Vec<PathBuf>,
        /// Where to write the merged CSV.
        #[arg(long, value_name = "PATH", default_value = "comparison.csv")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seeds,
            out,
            dry_run,
        } => runner::run(
            &config,
            &runner::RunOptions {
                seeds,
                out,
                dry_run,
            },
        ),
        Command::Compare { summaries, out } => compare::compare(&summaries, &out).map(|table| {
            print!("{table}");
            eprintln!("wrote {}", out.display());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
