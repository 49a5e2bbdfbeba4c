use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tgv_core::cli::{self, AnalyzeOptions, CliError};

#[derive(Parser)]
#[command(
    name = "tgv",
    version,
    about = "Taylor-Green vortex DNS with derivative-ratio analysis"
)]
struct Args {
    /// Suppress progress messages.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver from a key = value config file.
    Simulate { config: PathBuf },
    /// Fit the ratio exponents in a diagnostics CSV and write tables and plots.
    Analyze {
        csv: PathBuf,
        /// Use this T* instead of the detected enstrophy peak.
        #[arg(long)]
        tstar: Option<f64>,
        /// Smallest T* - t entering the fits (default: dt of the run).
        #[arg(long = "beta-min")]
        beta_min: Option<f64>,
        /// Comma-separated orders to fit (default: all recorded).
        #[arg(long, value_delimiter = ',')]
        kset: Option<Vec<u32>>,
        /// Output directory (default: next to the CSV).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fit with a constant term.
        #[arg(long)]
        intercept: bool,
    },
    /// Continue a run from its checkpoint.
    Resume {
        checkpoint: PathBuf,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
}

fn run(args: Args) -> Result<(), CliError> {
    match args.command {
        Command::Simulate { config } => {
            let out = cli::simulate(&config, args.quiet)?;
            println!(
                "simulate: {} samples, t = {} (step {}), output in {}",
                out.samples_written,
                out.t,
                out.step_index,
                out.dir.display()
            );
        }
        Command::Analyze {
            csv,
            tstar,
            beta_min,
            kset,
            out,
            intercept,
        } => {
            let opts = AnalyzeOptions {
                t_star: tstar,
                beta_min,
                k_set: kset,
                out_dir: out,
                intercept,
            };
            let res = cli::analyze(&csv, &opts)?;
            print!("{}", res.summary);
            if let Err(msg) = res.report.alpha {
                return Err(CliError {
                    code: cli::EXIT_NUMERICAL,
                    error: tgv_core::Error::Analysis(format!("exponent fit failed: {msg}")),
                });
            }
        }
        Command::Resume { checkpoint, t_end } => {
            let out = cli::resume(&checkpoint, t_end, args.quiet)?;
            if out.no_op {
                println!("resume: nothing to do at t = {}", out.t);
            } else {
                println!(
                    "resume: {} new samples, t = {} (step {})",
                    out.samples_written, out.t, out.step_index
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
