use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use neyman_bai::cli::{self, SpecOverrides, EXIT_USAGE};

#[derive(Parser)]
#[command(
    name = "neyman-bai",
    version,
    about = "Fixed-budget best-arm identification laboratory"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment described by a spec file and write CSV.
    Run {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses one per CPU.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        checkpoint_step: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Print allocation, variance and error exponents for one instance.
    Bounds {
        #[arg(long, allow_hyphen_values = true)]
        mu1: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu2: f64,
        #[arg(long)]
        sigma1: f64,
        #[arg(long)]
        sigma2: f64,
        /// Also print the oracle's exact error probability at this budget.
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Check the normalized AIPW score of one NA-AIPW run.
    Diagnose {
        #[arg(long, allow_hyphen_values = true)]
        mu1: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu2: f64,
        #[arg(long)]
        sigma1: f64,
        #[arg(long)]
        sigma2: f64,
        #[arg(long, default_value_t = 100_000)]
        rounds: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Length of the forced-alternation prefix (even, >= 2).
        #[arg(long, default_value_t = 2)]
        init_rounds: u64,
    },
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let outcome = match args.command {
        Command::Run {
            spec,
            out,
            seed,
            workers,
            checkpoint_step,
            trials,
            horizon,
        } => {
            let overrides = SpecOverrides {
                trials,
                horizon,
                checkpoint_step,
                seed,
            };
            cli::cmd_run(&spec, &out, &overrides, workers).map(|s| {
                eprintln!(
                    "wrote {} rows for {} cells to {}",
                    s.rows,
                    s.cells,
                    out.display()
                )
            })
        }
        Command::Bounds {
            mu1,
            mu2,
            sigma1,
            sigma2,
            horizon,
        } => cli::cmd_bounds(mu1, mu2, sigma1, sigma2, horizon).map(|r| print!("{r}")),
        Command::Diagnose {
            mu1,
            mu2,
            sigma1,
            sigma2,
            rounds,
            seed,
            init_rounds,
        } => {
            let args = cli::DiagnoseArgs {
                mu1,
                mu2,
                sigma1,
                sigma2,
                rounds,
                seed,
                init_rounds,
            };
            cli::cmd_diagnose(&args).map(|r| print!("{r}"))
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
