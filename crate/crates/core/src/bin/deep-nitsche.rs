use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use deep_nitsche::benchmarks::{BenchmarkId, InterfaceProblem};
use deep_nitsche::config::ResolvedConfig;
use deep_nitsche::experiment::{self, VerifyOptions};
use deep_nitsche::Result;

#[derive(Parser)]
#[command(name = "deep-nitsche", version, about = "Deep unfitted Nitsche solver for elliptic interface problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a TOML experiment config and write history, checkpoints and grids.
    Run {
        config: PathBuf,
        /// Print every history row while training.
        #[arg(long)]
        verbose: bool,
    },
    /// Check benchmark data, geometry measures and stationarity of the exact solution.
    Verify {
        benchmark: BenchmarkId,
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long, requires = "beta2")]
        beta1: Option<f64>,
        #[arg(long, requires = "beta1")]
        beta2: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print analytic and Monte-Carlo measures of the subdomains and interface.
    Measure {
        benchmark: BenchmarkId,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        dimension: Option<usize>,
    },
    /// Relative L2 error of the checkpoint pair stored in a run directory.
    Eval {
        run_dir: PathBuf,
        benchmark: BenchmarkId,
        #[arg(long, requires = "beta2")]
        beta1: Option<f64>,
        #[arg(long, requires = "beta1")]
        beta2: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn betas(b1: Option<f64>, b2: Option<f64>) -> Option<(f64, f64)> {
    b1.zip(b2)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, verbose } => {
            let resolved = ResolvedConfig::load(&config)?;
            let out = resolved.output_path();
            let summary = experiment::run_experiment(&resolved, &out, &mut |row| {
                if verbose {
                    println!(
                        "epoch {:>7}  loss {:>14.6e}  error {:>8.3}%",
                        row.epoch, row.loss, row.rel_l2_error_pct
                    );
                }
            })?;
            println!(
                "{}: final relative L2 error {:.3}% -> {}",
                resolved.benchmark,
                summary.final_error_pct,
                summary.output_dir.display()
            );
            Ok(true)
        }
        Command::Verify {
            benchmark,
            dimension,
            beta1,
            beta2,
            seed,
        } => {
            let problem = experiment::default_problem(benchmark, dimension, betas(beta1, beta2))?;
            let options = VerifyOptions {
                seed,
                ..Default::default()
            };
            let summary = experiment::verify(&problem, &options)?;
            print!("{}", summary.render());
            let ok = summary.passed();
            println!("{}", if ok { "verify: PASS" } else { "verify: FAIL" });
            Ok(ok)
        }
        Command::Measure {
            benchmark,
            n,
            seed,
            dimension,
        } => {
            let problem = experiment::default_problem(benchmark, dimension, None)?;
            println!("{} with {n} samples (seed {seed})", problem.name());
            for line in experiment::measure_report(&problem, n, seed)? {
                println!("{line}");
            }
            Ok(true)
        }
        Command::Eval {
            run_dir,
            benchmark,
            beta1,
            beta2,
            n,
            seed,
        } => {
            let pair = experiment::load_pair(&run_dir)?;
            let stored = ResolvedConfig::load(&run_dir.join(experiment::RESOLVED_CONFIG))
                .ok()
                .filter(|c| c.benchmark == benchmark);
            let betas = betas(beta1, beta2).or(stored.map(|c| (c.beta1, c.beta2)));
            let problem = experiment::default_problem(benchmark, Some(pair.dim()), betas)?;
            let err = experiment::evaluate_run(&run_dir, &problem, n, seed)?;
            println!("{}: relative L2 error {err:.4}%", problem.name());
            Ok(true)
        }
    }
}
