//! `pirl`: solve, verify and inspect ℓp-regularized problems from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pirl_core::diagnostics::{estimate_rate_from_errors, RateClass, RateEstimate};
use pirl_core::io::{load_problem, read_errors_csv, read_vector, write_instance, write_result, write_trace};
use pirl_core::synth::sparse_least_squares;
use pirl_core::{diagnose, run};

#[derive(Parser)]
#[command(
    name = "pirl",
    version,
    about = "Proximal iteratively reweighted l1 solver with convergence diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver on a JSON configuration.
    Solve {
        config: PathBuf,
        /// Write the per-iteration trace as CSV.
        #[arg(short, long, value_name = "TRACE.csv")]
        output: Option<PathBuf>,
        /// Write the final iterate and status as JSON.
        #[arg(long, value_name = "RESULT.json")]
        result: Option<PathBuf>,
    },
    /// Solve, run every diagnostic and print the report; exits 1 if any check fails.
    Verify {
        config: PathBuf,
        /// Reference solution for the rate estimate (defaults to the final iterate).
        #[arg(long, value_name = "X.txt")]
        x_star: Option<PathBuf>,
    },
    /// Classify the convergence rate of a `k,e` error sequence.
    Rate {
        errors: PathBuf,
        /// Print the full estimate as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write a seeded synthetic sparse least-squares instance.
    Gen {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        sparsity: usize,
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// λ written into the generated config.
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        /// p written into the generated config.
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(short, long, value_name = "DIR")]
        output: PathBuf,
    },
}

/// Failures split by exit code: bad input is a usage error (2), a run that
/// completes but does not verify is 1.
enum Failure {
    Usage(anyhow::Error),
    Verification,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn solve(config: &Path, output: Option<&Path>, result_path: Option<&Path>) -> anyhow::Result<()> {
    let loaded = load_problem(config).with_context(|| format!("loading {}", config.display()))?;
    let result = run(&loaded.problem, &loaded.config, &loaded.x0)?;
    if let Some(path) = output {
        write_trace(&result.trace, path)?;
    }
    if let Some(path) = result_path {
        write_result(&result, path)?;
    }
    let last = result.trace.last();
    println!(
        "{:?} after {} iterations: F = {:?}, residual = {:e}, support size {}",
        result.status,
        result.iterations,
        last.objective,
        last.residual,
        last.support.len()
    );
    Ok(())
}

fn verify(config: &Path, x_star: Option<&Path>) -> Result<(), Failure> {
    let loaded = load_problem(config).with_context(|| format!("loading {}", config.display()))?;
    let x_star = x_star.map(read_vector).transpose().map_err(anyhow::Error::from)?;
    let result = run(&loaded.problem, &loaded.config, &loaded.x0).map_err(anyhow::Error::from)?;
    let report = diagnose(&loaded.problem, &loaded.config, &result, x_star.as_ref()).map_err(anyhow::Error::from)?;
    println!("{}", report.to_json());
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn describe(est: &RateEstimate) -> String {
    match (est.rate_class, est.rate_params) {
        (RateClass::Linear, Some(p)) => format!("Linear gamma={} (R²={:.6})", p.value, p.r_squared),
        (RateClass::Sublinear, Some(p)) => format!("Sublinear exponent={} (R²={:.6})", p.value, p.r_squared),
        (class, _) => format!("{class:?}"),
    }
}

fn rate(errors: &Path, json: bool) -> anyhow::Result<()> {
    let (ks, es) = read_errors_csv(errors)?;
    let est = estimate_rate_from_errors(&ks, &es, 0.0)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&est)?);
    } else {
        println!("{}", describe(&est));
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve { config, output, result } => solve(&config, output.as_deref(), result.as_deref())?,
        Command::Verify { config, x_star } => verify(&config, x_star.as_deref())?,
        Command::Rate { errors, json } => rate(&errors, json)?,
        Command::Gen {
            m,
            n,
            sparsity,
            noise,
            seed,
            lambda,
            p,
            output,
        } => {
            let inst = sparse_least_squares(m, n, sparsity, noise, seed).map_err(anyhow::Error::from)?;
            write_instance(&output, &inst, lambda, p, seed).map_err(anyhow::Error::from)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
