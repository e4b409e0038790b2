//! `weylkit`: run the Weyl-sum studies from the command line.

mod commands;
mod config;
mod error;
mod output;
mod svg;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::*;
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "weylkit",
    version,
    about = "Numerical studies of Weyl sums, mean values and kernel decompositions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate K_N(x, t) at one point
    SumEval(SumEvalArgs),
    /// Scan max_x |K_N(x, a/q)| / q^(1/d) over primes q and residues a
    #[command(name = "scan-c1")]
    ScanC1(ScanArgs),
    /// Compute S(N, p) by counting, quadrature or Monte Carlo
    MeanValue(MeanValueArgs),
    /// Fit log S(N, p) against log N
    ExponentFit(ExponentFitArgs),
    /// Sweep the comb transform and the K_2 coefficients
    KernelVerify(KernelVerifyArgs),
    /// Measure superlevel sets of |K_N|
    LevelSet(LevelSetArgs),
    /// Check λ|G_λ| ≤ ∫_G |K_N| = Σ f̂(n, n^d) by quadrature
    AuditDuality(AuditArgs),
    /// Recompute the config hash embedded in output files
    VerifyOutputs {
        /// Files or directories to check
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("parallelism must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(pool.install(f))
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::SumEval(a) => {
            let cfg: SumEvalConfig =
                resolve(SumEvalConfig::defaults(), a.common.config.as_deref(), &a)?;
            commands::sum_eval(&cfg, &a.common.out)
        }
        Command::ScanC1(a) => {
            let cfg: ScanRunConfig =
                resolve(ScanRunConfig::defaults(), a.common.config.as_deref(), &a)?;
            let threads = a
                .common
                .parallelism
                .unwrap_or_else(rayon::current_num_threads);
            if threads == 0 {
                return Err(CliError::Usage("parallelism must be at least 1".into()));
            }
            commands::scan_c1(&cfg, threads, &a.common.out)
        }
        Command::MeanValue(a) => {
            let cfg: MeanValueConfig =
                resolve(MeanValueConfig::defaults(), a.common.config.as_deref(), &a)?;
            with_pool(a.common.parallelism, || {
                commands::mean_value(&cfg, &a.common.out)
            })?
        }
        Command::ExponentFit(a) => {
            let cfg: ExponentFitConfig = resolve(
                ExponentFitConfig::defaults(),
                a.common.config.as_deref(),
                &a,
            )?;
            with_pool(a.common.parallelism, || {
                commands::exponent_fit_cmd(&cfg, &a.common.out)
            })?
        }
        Command::KernelVerify(a) => {
            let cfg: KernelVerifyConfig = resolve(
                KernelVerifyConfig::defaults(),
                a.common.config.as_deref(),
                &a,
            )?;
            with_pool(a.common.parallelism, || {
                commands::kernel_verify(&cfg, &a.common.out)
            })?
        }
        Command::LevelSet(a) => {
            let cfg: LevelSetConfig =
                resolve(LevelSetConfig::defaults(), a.common.config.as_deref(), &a)?;
            with_pool(a.common.parallelism, || {
                commands::level_set(&cfg, &a.common.out)
            })?
        }
        Command::AuditDuality(a) => {
            let cfg: AuditConfig =
                resolve(AuditConfig::defaults(), a.common.config.as_deref(), &a)?;
            with_pool(a.common.parallelism, || {
                commands::audit_duality(&cfg, &a.common.out)
            })?
        }
        Command::VerifyOutputs { paths } => commands::verify_outputs(&paths),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
