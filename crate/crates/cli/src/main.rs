use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mlgibbs_cli::commands::{self, CSV_HEADER};
use mlgibbs_cli::diag::{run_suite, DEFAULT_DIAG_SEED};
use mlgibbs_cli::{seed_override, CliError, ExperimentConfig};
use mlgibbs::parallel::configure_threads;
use mlgibbs::Execution;

/// Multilevel Langevin Monte Carlo for log-concave Gibbs measures.
///
/// Exit codes: 0 ok, 1 diagnostic failed, 2 configuration error,
/// 3 infeasible calibration or numerical overflow, 4 --assert-eps violated,
/// 5 reference oracle failure.
#[derive(Parser)]
#[command(name = "mlgibbs", version)]
struct Cli {
    /// Worker threads for replicate fan-out (1 runs sequentially).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write the output to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the calibrated plan as JSON.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the replicated estimator and print one CSV row.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Fail with exit code 4 when rmse > epsilon * TOL.
        #[arg(long = "assert-eps", value_name = "TOL")]
        assert_eps: Option<f64>,
    },
    /// Run once per epsilon and fit the cost slope.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated epsilon values (at least three).
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
    },
    /// Run a named diagnostic suite.
    Diag {
        /// One of strong_error, confluence, moments, level_variance,
        /// penalization_bias, decreasing_penalty.
        #[arg(long)]
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = seed_override()? {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let execution = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be positive".into())),
        Some(1) => Execution::Sequential,
        Some(n) => {
            if !configure_threads(n) {
                log::warn!("could not size the thread pool to {n}; using the default pool");
            }
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let out = cli.out.as_deref();
    match cli.command {
        Command::Calibrate { config } => emit(&commands::calibrate(&load(&config)?)?, out),
        Command::Run { config, assert_eps } => {
            let cfg = load(&config)?;
            let outcome = commands::run(&cfg, execution)?;
            emit(&format!("{CSV_HEADER}\n{}\n", outcome.row), out)?;
            match assert_eps {
                Some(tol) => commands::check_epsilon(&outcome, cfg.epsilon, tol),
                None => Ok(()),
            }
        }
        Command::Sweep { config, epsilons } => {
            let cfg = load(&config)?;
            emit(&commands::sweep(&cfg, &epsilons, execution)?.csv, out)
        }
        Command::Diag { suite, seed } => {
            let seed = match seed_override()? {
                Some(s) => s,
                None => seed.unwrap_or(DEFAULT_DIAG_SEED),
            };
            let outcome = run_suite(&suite, seed, execution)?;
            emit(&outcome.report, out)?;
            if outcome.passed {
                Ok(())
            } else {
                Err(CliError::DiagnosticFailed(format!("suite {suite}")))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mlgibbs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
