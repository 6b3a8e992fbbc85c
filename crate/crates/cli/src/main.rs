//! `nlgrad`: run nonlocal-gradient experiments from TOML configs.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 numerical
//! failure (an `error.json` is written to the output directory).

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlgrad::kernels::{make_kernel, Family};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<nlgrad::Error> for CliError {
    fn from(e: nlgrad::Error) -> Self {
        use nlgrad::Error as E;
        match e {
            E::NormalizationFailure(_) | E::ZeroProfile(_) | E::QuadratureFailure(_) | E::SingularSymbol { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "nlgrad", version, about = "Nonlocal gradients with scalable horizon")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file
    Run {
        config: PathBuf,
        /// overrides `output.directory`
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Check a config file and print derived kernel quantities without running
    Validate { config: PathBuf },
    /// List the kernel families and their config keys
    ListKernels,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("NLGRAD_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("NLGRAD_THREADS = {v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}

#[derive(Serialize)]
struct ValidateReport<'a> {
    version: &'static str,
    ok: bool,
    experiment: &'static str,
    sigma: f64,
    gamma: f64,
    epsilon: Option<f64>,
    analytic_s_inf: Option<f64>,
    warnings: &'a [String],
    config: &'a config::RunConfig,
}

fn validate(path: &PathBuf) -> Result<(), CliError> {
    let r = config::resolve(config::load(path)?)?;
    let summary = r.kernel.summary();
    let report = ValidateReport {
        version: run::VERSION,
        ok: true,
        experiment: r.config.experiment.name(),
        sigma: summary.sigma,
        gamma: summary.gamma,
        epsilon: summary.epsilon,
        analytic_s_inf: r.kernel.analytic_s_inf(),
        warnings: r.kernel.warnings(),
        config: &r.config,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("serializes"));
    Ok(())
}

fn run_config(path: &PathBuf, output_dir: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = config::load(path)?;
    let resolved = config::resolve(cfg)?;
    let dir = run::output_dir(&resolved.config, output_dir.as_deref());
    match run::execute(&resolved, &dir) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Err(e) => {
            if matches!(e, CliError::Numerical(_)) {
                run::write_error(&dir, &resolved.config, &e);
            }
            Err(e)
        }
    }
}

fn list_kernels() {
    let keys = |f: Family| match f {
        Family::TruncatedFractional => "s, dim, cutoff",
        Family::LogCorrected => "s, kappa (+1 or -1), dim, cutoff",
        Family::VariableExponent => "s_fn (samples of s on [0, 1]), dim, cutoff",
        Family::Riesz => "s, dim",
        Family::Custom => "library only",
    };
    for f in Family::all() {
        let example = match f {
            Family::TruncatedFractional => make_kernel(nlgrad::kernels::KernelSpec::truncated_fractional(0.5, 1)).ok(),
            Family::Riesz => make_kernel(nlgrad::kernels::KernelSpec::riesz(0.5, 1)).ok(),
            _ => None,
        };
        let note = example.map(|k| format!(" (s = 0.5: sigma = {}, gamma = {})", k.sigma(), k.gamma())).unwrap_or_default();
        println!("{:<22} {}{note}", f.name(), keys(f));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Run { config, output_dir } => run_config(&config, output_dir),
        Command::Validate { config } => validate(&config),
        Command::ListKernels => {
            list_kernels();
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
