mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use icageo_core::error::{Error, Result};
use icageo_core::ica::{ScoreKind, SolverConfig};
use icageo_core::oracle::DEFAULT_STEP;
use icageo_core::source::SourceSpec;

use commands::{Algorithm, DiagnoseConfig, SeparateConfig, SimulateConfig, VerifyConfig};
use config::ConfigFile;

/// Simulate linear mixtures, separate them, and inspect the
/// mutual-information / correlation / non-Gaussianity decomposition.
#[derive(Parser, Debug)]
#[command(name = "icageo", version)]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw sources, mix them with a random matrix, write X.csv, S.csv and model.json.
    Simulate(SimulateArgs),
    /// Estimate a demixing matrix; writes B.json, Y.csv, trace.csv and report.json.
    Separate(SeparateArgs),
    /// Estimate correlation, marginal non-Gaussianity and mutual information.
    Diagnose(DiagnoseArgs),
    /// Check the divergence identities on exact and quadrature references.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Comma-separated source families: gaussian, uniform, laplace, cosh, gg:<beta>.
    #[arg(long)]
    sources: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Upper bound on the mixing matrix condition number.
    #[arg(long)]
    max_condition: Option<f64>,
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SeparateArgs {
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// model.json from `simulate`; enables the Amari index in the report.
    #[arg(long)]
    model: Option<PathBuf>,
    /// relative_gradient or orthogonal.
    #[arg(long)]
    algorithm: Option<String>,
    /// tanh, cube, identity or adaptive.
    #[arg(long)]
    score: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Subtract channel means before separating.
    #[arg(long)]
    center: bool,
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    center: bool,
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// JSON file with `joints` and/or `densities`; the built-in suite runs without it.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Quadrature step.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
}

fn usage(sub: &str) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    match cmd.find_subcommand_mut(sub) {
        Some(s) => s.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

fn missing(sub: &str, flag: &str) -> Error {
    Error::InvalidConfig(format!("missing --{flag}\n\n{}", usage(sub)))
}

fn out_dir(file: &ConfigFile, flag: Option<PathBuf>) -> Result<PathBuf> {
    Ok(file.resolve(flag, "out_dir")?.unwrap_or_else(|| PathBuf::from(".")))
}

fn run(cli: Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Simulate(a) => {
            let text: String = file.resolve(a.sources, "sources")?.ok_or_else(|| missing("simulate", "sources"))?;
            let sources = text.split(',').map(SourceSpec::parse).collect::<Result<Vec<_>>>()?;
            let samples = file.resolve(a.samples, "samples")?.unwrap_or(commands::DEFAULT_SAMPLES);
            let cfg = SimulateConfig {
                sources,
                samples,
                seed: file.resolve_seed(a.seed)?,
                max_condition: file
                    .resolve(a.max_condition, "max_condition")?
                    .unwrap_or(commands::DEFAULT_MAX_CONDITION),
                out_dir: out_dir(&file, a.out_dir)?,
            };
            commands::simulate_cmd(&cfg)?;
        }
        Command::Separate(a) => {
            let defaults = SolverConfig::default();
            let algorithm: Algorithm = file
                .resolve(a.algorithm, "algorithm")?
                .map(|s: String| s.parse())
                .transpose()?
                .unwrap_or(Algorithm::RelativeGradient);
            let score: ScoreKind = file
                .resolve(a.score, "score")?
                .map(|s: String| s.parse())
                .transpose()?
                .unwrap_or(ScoreKind::Adaptive);
            let cfg = SeparateConfig {
                input: file.resolve(a.input, "input")?.ok_or_else(|| missing("separate", "input"))?,
                model: file.resolve(a.model, "model")?,
                algorithm,
                solver: SolverConfig {
                    step: file.resolve(a.step, "step")?.unwrap_or(defaults.step),
                    max_iter: file.resolve(a.max_iter, "max_iter")?.unwrap_or(defaults.max_iter),
                    tol: file.resolve(a.tol, "tol")?.unwrap_or(defaults.tol),
                    scores: vec![score],
                    seed: file.resolve_seed(a.seed)?,
                },
                center: file.resolve_flag(a.center, "center")?,
                out_dir: out_dir(&file, a.out_dir)?,
            };
            commands::separate_cmd(&cfg)?;
        }
        Command::Diagnose(a) => {
            let cfg = DiagnoseConfig {
                input: file.resolve(a.input, "input")?.ok_or_else(|| missing("diagnose", "input"))?,
                seed: file.resolve_seed(a.seed)?,
                center: file.resolve_flag(a.center, "center")?,
                out_dir: out_dir(&file, a.out_dir)?,
            };
            commands::diagnose_cmd(&cfg)?;
        }
        Command::Verify(a) => {
            let step = file.resolve(a.step, "step")?.unwrap_or(DEFAULT_STEP);
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidConfig(format!("step {step} is not positive")));
            }
            let cfg = VerifyConfig {
                spec: file.resolve(a.spec, "spec")?,
                step,
                out_dir: out_dir(&file, a.out_dir)?,
            };
            return commands::verify_cmd(&cfg);
        }
    }
    Ok(true)
}

/// 1 for algorithmic failures, 2 for bad input or configuration.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Diverged { .. } | Error::EstimatorFailure(_) | Error::InsufficientCoverage { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
