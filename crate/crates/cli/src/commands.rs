use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use icageo_core::dataset::Dataset;
use icageo_core::error::{Error, Result};
use icageo_core::estimators::{score_table, DEFAULT_SCORE_BINS, MIN_SCORE_SAMPLES};
use icageo_core::eval::{amari_index, diagnose};
use icageo_core::gaussian::{correlation, sample_covariance};
use icageo_core::ica::{
    orthogonal_ica, relative_gradient_ica, stationarity_matrix, ScoreKind, SeparationResult, SolverConfig,
};
use icageo_core::linalg::off_diagonal_norm;
use icageo_core::model::{simulate, MixingModel, MixingModelFile};
use icageo_core::oracle::{builtin_suite, run_suite, IdentityCheck, SuiteSpec};
use icageo_core::rng::Rng;
use icageo_core::source::SourceSpec;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SAMPLES: usize = 20_000;
pub const DEFAULT_MAX_CONDITION: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    RelativeGradient,
    Orthogonal,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "relative_gradient" | "relative-gradient" => Ok(Algorithm::RelativeGradient),
            "orthogonal" => Ok(Algorithm::Orthogonal),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm '{other}' (expected relative_gradient or orthogonal)"
            ))),
        }
    }
}

pub struct SimulateConfig {
    pub sources: Vec<SourceSpec>,
    pub samples: usize,
    pub seed: u64,
    pub max_condition: f64,
    pub out_dir: PathBuf,
}

pub struct SeparateConfig {
    pub input: PathBuf,
    pub model: Option<PathBuf>,
    pub algorithm: Algorithm,
    pub solver: SolverConfig,
    pub center: bool,
    pub out_dir: PathBuf,
}

pub struct DiagnoseConfig {
    pub input: PathBuf,
    pub seed: u64,
    pub center: bool,
    pub out_dir: PathBuf,
}

pub struct VerifyConfig {
    pub spec: Option<PathBuf>,
    pub step: f64,
    pub out_dir: PathBuf,
}

/// `model.json`: the mixing model plus what is needed to regenerate it.
#[derive(Serialize, Deserialize)]
struct ModelRecord {
    #[serde(flatten)]
    model: MixingModelFile,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    samples: Option<usize>,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_dataset(dir: &Path, name: &str, data: &Dataset, prefix: &str) -> Result<()> {
    let mut w = create(dir, name)?;
    data.write_csv(&mut w, prefix)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path, center: bool) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::UnexpectedEof,
            format!("{} is empty", path.display()),
        )
        .into());
    }
    let data = Dataset::read_csv(text.as_bytes())?;
    Ok(if center { data.centered() } else { data })
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn simulate_cmd(cfg: &SimulateConfig) -> Result<()> {
    let gaussians = cfg.sources.iter().filter(|s| s.is_gaussian()).count();
    if gaussians == cfg.sources.len() {
        eprintln!("warning: Gaussian-only mixture is not blindly separable");
    } else if gaussians > 1 {
        eprintln!("warning: {gaussians} Gaussian sources; their mixture is not blindly separable");
    }
    let rng = Rng::new(cfg.seed);
    let model = MixingModel::random(cfg.sources.clone(), cfg.max_condition, &mut rng.child(0))?;
    let (x, s) = simulate(&model, cfg.samples, &rng.child(1))?;
    write_dataset(&cfg.out_dir, "X.csv", &x, "x")?;
    write_dataset(&cfg.out_dir, "S.csv", &s, "s")?;
    let record = ModelRecord {
        model: model.to_file(),
        seed: Some(cfg.seed),
        samples: Some(cfg.samples),
    };
    write_json(&cfg.out_dir, "model.json", &record)
}

#[derive(Serialize)]
struct SeparationReport {
    algorithm: Algorithm,
    scores: Vec<ScoreKind>,
    converged: bool,
    iterations: usize,
    /// `‖offdiag F‖_F` of the recovered outputs under the configured scores.
    stationarity_norm: f64,
    correlation: f64,
    objective_proxy: Option<f64>,
    final_step: f64,
    no_improvement: bool,
    seed: u64,
    n_samples: usize,
    n_channels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    amari_index: Option<f64>,
}

fn load_mixing(path: &Path) -> Result<DMatrix<f64>> {
    let record: ModelRecord = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(MixingModel::from_file(&record.model)?.mixing().clone())
}

pub fn separate_cmd(cfg: &SeparateConfig) -> Result<()> {
    let data = read_dataset(&cfg.input, cfg.center)?;
    let n = data.n_channels();
    let mixing = cfg.model.as_deref().map(load_mixing).transpose()?;
    if let Some(a) = &mixing {
        if a.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.nrows() });
        }
    }
    let result: SeparationResult = match cfg.algorithm {
        Algorithm::RelativeGradient => relative_gradient_ica(&data, &cfg.solver)?,
        Algorithm::Orthogonal => orthogonal_ica(&data, &cfg.solver)?,
    };
    if result.no_improvement {
        eprintln!("warning: outputs are indistinguishable from Gaussian; the rotation is arbitrary");
    }
    if !result.converged {
        eprintln!("warning: stopped after {} iterations without converging", result.iterations);
    }

    let mut scores = cfg.solver.score_models(n);
    for (i, model) in scores.iter_mut().enumerate() {
        model.refit(result.recovered.channel(i))?;
    }
    let stationarity_norm = off_diagonal_norm(&stationarity_matrix(&result.recovered, &scores)?);
    let amari = match &mixing {
        Some(a) => Some(amari_index(&(&result.demixing * a))?.value),
        None => None,
    };
    let report = SeparationReport {
        algorithm: cfg.algorithm,
        scores: scores.iter().map(|m| m.kind()).collect(),
        converged: result.converged,
        iterations: result.iterations,
        stationarity_norm,
        correlation: correlation(&sample_covariance(&result.recovered)?),
        objective_proxy: result.objective.last().copied(),
        final_step: result.final_step,
        no_improvement: result.no_improvement,
        seed: cfg.solver.seed,
        n_samples: data.n_samples(),
        n_channels: n,
        amari_index: amari,
    };

    #[derive(Serialize)]
    struct Demixing {
        demixing: Vec<Vec<f64>>,
    }
    write_json(&cfg.out_dir, "B.json", &Demixing { demixing: rows(&result.demixing) })?;
    write_dataset(&cfg.out_dir, "Y.csv", &result.recovered, "y")?;
    let mut trace = create(&cfg.out_dir, "trace.csv")?;
    match cfg.algorithm {
        Algorithm::RelativeGradient => writeln!(trace, "iteration,stationarity_norm")?,
        Algorithm::Orthogonal => writeln!(trace, "sweep,max_pair_gain")?,
    }
    for (k, v) in result.trajectory.iter().enumerate() {
        writeln!(trace, "{k},{v:?}")?;
    }
    trace.flush()?;
    write_json(&cfg.out_dir, "report.json", &report)?;

    println!(
        "{} iterations, converged {}, stationarity norm {:.3e}{}",
        result.iterations,
        result.converged,
        stationarity_norm,
        amari.map_or(String::new(), |a| format!(", Amari index {a:.4}"))
    );
    Ok(())
}

pub fn diagnose_cmd(cfg: &DiagnoseConfig) -> Result<()> {
    let data = read_dataset(&cfg.input, cfg.center)?;
    let report = diagnose(&data, cfg.seed)?;
    if report.mi.is_none() {
        eprintln!(
            "note: mutual information omitted ({} channels, {} samples)",
            data.n_channels(),
            data.n_samples()
        );
    }
    write_json(&cfg.out_dir, "report.json", &report)?;

    if data.n_samples() >= MIN_SCORE_SAMPLES {
        let mut w = create(&cfg.out_dir, "plotdata.csv")?;
        writeln!(w, "channel,s,density,score")?;
        for (i, name) in data.names_or("x").iter().enumerate() {
            let table = score_table(data.channel(i), DEFAULT_SCORE_BINS)?;
            for ((s, d), psi) in table.nodes().zip(&table.density).zip(&table.score) {
                writeln!(w, "{name},{s:?},{d:?},{psi:?}")?;
            }
        }
        w.flush()?;
    } else {
        eprintln!("note: plotdata.csv needs at least {MIN_SCORE_SAMPLES} samples; skipped");
    }

    let g: f64 = report.negentropy_sum();
    println!(
        "correlation {:.4}, sum of marginal negentropies {g:.4}{}",
        report.correlation,
        report.mi.as_ref().map_or(String::new(), |m| format!(", mutual information {:.4}", m.value))
    );
    Ok(())
}

#[derive(Serialize)]
struct VerifySummary {
    total: usize,
    passed: usize,
    failed: Vec<String>,
    all_passed: bool,
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    checks: &'a [IdentityCheck],
    summary: VerifySummary,
}

/// Returns whether every identity held.
pub fn verify_cmd(cfg: &VerifyConfig) -> Result<bool> {
    let checks = match &cfg.spec {
        Some(path) => {
            let mut spec = SuiteSpec::from_json(&fs::read_to_string(path)?)?;
            spec.step.get_or_insert(cfg.step);
            run_suite(&spec)?
        }
        None => builtin_suite(cfg.step)?,
    };
    for c in &checks {
        println!(
            "{} {} (worst residual {:.3e}, threshold {:.0e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.report.worst_residual(),
            c.threshold
        );
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    let summary = VerifySummary {
        total: checks.len(),
        passed: checks.len() - failed.len(),
        all_passed: failed.is_empty(),
        failed,
    };
    println!("{}/{} identities hold", summary.passed, summary.total);
    let ok = summary.all_passed;
    write_json(&cfg.out_dir, "identities.json", &VerifyOutput { checks: &checks, summary })?;
    Ok(ok)
}
