//! `htefuse` command line: fit, bootstrap, simulate and benchmark.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use htefuse::data::{load_dataset, write_dataset, Schema};
use htefuse::estimator::{fit, FitConfig, FitResult, Method};
use htefuse::inference::{bootstrap_se, BootstrapConfig, BootstrapResult, SeScaling};
use htefuse::nuisance::PropensityMode;
use htefuse::penalty::PenaltyFamily;
use htefuse::simulation::{
    calibrate_censoring, generate, run_study, CensoringDesign, ErrorDist, EstimatorSpec, Preset,
    SimulationConfig, StudyConfig,
};
use htefuse::tuning::TuningMethod;
use htefuse::Error;

#[derive(Parser, Debug)]
#[command(name = "htefuse", version, about = "Treatment effect heterogeneity from trial plus real-world survival data")]
struct Cli {
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, env = "HTEFUSE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one estimator to a CSV dataset.
    Fit(FitArgs),
    /// Fit, then add bootstrap standard errors and intervals.
    Bootstrap(BootstrapArgs),
    /// Write a synthetic dataset and its true coefficients.
    Simulate(SimulateArgs),
    /// Run a replicated simulation study.
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Rl,
    Oa,
    Gm0,
    Gm1,
    Meta,
    Gm01,
    Rct,
    Naive,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Rl => Method::Rl,
            MethodArg::Oa => Method::Oa,
            MethodArg::Gm0 => Method::Gm0,
            MethodArg::Gm1 => Method::Gm1,
            MethodArg::Meta => Method::Meta,
            MethodArg::Gm01 => Method::Gm01,
            MethodArg::Rct => Method::Rct,
            MethodArg::Naive => Method::Naive,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TuningArg {
    Cv,
    Bic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PenaltyArg {
    Mcp,
    Scad,
    Alasso,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ErrorArg {
    Normal,
    Logistic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScalingArg {
    Fpc,
    Raw,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    Table1,
    Table2,
    Table3,
    Table4,
    SuppLogistic,
    SuppCr60,
    SuppSignal1,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Table1 => Preset::Table1,
            PresetArg::Table2 => Preset::Table2,
            PresetArg::Table3 => Preset::Table3,
            PresetArg::Table4 => Preset::Table4,
            PresetArg::SuppLogistic => Preset::SuppLogistic,
            PresetArg::SuppCr60 => Preset::SuppCr60,
            PresetArg::SuppSignal1 => Preset::SuppSignal1,
        }
    }
}

/// Estimator settings shared by `fit`, `bootstrap` and `benchmark`.
#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "rl", env = "HTEFUSE_METHOD")]
    method: MethodArg,

    /// Shorthand for `--method rct`.
    #[arg(long)]
    rct_only: bool,

    #[arg(long, value_enum, default_value = "cv", env = "HTEFUSE_TUNING")]
    tuning: TuningArg,

    #[arg(long, value_enum, default_value = "mcp", env = "HTEFUSE_PENALTY")]
    penalty: PenaltyArg,

    /// Concavity of MCP or SCAD.
    #[arg(long, env = "HTEFUSE_GAMMA")]
    gamma: Option<f64>,

    /// Cross-validation folds for tuning.
    #[arg(long, default_value_t = 5, env = "HTEFUSE_FOLDS")]
    folds: usize,

    /// Cross-fitting folds for the nuisance models.
    #[arg(long, default_value_t = 2, env = "HTEFUSE_NUISANCE_FOLDS")]
    nuisance_folds: usize,

    /// Known treatment probabilities `e1,e0` for trial and real-world rows;
    /// either side may be left empty.
    #[arg(long, value_parser = parse_known, env = "HTEFUSE_KNOWN_PROPENSITY")]
    known_propensity: Option<(Option<f64>, Option<f64>)>,

    /// Also penalize the block intercepts.
    #[arg(long)]
    penalize_intercepts: bool,
}

impl ModelArgs {
    fn config(&self, seed: u64) -> Result<FitConfig, Error> {
        let mut cfg = FitConfig {
            method: if self.rct_only { Method::Rct } else { self.method.into() },
            tuning: match self.tuning {
                TuningArg::Cv => TuningMethod::Cv,
                TuningArg::Bic => TuningMethod::Bic,
            },
            cv_folds: self.folds,
            penalize_intercepts: self.penalize_intercepts,
            seed,
            ..FitConfig::default()
        };
        cfg.penalty.family = match self.penalty {
            PenaltyArg::Mcp => PenaltyFamily::Mcp,
            PenaltyArg::Scad => PenaltyFamily::Scad,
            PenaltyArg::Alasso => PenaltyFamily::AdaptiveLasso,
        };
        match (self.gamma, self.penalty) {
            (Some(g), _) => cfg.penalty.gamma = g,
            (None, PenaltyArg::Scad) => cfg.penalty.gamma = 3.7,
            _ => {}
        }
        cfg.penalty.validate()?;
        cfg.nuisance.k_folds = self.nuisance_folds;
        if let Some((e1, e0)) = self.known_propensity {
            cfg.nuisance.known_e1 = e1;
            cfg.nuisance.known_e0 = e0;
            if e1.is_some() && e0.is_some() {
                cfg.nuisance.propensity_mode = PropensityMode::KnownConstant;
            }
        }
        cfg.nuisance.validate()?;
        Ok(cfg)
    }
}

fn parse_known(s: &str) -> Result<(Option<f64>, Option<f64>), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `e1,e0`, got `{s}`"))?;
    let side = |t: &str| -> Result<Option<f64>, String> {
        let t = t.trim();
        if t.is_empty() {
            return Ok(None);
        }
        let v: f64 = t.parse().map_err(|_| format!("`{t}` is not a number"))?;
        if v > 0.0 && v < 1.0 {
            Ok(Some(v))
        } else {
            Err(format!("propensity {v} must lie in (0, 1)"))
        }
    };
    Ok((side(a)?, side(b)?))
}

/// Column names of the input file.
#[derive(Args, Debug, Clone)]
struct InputArgs {
    #[arg(long, short, env = "HTEFUSE_INPUT")]
    input: PathBuf,

    #[arg(long, default_value = "time")]
    time_col: String,

    #[arg(long, default_value = "status")]
    status_col: String,

    #[arg(long, default_value = "treat")]
    treat_col: String,

    #[arg(long, default_value = "source")]
    source_col: String,

    /// Comma-separated covariate columns; default `x1, x2, ...`.
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
}

impl InputArgs {
    fn schema(&self) -> Schema {
        Schema {
            time: self.time_col.clone(),
            status: self.status_col.clone(),
            treatment: self.treat_col.clone(),
            source: self.source_col.clone(),
            covariates: self.covariates.clone(),
        }
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,

    #[command(flatten)]
    model: ModelArgs,

    #[arg(long, default_value_t = 0, env = "HTEFUSE_SEED")]
    seed: u64,

    /// Output file; standard output when absent.
    #[arg(long, short, env = "HTEFUSE_OUTPUT")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BootstrapArgs {
    #[command(flatten)]
    fit: FitArgs,

    /// Bootstrap replicates.
    #[arg(long = "bootstrap", short = 'B', default_value_t = 500, env = "HTEFUSE_BOOTSTRAP")]
    replicates: usize,

    #[arg(long, default_value_t = 0.95, env = "HTEFUSE_LEVEL")]
    level: f64,

    /// Re-tune λ and nuisance levels in every replicate.
    #[arg(long)]
    retune: bool,

    #[arg(long, value_enum, default_value = "fpc")]
    se_scaling: ScalingArg,
}

/// Data-generating settings shared by `simulate` and `benchmark`.
#[derive(Args, Debug, Clone)]
struct SimArgs {
    #[arg(long, env = "HTEFUSE_P")]
    p: Option<usize>,

    #[arg(long, env = "HTEFUSE_N")]
    n: Option<usize>,

    /// Target censoring rate.
    #[arg(long, env = "HTEFUSE_CR")]
    cr: Option<f64>,

    #[arg(long, env = "HTEFUSE_SIGNAL")]
    signal: Option<f64>,

    /// Hidden confounding on (`--confounded`) or off (`--confounded false`).
    #[arg(long, num_args = 0..=1, default_missing_value = "true", env = "HTEFUSE_CONFOUNDED")]
    confounded: Option<bool>,

    #[arg(long, value_enum, env = "HTEFUSE_ERROR_DIST")]
    error_dist: Option<ErrorArg>,

    /// Fixed width of the log-censoring window instead of anchoring its
    /// upper end in the tail.
    #[arg(long)]
    censor_width: Option<f64>,
}

impl SimArgs {
    fn apply(&self, base: SimulationConfig) -> Result<SimulationConfig, Error> {
        let mut c = base;
        if let Some(p) = self.p {
            c.p = p;
        }
        if let Some(n) = self.n {
            c.n = n;
        }
        if let Some(cr) = self.cr {
            c.target_cr = cr;
        }
        if let Some(s) = self.signal {
            c.signal = s;
        }
        if let Some(b) = self.confounded {
            c.confounded = b;
        }
        if let Some(e) = self.error_dist {
            c.error_dist = match e {
                ErrorArg::Normal => ErrorDist::Normal,
                ErrorArg::Logistic => ErrorDist::Logistic,
            };
        }
        if let Some(width) = self.censor_width {
            c.censoring = CensoringDesign::FixedWidth { width };
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    sim: SimArgs,

    #[arg(long, env = "HTEFUSE_SEED")]
    seed: u64,

    /// CSV destination.
    #[arg(long, short, env = "HTEFUSE_OUTPUT")]
    output: PathBuf,

    /// Truth destination; defaults to the output path with `.truth.json`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[arg(long, value_enum, default_value = "table1", env = "HTEFUSE_PRESET")]
    preset: PresetArg,

    #[command(flatten)]
    sim: SimArgs,

    #[arg(long, env = "HTEFUSE_REPS")]
    reps: Option<usize>,

    /// Bootstrap replicates per fit, for presets that bootstrap.
    #[arg(long = "bootstrap", short = 'B', env = "HTEFUSE_BOOTSTRAP")]
    bootstrap: Option<usize>,

    /// Reduced replicate and bootstrap counts.
    #[arg(long)]
    fast: bool,

    #[arg(long, env = "HTEFUSE_SEED")]
    seed: u64,

    /// JSON report destination; the table goes to standard output.
    #[arg(long, short, env = "HTEFUSE_OUTPUT")]
    output: Option<PathBuf>,

    /// Restrict to these estimators, e.g. `RL.cv,OA.bic`.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
}

#[derive(Serialize)]
struct FitOutput<'a> {
    n: usize,
    p: usize,
    fit: &'a FitResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<&'a BootstrapResult>,
}

#[derive(Serialize)]
struct Truth {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    confounded: bool,
    t0: f64,
    t1: f64,
    config: SimulationConfig,
    seed: u64,
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn run_fit(args: &FitArgs, boot: Option<&BootstrapArgs>) -> Result<(), Error> {
    let d = load_dataset(&args.input.input, &args.input.schema())?;
    let cfg = args.model.config(args.seed)?;
    info!("fitting {} on {} rows", cfg.method, d.len());
    let point = fit(&d, &cfg)?;
    let bs = match boot {
        Some(b) => {
            let bc = BootstrapConfig {
                replicates: b.replicates,
                level: b.level,
                retune: b.retune,
                scaling: match b.se_scaling {
                    ScalingArg::Fpc => SeScaling::FinitePopulation,
                    ScalingArg::Raw => SeScaling::Raw,
                },
                ..BootstrapConfig::default()
            };
            Some(bootstrap_se(&d, &cfg, &point, &bc, htefuse::rng::child_seed(args.seed, 3))?)
        }
        None => None,
    };
    let out = FitOutput {
        n: d.len(),
        p: d.p(),
        fit: &point,
        bootstrap: bs.as_ref(),
    };
    emit(&(serde_json::to_string_pretty(&out)? + "\n"), args.output.as_deref())
}

fn run_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let cfg = args.sim.apply(SimulationConfig::default())?;
    let window = calibrate_censoring(&cfg, 100_000, htefuse::rng::child_seed(args.seed, u64::MAX))?;
    let sim = generate(&cfg, &window, args.seed)?;
    write_dataset(&sim.data, &args.output)?;
    let truth = Truth {
        confounded: sim.beta.iter().any(|b| *b != 0.0),
        alpha: sim.alpha,
        beta: sim.beta,
        t0: window.t0,
        t1: window.t1,
        config: cfg,
        seed: args.seed,
    };
    let path = args.truth.clone().unwrap_or_else(|| {
        let mut s = args.output.clone().into_os_string();
        s.push(".truth.json");
        PathBuf::from(s)
    });
    fs::write(path, serde_json::to_string_pretty(&truth)? + "\n")?;
    Ok(())
}

fn run_benchmark(args: &BenchmarkArgs) -> Result<(), Error> {
    let preset: Preset = args.preset.into();
    let mut study: StudyConfig = preset.study(args.fast);
    study.simulation = args.sim.apply(study.simulation)?;
    if let Some(r) = args.reps {
        study.replicates = r;
    }
    if let (Some(b), Some((boot, _))) = (args.bootstrap, study.bootstrap.as_mut()) {
        boot.replicates = b;
    }
    if let Some(names) = &args.estimators {
        let keep: Vec<EstimatorSpec> = study
            .estimators
            .iter()
            .copied()
            .filter(|e| names.iter().any(|n| n.eq_ignore_ascii_case(&e.label())))
            .collect();
        if keep.len() != names.len() {
            let known: Vec<String> = study.estimators.iter().map(EstimatorSpec::label).collect();
            return Err(Error::InvalidArgument(format!(
                "unknown estimator among {names:?}; this preset offers {known:?}"
            )));
        }
        if let Some((_, which)) = study.bootstrap.as_mut() {
            which.retain(|e| keep.contains(e));
        }
        study.estimators = keep;
    }
    info!("running {} replicates of {:?}", study.replicates, preset);
    let report = run_study(&study, args.seed)?;
    info!("finished in {:.1?}", report.runtime);
    if let Some(path) = &args.output {
        fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    emit(&report.to_table(), None)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::InvalidPenalty(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot start {t} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Fit(a) => run_fit(a, None),
        Command::Bootstrap(b) => run_fit(&b.fit, Some(b)),
        Command::Simulate(a) => run_simulate(a),
        Command::Benchmark(a) => run_benchmark(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
