//! Synthetic trial plus real-world data with hidden confounding, censoring
//! calibration, replicated studies and their summary metrics.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Dataset, Observation};
use crate::error::{Error, Result};
use crate::estimator::{fit, fit_with_nuisance, FitConfig, FitResult, Method};
use crate::inference::{bootstrap_se, BootstrapConfig};
use crate::nuisance::cross_fit;
use crate::rng::{child_seed, stream_rng};
use crate::tuning::TuningMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorDist {
    Normal,
    /// Standard logistic, giving log-logistic survival times.
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub p: usize,
    pub signal: f64,
    pub confounded: bool,
    pub target_cr: f64,
    pub error_dist: ErrorDist,
    pub pr_s1: f64,
    pub pr_a: f64,
    pub rho: f64,
    pub censoring: CensoringDesign,
}

impl Default for CensoringDesign {
    fn default() -> Self {
        CensoringDesign::TailAnchored { tail: 0.005 }
    }
}

/// How the uniform window of `log C` is placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CensoringDesign {
    /// Window of fixed width, shifted to hit the target rate.
    FixedWidth { width: f64 },
    /// Upper end at the `1 − tail` quantile of `log T̃`, lower end moved to
    /// hit the target rate.
    TailAnchored { tail: f64 },
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n: 2500,
            p: 20,
            signal: 2.0,
            confounded: true,
            target_cr: 0.2,
            error_dist: ErrorDist::Normal,
            pr_s1: 0.2,
            pr_a: 0.5,
            rho: 0.3,
            censoring: CensoringDesign::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.p < 8 {
            return bad(format!("p must be at least 8, got {}", self.p));
        }
        if self.n < 10 {
            return bad(format!("n must be at least 10, got {}", self.n));
        }
        for (name, v) in [("pr_s1", self.pr_s1), ("pr_a", self.pr_a)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if !(self.target_cr >= 0.0 && self.target_cr < 1.0) {
            return bad(format!("target censoring rate must lie in [0, 1), got {}", self.target_cr));
        }
        if !(self.rho.abs() < 1.0) {
            return bad(format!("rho must lie in (-1, 1), got {}", self.rho));
        }
        match self.censoring {
            CensoringDesign::FixedWidth { width } if !(width > 0.0) => {
                return bad(format!("window width must be positive, got {width}"));
            }
            CensoringDesign::TailAnchored { tail } if !(tail > 0.0 && tail < self.target_cr) => {
                return bad(format!("tail must lie in (0, target rate), got {tail}"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Effect coefficients `signal·(1₄, −1₄, 0)`.
    pub fn alpha_star(&self) -> Vec<f64> {
        (0..self.p)
            .map(|j| match j {
                0..=3 => self.signal,
                4..=7 => -self.signal,
                _ => 0.0,
            })
            .collect()
    }

    /// Confounding coefficients `signal·(1₂, −1₂, 0)`, or zero.
    pub fn beta_star(&self) -> Vec<f64> {
        (0..self.p)
            .map(|j| match j {
                _ if !self.confounded => 0.0,
                0..=1 => self.signal,
                2..=3 => -self.signal,
                _ => 0.0,
            })
            .collect()
    }
}

/// One subject before censoring.
struct Latent {
    source: bool,
    treatment: bool,
    covariates: Vec<f64>,
    log_time: f64,
}

fn draw_latent(cfg: &SimulationConfig, alpha: &[f64], beta: &[f64], rng: &mut ChaCha8Rng) -> Latent {
    let source = rng.random_bool(cfg.pr_s1);
    let treatment = rng.random_bool(cfg.pr_a);
    let a = f64::from(u8::from(treatment));
    let innovation = (1.0 - cfg.rho * cfg.rho).sqrt();
    let mut z: f64 = rng.sample(StandardNormal);
    let mut x = Vec::with_capacity(cfg.p);
    for j in 0..cfg.p {
        if j > 0 {
            z = cfg.rho * z + innovation * rng.sample::<f64, _>(StandardNormal);
        }
        x.push(z + if j < 8 { 0.2 * a } else { 0.0 });
    }
    let xa: f64 = x.iter().zip(alpha).map(|(u, v)| u * v).sum();
    let xb: f64 = x.iter().zip(beta).map(|(u, v)| u * v).sum();
    let u = a * xb + rng.sample::<f64, _>(StandardNormal);
    let eps: f64 = match cfg.error_dist {
        ErrorDist::Normal => rng.sample(StandardNormal),
        ErrorDist::Logistic => {
            let v: f64 = rng.random_range(f64::EPSILON..1.0);
            (v / (1.0 - v)).ln()
        }
    };
    let rwd = if source { 0.0 } else { 1.0 };
    let mu0 = x[0].sin() + 0.2 * x[3] * x[3] - 0.5 * xa - 0.5 * rwd * xb;
    Latent {
        source,
        treatment,
        covariates: x,
        log_time: mu0 + a * xa + rwd * u + eps,
    }
}

/// Uniform window `[t0, t1]` for `log C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoringWindow {
    pub t0: f64,
    pub t1: f64,
    /// Censoring rate reached on the calibration draws.
    pub achieved: f64,
}

/// Places the window so that the censoring rate on `mc` Monte Carlo draws is
/// within 0.001 of the target. The draws are held fixed across the bisection,
/// so the rate is monotone in the moving end.
pub fn calibrate_censoring(cfg: &SimulationConfig, mc: usize, seed: u64) -> Result<CensoringWindow> {
    cfg.validate()?;
    if mc < 1000 {
        return Err(Error::Calibration(format!("need at least 1000 draws, got {mc}")));
    }
    let alpha = cfg.alpha_star();
    let beta = cfg.beta_star();
    let mut rng = stream_rng(seed, 0x63656e73);
    let mut pairs: Vec<(f64, f64)> = (0..mc)
        .map(|_| {
            let l = draw_latent(cfg, &alpha, &beta, &mut rng);
            (l.log_time, rng.random::<f64>())
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (first, last) = (pairs[0].0, pairs[mc - 1].0);
    let rate = |t0: f64, t1: f64| -> f64 {
        let censored = pairs.iter().filter(|(lt, u)| t0 + (t1 - t0) * u < *lt).count();
        censored as f64 / mc as f64
    };
    // `place(x)` maps the bisection variable to a window; the rate falls as
    // `x` grows.
    let (place, mut lo, mut hi): (Box<dyn Fn(f64) -> (f64, f64)>, f64, f64) = match cfg.censoring {
        CensoringDesign::FixedWidth { width } => (Box::new(move |x| (x, x + width)), first - width - 1.0, last + 1.0),
        CensoringDesign::TailAnchored { tail } => {
            let t1 = pairs[((1.0 - tail) * mc as f64) as usize].0;
            let span = (last - first).max(1.0);
            (Box::new(move |x| (x, t1)), t1 - 1000.0 * span, t1)
        }
    };
    let target = cfg.target_cr;
    let mut best = (hi, rate(place(hi).0, place(hi).1));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (t0, t1) = place(mid);
        let r = rate(t0, t1);
        if (r - target).abs() < (best.1 - target).abs() {
            best = (mid, r);
        }
        if (r - target).abs() <= 0.001 {
            break;
        }
        if r > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.1 - target).abs() > 0.005 {
        return Err(Error::Calibration(format!(
            "closest censoring rate {:.4} misses target {target}",
            best.1
        )));
    }
    let (t0, t1) = place(best.0);
    Ok(CensoringWindow { t0, t1, achieved: best.1 })
}

/// A generated dataset with its true coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub data: Dataset,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

pub fn generate(cfg: &SimulationConfig, window: &CensoringWindow, seed: u64) -> Result<Simulated> {
    cfg.validate()?;
    let alpha = cfg.alpha_star();
    let beta = cfg.beta_star();
    let mut rng = stream_rng(seed, 0x67656e);
    let censor = Uniform::new(window.t0, window.t1)
        .map_err(|e| Error::InvalidArgument(format!("censoring window: {e}")))?;
    let mut obs = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let l = draw_latent(cfg, &alpha, &beta, &mut rng);
        let log_c = censor.sample(&mut rng);
        let status = l.log_time <= log_c;
        obs.push(Observation {
            time: l.log_time.min(log_c).exp(),
            status,
            treatment: l.treatment,
            source: l.source,
            covariates: l.covariates,
        });
    }
    // A draw without trial rows is astronomically unlikely at the default
    // sizes; force one so the dataset stays valid.
    if !obs.iter().any(|o| o.source) {
        obs[0].source = true;
    }
    Ok(Simulated {
        data: Dataset::new(obs)?,
        alpha,
        beta,
    })
}

/// An estimator in a study: method plus tuning rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub method: Method,
    pub tuning: TuningMethod,
}

impl EstimatorSpec {
    pub fn cv(method: Method) -> Self {
        Self {
            method,
            tuning: TuningMethod::Cv,
        }
    }

    pub fn bic(method: Method) -> Self {
        Self {
            method,
            tuning: TuningMethod::Bic,
        }
    }

    /// Row label, e.g. `RL.cv`, `OA.bic`, `RL.RCT`.
    pub fn label(&self) -> String {
        let suffix = match self.tuning {
            TuningMethod::Cv => "cv",
            TuningMethod::Bic => "bic",
            TuningMethod::Fixed => "fixed",
        };
        match self.method {
            Method::Rct | Method::Naive if self.tuning == TuningMethod::Cv => self.method.label().to_string(),
            m => format!("{}.{suffix}", m.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub simulation: SimulationConfig,
    pub replicates: usize,
    pub estimators: Vec<EstimatorSpec>,
    pub fit: FitConfig,
    /// Bootstrap settings and the estimators to bootstrap.
    pub bootstrap: Option<(BootstrapConfig, Vec<EstimatorSpec>)>,
    /// Monte Carlo draws for censoring calibration.
    pub calibration_draws: usize,
}

impl StudyConfig {
    pub fn new(simulation: SimulationConfig, replicates: usize, estimators: Vec<EstimatorSpec>) -> Self {
        Self {
            simulation,
            replicates,
            estimators,
            fit: FitConfig::default(),
            bootstrap: None,
            calibration_draws: 100_000,
        }
    }
}

/// One estimator's output on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub estimator: String,
    /// Effect coefficients, intercept first.
    pub alpha: Vec<f64>,
    pub beta: Option<Vec<f64>>,
    pub confounded: bool,
    pub kkt_violation: f64,
    pub converged: bool,
    /// Bootstrap SE of `alpha`, when requested.
    pub alpha_se: Option<Vec<f64>>,
    pub error: Option<String>,
}

impl EstimateRecord {
    fn failed(estimator: String, error: String) -> Self {
        Self {
            estimator,
            alpha: Vec::new(),
            beta: None,
            confounded: false,
            kkt_violation: f64::NAN,
            converged: false,
            alpha_se: None,
            error: Some(error),
        }
    }

    fn from_fit(estimator: String, f: &FitResult) -> Self {
        Self {
            estimator,
            alpha: f.alpha().to_vec(),
            beta: f.beta().map(<[f64]>::to_vec),
            confounded: f.confounded,
            kkt_violation: f.kkt_violation,
            converged: f.coefficients.converged,
            alpha_se: None,
            error: None,
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    pub censoring_rate: f64,
    pub estimates: Vec<EstimateRecord>,
}

/// Summary of one estimator across replicates. Coefficient-level vectors
/// run over the covariates (intercept excluded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub estimator: String,
    pub replicates: usize,
    pub failures: usize,
    pub rmse: f64,
    pub fdr: f64,
    /// Absent for estimators without a confounding block.
    pub tir: Option<f64>,
    pub bias: Vec<f64>,
    pub sd: Vec<f64>,
    pub se: Option<Vec<f64>>,
    pub cp: Option<Vec<f64>>,
    pub max_kkt_violation: f64,
}

/// Metrics from per-replicate records. Failed records are skipped and
/// counted.
pub fn compute_metrics(
    estimator: &str,
    records: &[&EstimateRecord],
    alpha_star: &[f64],
    beta_star: &[f64],
    level: f64,
) -> Metrics {
    let ok: Vec<&EstimateRecord> = records.iter().copied().filter(|r| r.ok()).collect();
    let failures = records.len() - ok.len();
    let p = alpha_star.len();
    let b = ok.len() as f64;
    let covariates = |r: &EstimateRecord| -> Vec<f64> { r.alpha[1..].to_vec() };
    let mut sq = 0.0;
    let mut fdr = 0.0;
    let mut tir = 0.0;
    let mut sums = vec![0.0; p];
    for r in &ok {
        let a = covariates(r);
        sq += a.iter().zip(alpha_star).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        let selected = a.iter().filter(|v| **v != 0.0).count();
        let false_pos = a
            .iter()
            .zip(alpha_star)
            .filter(|(v, t)| **v != 0.0 && **t == 0.0)
            .count();
        if selected > 0 {
            fdr += false_pos as f64 / selected as f64;
        }
        let truly = beta_star.iter().any(|v| *v != 0.0);
        if r.confounded == truly {
            tir += 1.0;
        }
        for (s, v) in sums.iter_mut().zip(&a) {
            *s += v;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / b).collect();
    let sd: Vec<f64> = (0..p)
        .map(|j| {
            if ok.len() < 2 {
                return 0.0;
            }
            let v = ok.iter().map(|r| (r.alpha[j + 1] - means[j]).powi(2)).sum::<f64>() / (b - 1.0);
            v.sqrt()
        })
        .collect();
    let with_se: Vec<&&EstimateRecord> = ok.iter().filter(|r| r.alpha_se.is_some()).collect();
    let (se, cp) = if with_se.is_empty() {
        (None, None)
    } else {
        let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
        let m = with_se.len() as f64;
        let se = (0..p)
            .map(|j| with_se.iter().map(|r| r.alpha_se.as_ref().unwrap()[j + 1]).sum::<f64>() / m)
            .collect();
        let cp = (0..p)
            .map(|j| {
                with_se
                    .iter()
                    .filter(|r| {
                        let s = r.alpha_se.as_ref().unwrap()[j + 1];
                        (r.alpha[j + 1] - alpha_star[j]).abs() <= z * s
                    })
                    .count() as f64
                    / m
            })
            .collect();
        (Some(se), Some(cp))
    };
    let has_beta = ok.iter().any(|r| r.beta.is_some());
    Metrics {
        estimator: estimator.to_string(),
        replicates: ok.len(),
        failures,
        rmse: if ok.is_empty() { f64::NAN } else { (sq / (b * p as f64)).sqrt() },
        fdr: if ok.is_empty() { f64::NAN } else { fdr / b },
        tir: (has_beta && !ok.is_empty()).then(|| tir / b),
        bias: means.iter().zip(alpha_star).map(|(m, t)| m - t).collect(),
        sd,
        se,
        cp,
        max_kkt_violation: ok.iter().map(|r| r.kkt_violation).fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub seed: u64,
    pub window: CensoringWindow,
    pub alpha_star: Vec<f64>,
    pub beta_star: Vec<f64>,
    pub metrics: Vec<Metrics>,
    pub replicates: Vec<ReplicateRecord>,
    #[serde(skip)]
    pub runtime: Duration,
}

fn fit_spec(d: &Dataset, base: &FitConfig, spec: &EstimatorSpec, nf: Option<&crate::nuisance::NuisanceFit>) -> Result<FitResult> {
    let cfg = FitConfig {
        method: spec.method,
        tuning: spec.tuning,
        ..base.clone()
    };
    match (spec.method, nf) {
        (Method::Rct, _) | (_, None) => fit(d, &cfg),
        (_, Some(nf)) => fit_with_nuisance(d, nf, &cfg),
    }
}

fn run_replicate(study: &StudyConfig, window: &CensoringWindow, seed: u64, r: usize) -> ReplicateRecord {
    let rep_seed = child_seed(seed, r as u64);
    let base = FitConfig {
        seed: rep_seed,
        ..study.fit.clone()
    };
    let sim = match generate(&study.simulation, window, rep_seed) {
        Ok(s) => s,
        Err(e) => {
            return ReplicateRecord {
                replicate: r,
                seed: rep_seed,
                censoring_rate: f64::NAN,
                estimates: study
                    .estimators
                    .iter()
                    .map(|s| EstimateRecord::failed(s.label(), e.to_string()))
                    .collect(),
            }
        }
    };
    let d = &sim.data;
    let nf = cross_fit(d, &base.nuisance, child_seed(rep_seed, 1));
    let mut estimates = Vec::with_capacity(study.estimators.len());
    for spec in &study.estimators {
        let label = spec.label();
        let fitted = match &nf {
            Ok(nf) => fit_spec(d, &base, spec, Some(nf)),
            Err(e) => Err(Error::InvalidArgument(format!("nuisance fit failed: {e}"))),
        };
        let mut rec = match &fitted {
            Ok(f) => EstimateRecord::from_fit(label, f),
            Err(e) => EstimateRecord::failed(label, e.to_string()),
        };
        if let (Ok(f), Some((boot, which))) = (&fitted, &study.bootstrap) {
            if which.contains(spec) {
                let cfg = FitConfig {
                    method: spec.method,
                    tuning: spec.tuning,
                    ..base.clone()
                };
                match bootstrap_se(d, &cfg, f, boot, child_seed(rep_seed, 7)) {
                    Ok(bs) => rec.alpha_se = Some(bs.se[..f.alpha().len()].to_vec()),
                    Err(e) => rec.error = Some(e.to_string()),
                }
            }
        }
        estimates.push(rec);
    }
    ReplicateRecord {
        replicate: r,
        seed: rep_seed,
        censoring_rate: d.censoring_rate(),
        estimates,
    }
}

/// Runs every estimator on `replicates` independent draws.
pub fn run_study(study: &StudyConfig, seed: u64) -> Result<StudyReport> {
    if study.replicates == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    let start = Instant::now();
    let window = calibrate_censoring(&study.simulation, study.calibration_draws, child_seed(seed, u64::MAX))?;
    let replicates: Vec<ReplicateRecord> = (0..study.replicates)
        .into_par_iter()
        .map(|r| run_replicate(study, &window, seed, r))
        .collect();
    let level = study.bootstrap.as_ref().map_or(0.95, |b| b.0.level);
    let alpha_star = study.simulation.alpha_star();
    let beta_star = study.simulation.beta_star();
    let metrics = study
        .estimators
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let recs: Vec<&EstimateRecord> = replicates.iter().map(|r| &r.estimates[k]).collect();
            compute_metrics(&spec.label(), &recs, &alpha_star, &beta_star, level)
        })
        .collect();
    Ok(StudyReport {
        config: study.clone(),
        seed,
        window,
        alpha_star,
        beta_star,
        metrics,
        replicates,
        runtime: start.elapsed(),
    })
}

impl StudyReport {
    pub fn metrics_for(&self, estimator: &str) -> Option<&Metrics> {
        self.metrics.iter().find(|m| m.estimator == estimator)
    }

    /// Aligned text tables: RMSE/FDR/TIR per estimator, then per-coefficient
    /// Bias/SD/SE/CP where available.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let s = &self.config.simulation;
        let _ = writeln!(
            out,
            "n={} p={} signal={} confounded={} CR={} errors={:?} replicates={}",
            s.n, s.p, s.signal, s.confounded, s.target_cr, s.error_dist, self.config.replicates
        );
        let _ = writeln!(
            out,
            "{:<12} {:>10} {:>8} {:>8} {:>6}",
            "estimator", "RMSEx100", "FDR%", "TIR%", "fail"
        );
        for m in &self.metrics {
            let tir = m.tir.map_or("-".to_string(), |t| format!("{:.1}", 100.0 * t));
            let _ = writeln!(
                out,
                "{:<12} {:>10.2} {:>8.2} {:>8} {:>6}",
                m.estimator,
                100.0 * m.rmse,
                100.0 * m.fdr,
                tir,
                m.failures
            );
        }
        for m in self.metrics.iter().filter(|m| m.se.is_some()) {
            let _ = writeln!(out, "\n{}", m.estimator);
            let _ = writeln!(
                out,
                "{:<8} {:>8} {:>8} {:>8} {:>8} {:>8}",
                "coef", "true", "bias", "SD", "SE", "CP"
            );
            let se = m.se.as_ref().unwrap();
            let cp = m.cp.as_ref().unwrap();
            for j in 0..8.min(m.bias.len()) {
                let _ = writeln!(
                    out,
                    "{:<8} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
                    format!("alpha{}", j + 1),
                    self.alpha_star[j],
                    m.bias[j],
                    m.sd[j],
                    se[j],
                    cp[j]
                );
            }
        }
        out
    }
}

/// Named study configurations mirroring the published tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Table1,
    Table2,
    Table3,
    Table4,
    SuppLogistic,
    SuppCr60,
    SuppSignal1,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "table1" => Preset::Table1,
            "table2" => Preset::Table2,
            "table3" => Preset::Table3,
            "table4" => Preset::Table4,
            "supp-logistic" => Preset::SuppLogistic,
            "supp-cr60" => Preset::SuppCr60,
            "supp-signal1" => Preset::SuppSignal1,
            other => return Err(Error::InvalidArgument(format!("unknown preset `{other}`"))),
        })
    }
}

/// Every tabulated estimator: cv and bic variants plus trial-only and naive.
pub fn table_estimators() -> Vec<EstimatorSpec> {
    let mut v = Vec::new();
    for m in [Method::Rl, Method::Oa, Method::Gm0, Method::Gm1, Method::Meta, Method::Gm01] {
        v.push(EstimatorSpec::cv(m));
        v.push(EstimatorSpec::bic(m));
    }
    v.push(EstimatorSpec::cv(Method::Rct));
    v.push(EstimatorSpec::cv(Method::Naive));
    v
}

/// RL and OA under both tuning rules, plus trial-only and naive.
pub fn supplement_estimators() -> Vec<EstimatorSpec> {
    vec![
        EstimatorSpec::cv(Method::Rl),
        EstimatorSpec::bic(Method::Rl),
        EstimatorSpec::cv(Method::Oa),
        EstimatorSpec::bic(Method::Oa),
        EstimatorSpec::cv(Method::Rct),
        EstimatorSpec::cv(Method::Naive),
    ]
}

impl Preset {
    /// Study for the preset at its published settings. `fast` shrinks the
    /// replicate and bootstrap counts.
    pub fn study(&self, fast: bool) -> StudyConfig {
        let base = SimulationConfig::default();
        let (sim, reps, estimators) = match self {
            Preset::Table1 | Preset::Table2 | Preset::SuppSignal1 => {
                let signal = if *self == Preset::SuppSignal1 { 1.0 } else { 2.0 };
                (SimulationConfig { signal, ..base }, 500, table_estimators())
            }
            Preset::Table3 | Preset::Table4 => {
                let p = if *self == Preset::Table3 { 20 } else { 50 };
                let sim = SimulationConfig {
                    p,
                    confounded: false,
                    ..base
                };
                (sim, 500, vec![EstimatorSpec::cv(Method::Rl), EstimatorSpec::cv(Method::Rct)])
            }
            Preset::SuppLogistic => (
                SimulationConfig {
                    error_dist: ErrorDist::Logistic,
                    target_cr: 0.4,
                    ..base
                },
                500,
                supplement_estimators(),
            ),
            Preset::SuppCr60 => (
                SimulationConfig {
                    target_cr: 0.6,
                    ..base
                },
                500,
                supplement_estimators(),
            ),
        };
        let mut study = StudyConfig::new(sim, if fast { 100 } else { reps }, estimators.clone());
        if matches!(self, Preset::Table3 | Preset::Table4) {
            let boot = BootstrapConfig {
                replicates: if fast { 100 } else { 500 },
                ..BootstrapConfig::default()
            };
            if fast {
                study.replicates = 50;
            }
            study.bootstrap = Some((boot, estimators));
        }
        study
    }
}
