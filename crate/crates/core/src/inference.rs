//! Subsampling ("0.632") bootstrap standard errors and normal intervals.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{fit, FitConfig, FitResult, Method};
use crate::rng::{child_seed, stream_rng};

/// How the spread of subsample estimates is turned into a standard error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeScaling {
    /// Multiplies the subsample SD by `sqrt(m / (n − m))`, the factor that
    /// maps the spread of size-`m` subsample estimates around the full-sample
    /// estimate to the sampling SD at size `n`.
    FinitePopulation,
    /// Reports the subsample SD as is.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub fraction: f64,
    /// Re-tunes λ and nuisance hyperparameters in every replicate.
    pub retune: bool,
    pub scaling: SeScaling,
    pub keep_replicates: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 500,
            level: 0.95,
            fraction: 0.632,
            retune: false,
            scaling: SeScaling::FinitePopulation,
            keep_replicates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub replicates: usize,
    pub subsample_size: usize,
    /// Per coefficient, `alpha` then `beta` (intercepts included).
    pub se: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub level: f64,
    /// Replicates that failed and were redrawn.
    pub failures: usize,
    pub replicate_matrix: Option<Vec<Vec<f64>>>,
}

/// Draws `round(fraction·n_s)` rows without replacement within each source.
pub fn stratified_subsample(d: &Dataset, fraction: f64, seed: u64, attempt: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, attempt);
    let mut out = Vec::new();
    for source in [true, false] {
        let members = d.indices_where(|o| o.source == source);
        let take = (fraction * members.len() as f64).round() as usize;
        out.extend(sample(&mut rng, members.len(), take).into_iter().map(|k| members[k]));
    }
    out.sort_unstable();
    out
}

/// Standard errors of `point` by refitting on stratified subsamples.
pub fn bootstrap_se(
    d: &Dataset,
    cfg: &FitConfig,
    point: &FitResult,
    boot: &BootstrapConfig,
    seed: u64,
) -> Result<BootstrapResult> {
    if boot.replicates < 2 {
        return Err(Error::InvalidArgument("bootstrap needs at least 2 replicates".into()));
    }
    if !(boot.level > 0.0 && boot.level < 1.0) {
        return Err(Error::InvalidArgument(format!("level must lie in (0, 1), got {}", boot.level)));
    }
    if !(boot.fraction > 0.0 && boot.fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("fraction must lie in (0, 1), got {}", boot.fraction)));
    }
    let mut rep_cfg = cfg.clone();
    rep_cfg.method = point.method;
    if !boot.retune && point.method != Method::Meta {
        rep_cfg.fixed = Some(point.fixed_tuning());
        rep_cfg.nuisance.fixed = point.nuisance_hyper;
    }
    let run = |attempt: u64| -> Option<Vec<f64>> {
        let idx = stratified_subsample(d, boot.fraction, seed, attempt);
        let sub = d.subset(&idx).ok()?;
        let c = FitConfig {
            seed: child_seed(seed, attempt),
            ..rep_cfg.clone()
        };
        fit(&sub, &c).ok().map(|f| f.coefficients.theta())
    };
    let b = boot.replicates;
    let mut draws: Vec<Vec<f64>> = Vec::with_capacity(b);
    let mut next = 0u64;
    let limit = 3 * b as u64;
    while draws.len() < b && next < limit {
        let want = (b - draws.len()) as u64;
        let batch: Vec<u64> = (next..(next + want).min(limit)).collect();
        next += batch.len() as u64;
        let results: Vec<Option<Vec<f64>>> = batch.par_iter().map(|&a| run(a)).collect();
        draws.extend(results.into_iter().flatten());
    }
    if draws.len() < b {
        return Err(Error::Bootstrap(format!(
            "only {} of {b} replicates succeeded in {limit} attempts",
            draws.len()
        )));
    }
    let failures = next as usize - b;
    let n = d.len();
    let m = stratified_subsample(d, boot.fraction, seed, 0).len();
    let factor = match boot.scaling {
        SeScaling::FinitePopulation if n > m => (m as f64 / (n - m) as f64).sqrt(),
        _ => 1.0,
    };
    let theta = point.coefficients.theta();
    let k = theta.len();
    let se: Vec<f64> = (0..k)
        .map(|j| {
            let mean = draws.iter().map(|r| r[j]).sum::<f64>() / b as f64;
            let var = draws.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
            var.sqrt() * factor
        })
        .collect();
    let z = Normal::standard().inverse_cdf(0.5 + boot.level / 2.0);
    Ok(BootstrapResult {
        replicates: b,
        subsample_size: m,
        ci_lower: theta.iter().zip(&se).map(|(t, s)| t - z * s).collect(),
        ci_upper: theta.iter().zip(&se).map(|(t, s)| t + z * s).collect(),
        se,
        level: boot.level,
        failures,
        replicate_matrix: boot.keep_replicates.then_some(draws),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{calibrate_censoring, generate, SimulationConfig};

    fn setup() -> (Dataset, FitConfig, FitResult) {
        let sim = SimulationConfig {
            n: 300,
            p: 8,
            confounded: false,
            pr_s1: 0.4,
            ..Default::default()
        };
        let w = calibrate_censoring(&sim, 5000, 2).unwrap();
        let d = generate(&sim, &w, 9).unwrap().data;
        let cfg = FitConfig {
            grid_len: 5,
            cv_folds: 3,
            seed: 4,
            ..Default::default()
        };
        let point = fit(&d, &cfg).unwrap();
        (d, cfg, point)
    }

    #[test]
    fn subsample_is_stratified_without_replacement() {
        let (d, _, _) = setup();
        let idx = stratified_subsample(&d, 0.632, 5, 0);
        let mut dedup = idx.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), idx.len());
        let trial = idx.iter().filter(|&&i| d.get(i).source).count();
        assert_eq!(trial, (0.632 * d.n1() as f64).round() as usize);
        assert_eq!(idx.len() - trial, (0.632 * d.n0() as f64).round() as usize);
    }

    #[test]
    fn intervals_are_symmetric_and_reproducible() {
        let (d, cfg, point) = setup();
        let boot = BootstrapConfig {
            replicates: 6,
            keep_replicates: true,
            ..Default::default()
        };
        let a = bootstrap_se(&d, &cfg, &point, &boot, 3).unwrap();
        assert_eq!(a, bootstrap_se(&d, &cfg, &point, &boot, 3).unwrap());
        let theta = point.coefficients.theta();
        for k in 0..theta.len() {
            assert!(a.se[k] >= 0.0);
            assert!((a.ci_upper[k] - theta[k] - (theta[k] - a.ci_lower[k])).abs() < 1e-12);
            assert!(a.ci_lower[k] <= theta[k] && theta[k] <= a.ci_upper[k]);
        }
        assert_eq!(a.replicate_matrix.as_ref().unwrap().len(), 6);
    }

    #[test]
    fn raw_scaling_drops_the_correction() {
        let (d, cfg, point) = setup();
        let fpc = BootstrapConfig {
            replicates: 4,
            ..Default::default()
        };
        let raw = BootstrapConfig {
            scaling: SeScaling::Raw,
            ..fpc.clone()
        };
        let a = bootstrap_se(&d, &cfg, &point, &fpc, 8).unwrap();
        let b = bootstrap_se(&d, &cfg, &point, &raw, 8).unwrap();
        let m = a.subsample_size as f64;
        let factor = (m / (d.len() as f64 - m)).sqrt();
        for (x, y) in a.se.iter().zip(&b.se) {
            assert!((x - y * factor).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_settings() {
        let (d, cfg, point) = setup();
        for boot in [
            BootstrapConfig {
                replicates: 1,
                ..Default::default()
            },
            BootstrapConfig {
                level: 1.0,
                ..Default::default()
            },
        ] {
            assert!(bootstrap_se(&d, &cfg, &point, &boot, 0).is_err());
        }
    }
}
