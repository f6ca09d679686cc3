//! End-to-end fitting: nuisances, design, tuning and the final solve, for the
//! integrative estimator and each comparison method.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nuisance::{cross_fit, NuisanceConfig, NuisanceFit, NuisanceHyper};
use crate::penalty::{PenaltyFamily, PenaltySpec};
use crate::rng::child_seed;
use crate::solver::{
    default_grids, kkt_check, solution_path, solve_at, BlockLayout, Coefficients, DesignRows,
    RegressionProblem, SolverOptions,
};
use crate::tuning::{bic_select, cv_select, TuningMethod, TuningResult};

/// Estimator variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Residualized integrative estimator with a confounding block.
    Rl,
    /// Outcome-adjusted pseudo-outcome regression.
    Oa,
    /// Treated rows, response `log T − μ̂0`.
    Gm0,
    /// Control rows, response `μ̂1 − log T`.
    Gm1,
    /// Sample-size weighted average of GM0 and GM1.
    Meta,
    /// All rows, response `μ̂1 − μ̂0`.
    Gm01,
    /// Residualized estimator on trial rows only.
    Rct,
    /// Residualized estimator without the confounding block.
    Naive,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Rl,
        Method::Oa,
        Method::Gm0,
        Method::Gm1,
        Method::Meta,
        Method::Gm01,
        Method::Rct,
        Method::Naive,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Rl => "RL",
            Method::Oa => "OA",
            Method::Gm0 => "GM0",
            Method::Gm1 => "GM1",
            Method::Meta => "Meta",
            Method::Gm01 => "GM01",
            Method::Rct => "RL.RCT",
            Method::Naive => "RL.NAI",
        }
    }

    /// Whether the output carries a confounding block.
    pub fn has_beta(&self) -> bool {
        !matches!(self, Method::Rct | Method::Naive)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "rl" => Method::Rl,
            "oa" => Method::Oa,
            "gm0" => Method::Gm0,
            "gm1" => Method::Gm1,
            "meta" => Method::Meta,
            "gm01" => Method::Gm01,
            "rct" | "rct-only" => Method::Rct,
            "naive" | "nai" => Method::Naive,
            other => return Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        })
    }
}

/// Grid and position reused instead of tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedTuning {
    pub grid1: Vec<f64>,
    pub grid2: Vec<f64>,
    pub index: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub method: Method,
    pub penalty: PenaltySpec,
    pub tuning: TuningMethod,
    pub cv_folds: usize,
    pub grid_len: usize,
    pub lambda_ratio: f64,
    pub penalize_intercepts: bool,
    /// Counts a nonzero β intercept toward the confounding verdict.
    pub verdict_counts_intercept: bool,
    /// Gives the leftover Kaplan-Meier mass to the largest time.
    pub redistribute_last: bool,
    /// Ridge level of the adaptive-lasso pilot, standardized units.
    pub pilot_ridge: f64,
    pub solver: SolverOptions,
    pub nuisance: NuisanceConfig,
    /// Overrides `tuning` when set.
    pub fixed: Option<FixedTuning>,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            method: Method::Rl,
            penalty: PenaltySpec::default(),
            tuning: TuningMethod::Cv,
            cv_folds: 5,
            grid_len: 20,
            lambda_ratio: 1e-3,
            penalize_intercepts: false,
            verdict_counts_intercept: false,
            redistribute_last: false,
            pilot_ridge: 1e-3,
            solver: SolverOptions::default(),
            nuisance: NuisanceConfig::default(),
            fixed: None,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn with_method(&self, method: Method) -> Self {
        Self {
            method,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: Method,
    pub coefficients: Coefficients,
    /// Nonzero penalized positions of `alpha` (0 is the intercept).
    pub support_alpha: Vec<usize>,
    /// Nonzero penalized positions of `beta`.
    pub support_beta: Vec<usize>,
    pub confounded: bool,
    /// For Meta, the tuning of its GM0 component.
    pub tuning: TuningResult,
    pub nuisance_digest: String,
    pub nuisance_hyper: Option<NuisanceHyper>,
    /// Largest stationarity residual at the reported solution.
    pub kkt_violation: f64,
    /// Rows entering the final regression.
    pub rows_used: usize,
}

impl FitResult {
    pub fn alpha(&self) -> &[f64] {
        &self.coefficients.alpha
    }

    pub fn beta(&self) -> Option<&[f64]> {
        self.coefficients.beta.as_deref()
    }

    pub fn fixed_tuning(&self) -> FixedTuning {
        FixedTuning {
            grid1: self.tuning.grid1.clone(),
            grid2: self.tuning.grid2.clone(),
            index: self.tuning.index,
        }
    }
}

/// Confounding verdict with the selected confounding support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub confounded: bool,
    pub support_beta: Vec<usize>,
}

pub fn detect_confounding(fit: &FitResult) -> Verdict {
    Verdict {
        confounded: fit.confounded,
        support_beta: fit.support_beta.clone(),
    }
}

fn supports(c: &Coefficients, cfg: &FitConfig) -> (Vec<usize>, Vec<usize>, bool) {
    let first = usize::from(!cfg.penalize_intercepts);
    let nonzero = |v: &[f64]| -> Vec<usize> { (first..v.len()).filter(|&k| v[k] != 0.0).collect() };
    let sa = nonzero(&c.alpha);
    let sb = c.beta.as_deref().map(nonzero).unwrap_or_default();
    let intercept_flag = cfg.verdict_counts_intercept
        && c.beta.as_ref().is_some_and(|b| b[0] != 0.0);
    let confounded = !sb.is_empty() || intercept_flag;
    (sa, sb, confounded)
}

/// Fits `cfg.method` on `d`, estimating nuisances by cross-fitting.
pub fn fit(d: &Dataset, cfg: &FitConfig) -> Result<FitResult> {
    match cfg.method {
        Method::Rct => {
            let trial = d.subset(&d.indices_where(|o| o.source))?;
            let nf = cross_fit(&trial, &cfg.nuisance, child_seed(cfg.seed, 1))?;
            fit_with_nuisance(&trial, &nf, cfg)
        }
        _ => {
            let nf = cross_fit(d, &cfg.nuisance, child_seed(cfg.seed, 1))?;
            fit_with_nuisance(d, &nf, cfg)
        }
    }
}

/// Every requested method on shared nuisances (RCT-only refits its own on
/// the trial rows).
pub fn fit_many(d: &Dataset, cfg: &FitConfig, methods: &[Method]) -> Result<Vec<Result<FitResult>>> {
    let nf = cross_fit(d, &cfg.nuisance, child_seed(cfg.seed, 1))?;
    Ok(methods
        .iter()
        .map(|&m| {
            let c = cfg.with_method(m);
            match m {
                Method::Rct => fit(d, &c),
                _ => fit_with_nuisance(d, &nf, &c),
            }
        })
        .collect())
}

/// Fits `cfg.method` on supplied nuisance predictions. For the RCT-only
/// method `d` and `nf` are used as given.
pub fn fit_with_nuisance(d: &Dataset, nf: &NuisanceFit, cfg: &FitConfig) -> Result<FitResult> {
    if cfg.method == Method::Meta {
        let gm0 = fit_with_nuisance(d, nf, &cfg.with_method(Method::Gm0))?;
        let gm1 = fit_with_nuisance(d, nf, &cfg.with_method(Method::Gm1))?;
        return fit_meta(&gm0, &gm1, cfg);
    }
    let rows = method_rows(d, nf, cfg)?;
    if rows.is_empty() {
        return Err(Error::EmptySubset(format!("rows required by {}", cfg.method)));
    }
    let mut out = solve_rows(&rows, cfg)?;
    out.method = cfg.method;
    out.nuisance_digest = nf.digest();
    out.nuisance_hyper = Some(nf.representative_hyper());
    Ok(out)
}

fn method_rows(d: &Dataset, nf: &NuisanceFit, cfg: &FitConfig) -> Result<DesignRows> {
    let layout = BlockLayout {
        p: d.p(),
        has_beta: cfg.method.has_beta(),
        penalize_intercepts: cfg.penalize_intercepts,
    };
    let all: Vec<usize> = (0..d.len()).collect();
    Ok(match cfg.method {
        Method::Rl | Method::Rct | Method::Naive => DesignRows::residualized(d, nf, layout)?,
        Method::Oa => DesignRows::build(d, &all, layout, |i, o| {
            let (e, m0, m1) = (nf.e_hat[i], nf.mu0_hat[i], nf.mu1_hat[i]);
            let y = o.time.ln();
            let a = o.a();
            let adjusted = a * (y - m1) / e + m1 - (1.0 - a) * (y - m0) / (1.0 - e) - m0;
            (adjusted, 1.0)
        }),
        Method::Gm0 => DesignRows::build(d, &d.indices_where(|o| o.treatment), layout, |i, o| {
            (o.time.ln() - nf.mu0_hat[i], 1.0)
        }),
        Method::Gm1 => DesignRows::build(d, &d.indices_where(|o| !o.treatment), layout, |i, o| {
            (nf.mu1_hat[i] - o.time.ln(), 1.0)
        }),
        Method::Gm01 => DesignRows::build(d, &all, layout, |i, _| (nf.mu1_hat[i] - nf.mu0_hat[i], 1.0)),
        Method::Meta => unreachable!("handled by the caller"),
    })
}

/// Tuning and final solve on prepared rows.
pub fn solve_rows(rows: &DesignRows, cfg: &FitConfig) -> Result<FitResult> {
    let prob = RegressionProblem::from_rows_with(rows, None, cfg.redistribute_last)?;
    prob.check_identifiable()?;
    let mut spec = cfg.penalty.clone();
    spec.validate()?;
    if spec.family == PenaltyFamily::AdaptiveLasso && spec.adaptive_weights.is_none() {
        spec.adaptive_weights = Some(prob.adaptive_weights(cfg.pilot_ridge)?);
    }
    let (tuning, coefficients) = match &cfg.fixed {
        Some(f) => {
            let c = solve_at(&prob, &f.grid1, &f.grid2, f.index, &spec, &cfg.solver)?;
            (TuningResult::fixed(&f.grid1, &f.grid2, f.index), c)
        }
        None => {
            let (g1, g2) = default_grids(&prob, &spec, cfg.grid_len, cfg.lambda_ratio)?;
            match cfg.tuning {
                TuningMethod::Bic => {
                    let path = solution_path(&prob, &g1, &g2, &spec, &cfg.solver)?;
                    let t = bic_select(&prob, &path);
                    let c = path.get(t.index.0, t.index.1).clone();
                    (t, c)
                }
                TuningMethod::Cv | TuningMethod::Fixed => {
                    let t = cv_select(rows, &g1, &g2, cfg.cv_folds, child_seed(cfg.seed, 2), &spec, &cfg.solver)?;
                    let c = solve_at(&prob, &g1, &g2, t.index, &spec, &cfg.solver)?;
                    (t, c)
                }
            }
        }
    };
    let kkt = kkt_check(&prob, &coefficients, tuning.lambda1, tuning.lambda2, &spec);
    let (support_alpha, support_beta, confounded) = supports(&coefficients, cfg);
    Ok(FitResult {
        method: cfg.method,
        coefficients,
        support_alpha,
        support_beta,
        confounded,
        tuning,
        nuisance_digest: String::new(),
        nuisance_hyper: None,
        kkt_violation: kkt.max_violation,
        rows_used: rows.len(),
    })
}

/// Coefficient-wise average of GM0 and GM1 weighted by the rows each used.
pub fn fit_meta(gm0: &FitResult, gm1: &FitResult, cfg: &FitConfig) -> Result<FitResult> {
    if gm0.alpha().len() != gm1.alpha().len() {
        return Err(Error::DimensionMismatch("GM0 and GM1 differ in p".into()));
    }
    let (n0, n1) = (gm0.rows_used as f64, gm1.rows_used as f64);
    let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| (n0 * x + n1 * y) / (n0 + n1)).collect()
    };
    let beta = match (gm0.beta(), gm1.beta()) {
        (Some(a), Some(b)) => Some(mix(a, b)),
        _ => None,
    };
    let coefficients = Coefficients {
        alpha: mix(gm0.alpha(), gm1.alpha()),
        beta,
        objective: (n0 * gm0.coefficients.objective + n1 * gm1.coefficients.objective) / (n0 + n1),
        iterations: gm0.coefficients.iterations + gm1.coefficients.iterations,
        converged: gm0.coefficients.converged && gm1.coefficients.converged,
        trace: Vec::new(),
    };
    let (support_alpha, support_beta, confounded) = supports(&coefficients, cfg);
    Ok(FitResult {
        method: Method::Meta,
        coefficients,
        support_alpha,
        support_beta,
        confounded,
        tuning: gm0.tuning.clone(),
        nuisance_digest: gm0.nuisance_digest.clone(),
        nuisance_hyper: gm0.nuisance_hyper,
        kkt_violation: gm0.kkt_violation.max(gm1.kkt_violation),
        rows_used: gm0.rows_used + gm1.rows_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Observation;
    use crate::simulation::{calibrate_censoring, generate, SimulationConfig};

    fn small(n: usize, confounded: bool, seed: u64) -> Dataset {
        let sim = SimulationConfig {
            n,
            p: 8,
            confounded,
            pr_s1: 0.4,
            ..Default::default()
        };
        let w = calibrate_censoring(&sim, 5000, 1).unwrap();
        generate(&sim, &w, seed).unwrap().data
    }

    fn quick(method: Method) -> FitConfig {
        FitConfig {
            method,
            grid_len: 6,
            cv_folds: 3,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn all_trial_data_reduces_to_trial_only() {
        let d = small(300, true, 3);
        let trial: Vec<Observation> = d
            .observations()
            .iter()
            .map(|o| Observation {
                source: true,
                ..o.clone()
            })
            .collect();
        let d = Dataset::new(trial).unwrap();
        let rl = fit(&d, &quick(Method::Rl)).unwrap();
        let rct = fit(&d, &quick(Method::Rct)).unwrap();
        let naive = fit(&d, &quick(Method::Naive)).unwrap();
        assert_eq!(rl.alpha(), rct.alpha());
        assert_eq!(naive.alpha(), rct.alpha());
        assert!(rl.beta().unwrap().iter().all(|b| *b == 0.0));
        assert!(!rl.confounded);
    }

    #[test]
    fn meta_is_the_size_weighted_mean() {
        let d = small(400, false, 4);
        let cfg = quick(Method::Meta);
        let nf = cross_fit(&d, &cfg.nuisance, 1).unwrap();
        let gm0 = fit_with_nuisance(&d, &nf, &cfg.with_method(Method::Gm0)).unwrap();
        let gm1 = fit_with_nuisance(&d, &nf, &cfg.with_method(Method::Gm1)).unwrap();
        let meta = fit_with_nuisance(&d, &nf, &cfg).unwrap();
        let (n0, n1) = (gm0.rows_used as f64, gm1.rows_used as f64);
        for k in 0..meta.alpha().len() {
            let want = (n0 * gm0.alpha()[k] + n1 * gm1.alpha()[k]) / (n0 + n1);
            assert!((meta.alpha()[k] - want).abs() < 1e-14);
        }
        assert_eq!(meta.rows_used, d.len());
        // Averaging a fit with itself returns it.
        let same = fit_meta(&gm0, &gm0, &cfg).unwrap();
        for (x, y) in same.alpha().iter().zip(gm0.alpha()) {
            assert!((x - y).abs() <= 1e-15 * y.abs().max(1.0));
        }
    }

    #[test]
    fn outcome_adjustment_collapses_at_exact_means() {
        // With e = 1/2 and μ0 = μ1 = m the adjusted outcome is
        // 2(2A − 1)(log T − m).
        let d = small(200, false, 5);
        let n = d.len();
        let m = 0.3;
        let nf = NuisanceFit {
            e_hat: vec![0.5; n],
            mu_hat: vec![m; n],
            mu0_hat: vec![m; n],
            mu1_hat: vec![m; n],
            folds: crate::data::split_folds(&d, 2, 0).unwrap(),
            config: NuisanceConfig::default(),
            hyper: vec![],
        };
        let rows = method_rows(&d, &nf, &quick(Method::Oa)).unwrap();
        for (k, o) in d.observations().iter().enumerate() {
            let want = 2.0 * (2.0 * o.a() - 1.0) * (o.time.ln() - m);
            assert!((rows.response[k] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn fits_are_deterministic_and_stationary() {
        let d = small(400, true, 6);
        for method in [Method::Rl, Method::Oa, Method::Gm01] {
            for tuning in [TuningMethod::Cv, TuningMethod::Bic] {
                let cfg = FitConfig {
                    tuning,
                    ..quick(method)
                };
                let a = fit(&d, &cfg).unwrap();
                assert_eq!(a, fit(&d, &cfg).unwrap());
                assert!(a.kkt_violation < 1e-6, "{method} {tuning:?}: {}", a.kkt_violation);
            }
        }
    }

    #[test]
    fn fixed_tuning_reproduces_the_point_fit() {
        let d = small(400, true, 7);
        let cfg = quick(Method::Rl);
        let point = fit(&d, &cfg).unwrap();
        let again = fit(
            &d,
            &FitConfig {
                fixed: Some(point.fixed_tuning()),
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(again.coefficients.theta(), point.coefficients.theta());
    }

    #[test]
    fn verdict_follows_beta_support() {
        let d = small(600, true, 8);
        let f = fit(&d, &quick(Method::Rl)).unwrap();
        let v = detect_confounding(&f);
        assert_eq!(v.confounded, !f.support_beta.is_empty());
        let beta = f.beta().unwrap();
        assert!(v.support_beta.iter().all(|&k| beta[k] != 0.0));
        assert!(f.support_beta.iter().all(|&k| k > 0));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            let text = format!("{m:?}");
            assert_eq!(text.parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }
}
