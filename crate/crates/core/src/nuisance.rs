//! Cross-fitted nuisance functions: the propensity score `e(X, S)` and the
//! conditional log-time means `μ(X, S)`, `μ0(X, S)`, `μ1(X, S)`.
//!
//! Default learners are ridge-penalized: a logistic model of the treatment
//! per data source, and a Stute-weighted linear model of `log T` on
//! `(1, X, S, S·X)`. Anything implementing [`Predictor`] can stand in for
//! them.

use serde::{Deserialize, Serialize};

use crate::data::{split_folds, Dataset, FoldAssignment, Observation};
use crate::error::{Error, Result};
use crate::linalg::{dot, solve_spd};
use crate::stute::compute_weights;

/// Out-of-sample prediction for one observation.
pub trait Predictor: Send + Sync {
    fn predict(&self, o: &Observation) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropensityMode {
    /// Constant randomization probabilities per source.
    KnownConstant,
    /// Ridge-penalized logistic regression per source. A supplied known
    /// value still takes precedence for its own source.
    PenalizedLogistic,
}

/// How `μ(X,S)` is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanMode {
    /// One linear model of `log T` over both arms.
    Pooled,
    /// `ê·μ̂1 + (1 − ê)·μ̂0` from the arm-specific models.
    ArmComposite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuisanceConfig {
    pub k_folds: usize,
    pub propensity_mode: PropensityMode,
    /// Randomization probability in the trial.
    pub known_e1: Option<f64>,
    /// Treatment probability in the real-world source.
    pub known_e0: Option<f64>,
    /// Candidate ridge levels, shared by the logistic and linear learners.
    pub ridge_grid: Vec<f64>,
    pub clip: f64,
    /// Adds `S·X` to the mean-model basis.
    pub source_interactions: bool,
    pub mean_mode: MeanMode,
    /// Folds of the internal weighted CV that picks the mean-model ridge.
    pub inner_folds: usize,
    /// Skips hyperparameter search and uses these levels.
    pub fixed: Option<NuisanceHyper>,
}

impl Default for NuisanceConfig {
    fn default() -> Self {
        Self {
            k_folds: 2,
            propensity_mode: PropensityMode::PenalizedLogistic,
            known_e1: None,
            known_e0: None,
            ridge_grid: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            clip: 0.01,
            source_interactions: true,
            mean_mode: MeanMode::ArmComposite,
            inner_folds: 5,
            fixed: None,
        }
    }
}

impl NuisanceConfig {
    pub fn validate(&self) -> Result<()> {
        for known in [self.known_e1, self.known_e0].into_iter().flatten() {
            if !(known > 0.0 && known < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "known propensity must lie in (0, 1), got {known}"
                )));
            }
        }
        if self.propensity_mode == PropensityMode::KnownConstant
            && (self.known_e1.is_none() || self.known_e0.is_none())
        {
            return Err(Error::InvalidArgument(
                "known-constant propensity needs both known_e1 and known_e0".into(),
            ));
        }
        if !(self.clip > 0.0 && self.clip < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "clip must lie in (0, 0.5), got {}",
                self.clip
            )));
        }
        if self.ridge_grid.is_empty() || self.ridge_grid.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::InvalidArgument("ridge grid must be nonempty and >= 0".into()));
        }
        if self.inner_folds < 2 {
            return Err(Error::InvalidArgument("inner_folds must be >= 2".into()));
        }
        Ok(())
    }

    fn known_for(&self, source: bool) -> Option<f64> {
        if source {
            self.known_e1
        } else {
            self.known_e0
        }
    }
}

/// Ridge levels chosen by the learners' internal selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuisanceHyper {
    /// Indexed by source (`[RWD, RCT]`); `None` where a constant is used.
    pub propensity_ridge: [Option<f64>; 2],
    /// Pooled-model ridge; 0 under the arm-composite mean.
    pub mean_ridge: f64,
    pub mean0_ridge: f64,
    pub mean1_ridge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum StratumPropensity {
    Constant(f64),
    Logistic {
        center: Vec<f64>,
        scale: Vec<f64>,
        /// Intercept first, then one slope per standardized covariate.
        coef: Vec<f64>,
        ridge: f64,
    },
}

/// Propensity model with one component per data source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityModel {
    strata: [StratumPropensity; 2],
    clip: f64,
}

impl PropensityModel {
    fn ridge(&self) -> [Option<f64>; 2] {
        self.strata.clone().map(|s| match s {
            StratumPropensity::Constant(_) => None,
            StratumPropensity::Logistic { ridge, .. } => Some(ridge),
        })
    }
}

impl Predictor for PropensityModel {
    fn predict(&self, o: &Observation) -> f64 {
        let raw = match &self.strata[usize::from(o.source)] {
            StratumPropensity::Constant(e) => *e,
            StratumPropensity::Logistic {
                center,
                scale,
                coef,
                ..
            } => {
                let eta = coef[0]
                    + o.covariates
                        .iter()
                        .zip(center)
                        .zip(scale)
                        .zip(&coef[1..])
                        .map(|(((x, c), s), b)| (x - c) * s * b)
                        .sum::<f64>();
                1.0 / (1.0 + (-eta).exp())
            }
        };
        raw.clamp(self.clip, 1.0 - self.clip)
    }
}

/// Standardizing map for the logistic learner; zero-variance covariates get
/// scale 0 and therefore drop out.
fn standardizer(d: &Dataset, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let p = d.p();
    let n = rows.len() as f64;
    let mut center = vec![0.0; p];
    for &i in rows {
        for (c, x) in center.iter_mut().zip(&d.get(i).covariates) {
            *c += x / n;
        }
    }
    let mut var = vec![0.0; p];
    for &i in rows {
        for ((v, x), c) in var.iter_mut().zip(&d.get(i).covariates).zip(&center) {
            *v += (x - c) * (x - c) / n;
        }
    }
    let scale = var
        .iter()
        .map(|&v| if v > 1e-12 { 1.0 / v.sqrt() } else { 0.0 })
        .collect();
    (center, scale)
}

/// Ridge logistic regression by damped Newton steps. Minimizes the mean
/// negative log-likelihood plus `½·ridge·‖slopes‖²`.
fn fit_logistic(features: &[Vec<f64>], labels: &[f64], ridge: f64) -> Vec<f64> {
    let n = features.len() as f64;
    let m = features[0].len();
    let objective = |b: &[f64]| -> f64 {
        let nll: f64 = features
            .iter()
            .zip(labels)
            .map(|(x, &y)| {
                let eta = dot(x, b);
                // log(1 + e^η) − yη, written to avoid overflow.
                eta.max(0.0) + (-eta.abs()).exp().ln_1p() - y * eta
            })
            .sum::<f64>()
            / n;
        nll + 0.5 * ridge * b[1..].iter().map(|v| v * v).sum::<f64>()
    };
    let mut beta = vec![0.0; m];
    let mut current = objective(&beta);
    for _ in 0..100 {
        let mut grad = vec![0.0; m];
        let mut hess = vec![0.0; m * m];
        for (x, &y) in features.iter().zip(labels) {
            let prob = 1.0 / (1.0 + (-dot(x, &beta)).exp());
            let curvature = (prob * (1.0 - prob)).max(1e-10);
            for j in 0..m {
                grad[j] += (prob - y) * x[j] / n;
                let xj = curvature * x[j] / n;
                for k in j..m {
                    hess[j * m + k] += xj * x[k];
                }
            }
        }
        for j in 0..m {
            for k in 0..j {
                hess[j * m + k] = hess[k * m + j];
            }
        }
        for j in 1..m {
            grad[j] += ridge * beta[j];
            hess[j * m + j] += ridge;
        }
        let Ok(step) = solve_spd(&hess, &grad) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b - t * s).collect();
            let value = objective(&trial);
            if value <= current {
                let change = step.iter().map(|s| (t * s).abs()).fold(0.0, f64::max);
                beta = trial;
                current = value;
                accepted = change > 1e-9;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    beta
}

fn logistic_features(d: &Dataset, rows: &[usize], center: &[f64], scale: &[f64]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|&i| {
            std::iter::once(1.0)
                .chain(
                    d.get(i)
                        .covariates
                        .iter()
                        .zip(center)
                        .zip(scale)
                        .map(|((x, c), s)| (x - c) * s),
                )
                .collect()
        })
        .collect()
}

fn heldout_loglik(features: &[Vec<f64>], labels: &[f64], coef: &[f64]) -> f64 {
    features
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let eta = dot(x, coef);
            y * eta - (eta.max(0.0) + (-eta.abs()).exp().ln_1p())
        })
        .sum()
}

fn has_both_arms(d: &Dataset, rows: &[usize]) -> bool {
    let treated = rows.iter().filter(|&&i| d.get(i).treatment).count();
    treated > 0 && treated < rows.len()
}

fn fit_stratum_logistic(
    d: &Dataset,
    rows: &[usize],
    grid: &[f64],
    fixed: Option<f64>,
) -> StratumPropensity {
    let (center, scale) = standardizer(d, rows);
    let labels = |rs: &[usize]| -> Vec<f64> { rs.iter().map(|&i| d.get(i).a()).collect() };
    let ridge = fixed.unwrap_or_else(|| {
        // Every fifth training row is held out to score the ridge levels.
        let mut fit_rows = Vec::new();
        let mut held = Vec::new();
        for (pos, &i) in rows.iter().enumerate() {
            if pos % 5 == 4 {
                held.push(i);
            } else {
                fit_rows.push(i);
            }
        }
        let largest = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if held.is_empty() || !has_both_arms(d, &fit_rows) {
            return largest;
        }
        let fit_x = logistic_features(d, &fit_rows, &center, &scale);
        let fit_y = labels(&fit_rows);
        let held_x = logistic_features(d, &held, &center, &scale);
        let held_y = labels(&held);
        let mut ordered: Vec<f64> = grid.to_vec();
        ordered.sort_by(|a, b| b.total_cmp(a));
        let mut best = (f64::NEG_INFINITY, largest);
        for ridge in ordered {
            let coef = fit_logistic(&fit_x, &fit_y, ridge.max(1e-8));
            let score = heldout_loglik(&held_x, &held_y, &coef);
            if score > best.0 {
                best = (score, ridge);
            }
        }
        best.1
    });
    let coef = fit_logistic(
        &logistic_features(d, rows, &center, &scale),
        &labels(rows),
        ridge.max(1e-8),
    );
    StratumPropensity::Logistic {
        center,
        scale,
        coef,
        ridge,
    }
}

/// Fits `e(X, S)` on `train_idx`.
pub fn fit_propensity(d: &Dataset, train_idx: &[usize], cfg: &NuisanceConfig) -> Result<PropensityModel> {
    cfg.validate()?;
    fit_propensity_inner(d, train_idx, cfg, cfg.fixed.map(|h| h.propensity_ridge))
}

fn fit_propensity_inner(
    d: &Dataset,
    train_idx: &[usize],
    cfg: &NuisanceConfig,
    fixed: Option<[Option<f64>; 2]>,
) -> Result<PropensityModel> {
    if train_idx.is_empty() {
        return Err(Error::EmptySubset("propensity training set".into()));
    }
    let pooled = train_idx.iter().map(|&i| d.get(i).a()).sum::<f64>() / train_idx.len() as f64;
    let mut strata = [
        StratumPropensity::Constant(pooled),
        StratumPropensity::Constant(pooled),
    ];
    for source in [false, true] {
        let slot = usize::from(source);
        if let Some(known) = cfg.known_for(source) {
            strata[slot] = StratumPropensity::Constant(known);
            continue;
        }
        let rows: Vec<usize> = train_idx
            .iter()
            .copied()
            .filter(|&i| d.get(i).source == source)
            .collect();
        if rows.is_empty() {
            // No rows to learn from and none to predict for.
            continue;
        }
        if !has_both_arms(d, &rows) {
            return Err(Error::SingleArmStratum(u8::from(source)));
        }
        strata[slot] =
            fit_stratum_logistic(d, &rows, &cfg.ridge_grid, fixed.and_then(|f| f[slot]));
    }
    Ok(PropensityModel {
        strata,
        clip: cfg.clip,
    })
}

/// Linear predictor of `log T` on `(1, X, S[, S·X])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMeanModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub interactions: bool,
    pub ridge: f64,
}

fn mean_basis(o: &Observation, interactions: bool) -> Vec<f64> {
    let s = o.s();
    let mut b = Vec::with_capacity(2 * o.covariates.len() + 1);
    b.extend_from_slice(&o.covariates);
    b.push(s);
    if interactions {
        b.extend(o.covariates.iter().map(|x| s * x));
    }
    b
}

impl Predictor for LinearMeanModel {
    fn predict(&self, o: &Observation) -> f64 {
        self.intercept + dot(&mean_basis(o, self.interactions), &self.coef)
    }
}

/// Weighted, centered second moments reused across ridge levels.
struct WeightedMoments {
    x_mean: Vec<f64>,
    y_mean: f64,
    cov: Vec<f64>,
    cross: Vec<f64>,
}

fn weighted_moments(features: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<WeightedMoments> {
    let m = features.first().map_or(0, Vec::len);
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::AllCensored);
    }
    let mut x_mean = vec![0.0; m];
    let mut y_mean = 0.0;
    for ((x, &yi), &wi) in features.iter().zip(y).zip(w) {
        if wi > 0.0 {
            for (mj, xj) in x_mean.iter_mut().zip(x) {
                *mj += wi * xj / total;
            }
            y_mean += wi * yi / total;
        }
    }
    let mut cov = vec![0.0; m * m];
    let mut cross = vec![0.0; m];
    let mut centered = vec![0.0; m];
    for ((x, &yi), &wi) in features.iter().zip(y).zip(w) {
        if wi <= 0.0 {
            continue;
        }
        let a = wi / total;
        for j in 0..m {
            centered[j] = x[j] - x_mean[j];
        }
        let dy = yi - y_mean;
        for j in 0..m {
            let cj = a * centered[j];
            cross[j] += cj * dy;
            for k in j..m {
                cov[j * m + k] += cj * centered[k];
            }
        }
    }
    for j in 0..m {
        for k in 0..j {
            cov[j * m + k] = cov[k * m + j];
        }
    }
    Ok(WeightedMoments {
        x_mean,
        y_mean,
        cov,
        cross,
    })
}

/// Ridge solution with penalty `ridge·Σ var_j·b_j²`, which makes the level
/// scale free. Columns without weighted variance get coefficient 0.
fn ridge_from_moments(mom: &WeightedMoments, ridge: f64) -> Result<(f64, Vec<f64>)> {
    let m = mom.x_mean.len();
    let active: Vec<usize> = (0..m).filter(|&j| mom.cov[j * m + j] > 1e-12).collect();
    let k = active.len();
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for (r, &j) in active.iter().enumerate() {
        b[r] = mom.cross[j];
        for (c, &l) in active.iter().enumerate() {
            a[r * k + c] = mom.cov[j * m + l];
        }
        a[r * k + r] *= 1.0 + ridge;
    }
    let solved = solve_spd(&a, &b)?;
    let mut coef = vec![0.0; m];
    for (&j, v) in active.iter().zip(solved) {
        coef[j] = v;
    }
    let intercept = mom.y_mean - dot(&mom.x_mean, &coef);
    Ok((intercept, coef))
}

fn stute_weights_for(d: &Dataset, rows: &[usize]) -> Result<Vec<f64>> {
    let times: Vec<f64> = rows.iter().map(|&i| d.get(i).time).collect();
    let deltas: Vec<bool> = rows.iter().map(|&i| d.get(i).status).collect();
    Ok(compute_weights(&times, &deltas)?.by_index())
}

/// Stute-weighted ridge regression of `log T` on the mean basis, fit on
/// `train_idx` with weights computed within that subset. The ridge level is
/// picked by weighted K-fold CV on the same subset.
pub fn fit_conditional_mean(
    d: &Dataset,
    train_idx: &[usize],
    cfg: &NuisanceConfig,
) -> Result<LinearMeanModel> {
    cfg.validate()?;
    fit_mean_inner(d, train_idx, cfg, cfg.fixed.map(|h| h.mean_ridge))
}

fn fit_mean_inner(
    d: &Dataset,
    train_idx: &[usize],
    cfg: &NuisanceConfig,
    fixed: Option<f64>,
) -> Result<LinearMeanModel> {
    if train_idx.is_empty() {
        return Err(Error::EmptySubset("mean-model training set".into()));
    }
    if !train_idx.iter().any(|&i| d.get(i).status) {
        return Err(Error::AllCensored);
    }
    let features: Vec<Vec<f64>> = train_idx
        .iter()
        .map(|&i| mean_basis(d.get(i), cfg.source_interactions))
        .collect();
    let y: Vec<f64> = train_idx.iter().map(|&i| d.get(i).time.ln()).collect();
    let ridge = match fixed {
        Some(r) => r,
        None => select_mean_ridge(d, train_idx, &features, &y, cfg)?,
    };
    let w = stute_weights_for(d, train_idx)?;
    let mom = weighted_moments(&features, &y, &w)?;
    let (intercept, coef) = ridge_from_moments(&mom, ridge)?;
    Ok(LinearMeanModel {
        intercept,
        coef,
        interactions: cfg.source_interactions,
        ridge,
    })
}

fn select_mean_ridge(
    d: &Dataset,
    train_idx: &[usize],
    features: &[Vec<f64>],
    y: &[f64],
    cfg: &NuisanceConfig,
) -> Result<f64> {
    let largest = cfg.ridge_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let events = train_idx.iter().filter(|&&i| d.get(i).status).count();
    let k = cfg.inner_folds;
    if events < 4 * k {
        return Ok(largest);
    }
    // Systematic folds over the time ordering spread censoring evenly.
    let times: Vec<f64> = train_idx.iter().map(|&i| d.get(i).time).collect();
    let deltas: Vec<bool> = train_idx.iter().map(|&i| d.get(i).status).collect();
    let order = crate::stute::time_order(&times, &deltas);
    let mut fold_of = vec![0; train_idx.len()];
    for (rank, &pos) in order.iter().enumerate() {
        fold_of[pos] = rank % k;
    }
    let mut ordered = cfg.ridge_grid.clone();
    ordered.sort_by(|a, b| b.total_cmp(a));
    let mut scores = vec![0.0; ordered.len()];
    for f in 0..k {
        let (inner, held): (Vec<usize>, Vec<usize>) =
            (0..train_idx.len()).partition(|&pos| fold_of[pos] != f);
        let pick = |rows: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>, Vec<bool>) {
            (
                rows.iter().map(|&r| features[r].clone()).collect(),
                rows.iter().map(|&r| y[r]).collect(),
                rows.iter().map(|&r| times[r]).collect(),
                rows.iter().map(|&r| deltas[r]).collect(),
            )
        };
        let (fx, fy, ft, fd) = pick(&inner);
        let (hx, hy, ht, hd) = pick(&held);
        let w_fit = compute_weights(&ft, &fd)?.by_index();
        let w_held = compute_weights(&ht, &hd)?.by_index();
        let mom = weighted_moments(&fx, &fy, &w_fit)?;
        for (score, &ridge) in scores.iter_mut().zip(&ordered) {
            let (b0, b) = ridge_from_moments(&mom, ridge)?;
            *score += hx
                .iter()
                .zip(&hy)
                .zip(&w_held)
                .filter(|(_, &w)| w > 0.0)
                .map(|((x, yi), w)| {
                    let r = yi - b0 - dot(x, &b);
                    w * r * r
                })
                .sum::<f64>();
        }
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    Ok(ordered[best])
}

/// Out-of-fold nuisance predictions for every observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuisanceFit {
    pub e_hat: Vec<f64>,
    pub mu_hat: Vec<f64>,
    pub mu0_hat: Vec<f64>,
    pub mu1_hat: Vec<f64>,
    pub folds: FoldAssignment,
    pub config: NuisanceConfig,
    /// Hyperparameters chosen in each fold's training complement.
    pub hyper: Vec<NuisanceHyper>,
}

impl NuisanceFit {
    /// Levels from the first fold, used to freeze hyperparameters in
    /// resampling replicates.
    pub fn representative_hyper(&self) -> NuisanceHyper {
        self.hyper[0]
    }

    /// Short fingerprint of the configuration and chosen levels.
    pub fn digest(&self) -> String {
        let h = self.representative_hyper();
        format!(
            "K={} mode={:?} clip={} interactions={} ridge(e)={:?} ridge(mu,mu0,mu1)=({},{},{})",
            self.config.k_folds,
            self.config.propensity_mode,
            self.config.clip,
            self.config.source_interactions,
            h.propensity_ridge,
            h.mean_ridge,
            h.mean0_ridge,
            h.mean1_ridge
        )
    }
}

/// K-fold cross-fitting of all nuisance functions.
pub fn cross_fit(d: &Dataset, cfg: &NuisanceConfig, seed: u64) -> Result<NuisanceFit> {
    cfg.validate()?;
    let folds = split_folds(d, cfg.k_folds, seed)?;
    let n = d.len();
    let mut fit = NuisanceFit {
        e_hat: vec![f64::NAN; n],
        mu_hat: vec![f64::NAN; n],
        mu0_hat: vec![f64::NAN; n],
        mu1_hat: vec![f64::NAN; n],
        folds: folds.clone(),
        config: cfg.clone(),
        hyper: Vec::with_capacity(folds.k),
    };
    for f in 0..folds.k {
        let train = folds.complement(f);
        let held = folds.fold(f);
        let fixed = cfg.fixed;
        let propensity = fit_propensity_inner(d, &train, cfg, fixed.map(|h| h.propensity_ridge))?;
        let mean = match cfg.mean_mode {
            MeanMode::Pooled => Some(fit_mean_inner(d, &train, cfg, fixed.map(|h| h.mean_ridge))?),
            MeanMode::ArmComposite => None,
        };
        let arm = |a: bool| -> Vec<usize> {
            train.iter().copied().filter(|&i| d.get(i).treatment == a).collect()
        };
        let mean0 = fit_mean_inner(d, &arm(false), cfg, fixed.map(|h| h.mean0_ridge))?;
        let mean1 = fit_mean_inner(d, &arm(true), cfg, fixed.map(|h| h.mean1_ridge))?;
        for &i in &held {
            let o = d.get(i);
            let (e, m0, m1) = (propensity.predict(o), mean0.predict(o), mean1.predict(o));
            fit.e_hat[i] = e;
            fit.mu_hat[i] = match &mean {
                Some(m) => m.predict(o),
                None => e * m1 + (1.0 - e) * m0,
            };
            fit.mu0_hat[i] = m0;
            fit.mu1_hat[i] = m1;
        }
        fit.hyper.push(NuisanceHyper {
            propensity_ridge: propensity.ridge(),
            mean_ridge: mean.as_ref().map_or(0.0, |m| m.ridge),
            mean0_ridge: mean0.ridge,
            mean1_ridge: mean1.ridge,
        });
    }
    Ok(fit)
}
