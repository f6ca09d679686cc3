//! Doubly penalized Kaplan-Meier-weighted least squares.
//!
//! The design has one block of `p + 1` columns for the treatment effect
//! (intercept first) and, optionally, a second block of the same size that is
//! switched on only for real-world rows. Columns are standardized so that
//! `Σ w·x² = 1`; penalties act on the standardized coefficients and results
//! are reported on the original scale. The solver runs cyclic coordinate
//! descent on the weighted Gram matrix.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Observation};
use crate::error::{Error, Result};
use crate::nuisance::NuisanceFit;
use crate::penalty::{rho_unchecked, update_unchecked, PenaltySpec};
use crate::stute::{compute_weights_with, WeightVector};

/// Column layout of the two coefficient blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    /// Covariates per block, intercept excluded.
    pub p: usize,
    pub has_beta: bool,
    pub penalize_intercepts: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Alpha,
    Beta,
}

impl BlockLayout {
    /// Columns per block, intercept included.
    pub fn q(&self) -> usize {
        self.p + 1
    }

    pub fn width(&self) -> usize {
        if self.has_beta {
            2 * self.q()
        } else {
            self.q()
        }
    }

    pub fn block(&self, j: usize) -> Block {
        if j < self.q() {
            Block::Alpha
        } else {
            Block::Beta
        }
    }

    fn is_intercept(&self, j: usize) -> bool {
        j % self.q() == 0
    }

    pub fn is_penalized(&self, j: usize) -> bool {
        self.penalize_intercepts || !self.is_intercept(j)
    }

    /// Position in the adaptive-weight vector, `None` for intercepts.
    fn weight_index(&self, j: usize) -> Option<usize> {
        let q = self.q();
        let within = j % q;
        (within > 0).then(|| (j / q) * self.p + within - 1)
    }

    fn factor(&self, j: usize, spec: &PenaltySpec) -> f64 {
        match self.weight_index(j) {
            Some(k) => spec.factor(k),
            None => 1.0,
        }
    }
}

/// Per-row ingredients of a weighted least-squares problem. Row `i` of the
/// design is `m_i·(1, x_i)` followed, when the β block is present, by
/// `m_i·(1 − s_i)·(1, x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRows {
    pub layout: BlockLayout,
    pub times: Vec<f64>,
    pub statuses: Vec<bool>,
    pub response: Vec<f64>,
    pub multiplier: Vec<f64>,
    pub source: Vec<bool>,
    pub covariates: Vec<Vec<f64>>,
    /// `(S, A)` cell per row, used to stratify tuning folds.
    pub labels: Vec<u8>,
}

impl DesignRows {
    /// Rows built from `idx` of `d`; `f` maps an observation and its index to
    /// `(response, multiplier)`.
    pub fn build(
        d: &Dataset,
        idx: &[usize],
        layout: BlockLayout,
        mut f: impl FnMut(usize, &Observation) -> (f64, f64),
    ) -> Self {
        let mut rows = Self {
            layout,
            times: Vec::with_capacity(idx.len()),
            statuses: Vec::with_capacity(idx.len()),
            response: Vec::with_capacity(idx.len()),
            multiplier: Vec::with_capacity(idx.len()),
            source: Vec::with_capacity(idx.len()),
            covariates: Vec::with_capacity(idx.len()),
            labels: Vec::with_capacity(idx.len()),
        };
        for &i in idx {
            let o = d.get(i);
            let (y, m) = f(i, o);
            rows.times.push(o.time);
            rows.statuses.push(o.status);
            rows.response.push(y);
            rows.multiplier.push(m);
            rows.source.push(o.source);
            rows.covariates.push(o.covariates.clone());
            rows.labels.push(o.stratum());
        }
        rows
    }

    /// Robinson-residualized rows: response `log T − μ̂`, multiplier `A − ê`.
    pub fn residualized(d: &Dataset, nf: &NuisanceFit, layout: BlockLayout) -> Result<Self> {
        if nf.e_hat.len() != d.len() || nf.mu_hat.len() != d.len() {
            return Err(Error::DimensionMismatch(format!(
                "nuisance fit covers {} rows, dataset has {}",
                nf.e_hat.len(),
                d.len()
            )));
        }
        let all: Vec<usize> = (0..d.len()).collect();
        Ok(Self::build(d, &all, layout, |i, o| {
            (o.time.ln() - nf.mu_hat[i], o.a() - nf.e_hat[i])
        }))
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        let q = self.layout.q();
        let m = self.multiplier[i];
        out[0] = m;
        for (o, x) in out[1..q].iter_mut().zip(&self.covariates[i]) {
            *o = m * x;
        }
        if self.layout.has_beta {
            let rwd = if self.source[i] { 0.0 } else { 1.0 };
            for j in 0..q {
                out[q + j] = rwd * out[j];
            }
        }
    }

    /// Design row `i` on the original scale.
    pub fn row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.width()];
        self.fill_row(i, &mut out);
        out
    }
}

/// Weighted least-squares problem in standardized form.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    pub layout: BlockLayout,
    /// Row ids into the originating [`DesignRows`], in Stute order.
    pub order: Vec<usize>,
    pub response: Vec<f64>,
    /// Row-major `n × width`, original scale.
    pub design: Vec<f64>,
    pub weights: Vec<f64>,
    /// `sqrt(Σ w·x²)` per column; 0 marks an inactive column.
    pub col_scale: Vec<f64>,
    gram: Vec<f64>,
    xty: Vec<f64>,
    yty: f64,
}

impl RegressionProblem {
    /// Problem over `subset` (all rows when `None`), with Stute weights
    /// computed within the subset.
    pub fn from_rows(rows: &DesignRows, subset: Option<&[usize]>) -> Result<Self> {
        Self::from_rows_with(rows, subset, false)
    }

    pub fn from_rows_with(
        rows: &DesignRows,
        subset: Option<&[usize]>,
        redistribute_last: bool,
    ) -> Result<Self> {
        let idx: Vec<usize> = match subset {
            Some(s) => s.to_vec(),
            None => (0..rows.len()).collect(),
        };
        if idx.is_empty() {
            return Err(Error::EmptySubset("regression rows".into()));
        }
        let times: Vec<f64> = idx.iter().map(|&i| rows.times[i]).collect();
        let deltas: Vec<bool> = idx.iter().map(|&i| rows.statuses[i]).collect();
        let w = compute_weights_with(&times, &deltas, redistribute_last)?;
        Ok(Self::with_weights(rows, &idx, &w))
    }

    /// Problem over `idx` with weights aligned to `idx` through `w.order`.
    pub fn with_weights(rows: &DesignRows, idx: &[usize], w: &WeightVector) -> Self {
        let layout = rows.layout;
        let m = layout.width();
        let n = w.order.len();
        let mut order = Vec::with_capacity(n);
        let mut response = Vec::with_capacity(n);
        let mut design = vec![0.0; n * m];
        let mut weights = Vec::with_capacity(n);
        let mut gram = vec![0.0; m * m];
        let mut xty = vec![0.0; m];
        let mut yty = 0.0;
        for (pos, (&k, &wk)) in w.order.iter().zip(&w.weights).enumerate() {
            let i = idx[k];
            let row = &mut design[pos * m..(pos + 1) * m];
            rows.fill_row(i, row);
            let y = rows.response[i];
            order.push(i);
            response.push(y);
            weights.push(wk);
            if wk > 0.0 {
                yty += wk * y * y;
                for j in 0..m {
                    let wx = wk * row[j];
                    if wx == 0.0 {
                        continue;
                    }
                    xty[j] += wx * y;
                    for l in j..m {
                        gram[j * m + l] += wx * row[l];
                    }
                }
            }
        }
        let total: f64 = weights.iter().sum();
        let col_scale: Vec<f64> = (0..m)
            .map(|j| {
                let v = gram[j * m + j];
                if v > 1e-13 * total.max(f64::MIN_POSITIVE) {
                    v.sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        for j in 0..m {
            for l in j..m {
                let s = col_scale[j] * col_scale[l];
                let v = if s > 0.0 { gram[j * m + l] / s } else { 0.0 };
                gram[j * m + l] = v;
                gram[l * m + j] = v;
            }
            xty[j] = if col_scale[j] > 0.0 {
                xty[j] / col_scale[j]
            } else {
                0.0
            };
        }
        Self {
            layout,
            order,
            response,
            design,
            weights,
            col_scale,
            gram,
            xty,
            yty,
        }
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn width(&self) -> usize {
        self.layout.width()
    }

    pub fn is_active(&self, j: usize) -> bool {
        self.col_scale[j] > 0.0
    }

    /// Rows carrying positive weight.
    pub fn effective_n(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn weight_total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Errors when no effect-block column carries weighted variation.
    pub fn check_identifiable(&self) -> Result<()> {
        if (0..self.layout.q()).any(|j| self.is_active(j)) {
            Ok(())
        } else {
            Err(Error::DegenerateResidualTreatment)
        }
    }

    fn to_std(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().zip(&self.col_scale).map(|(t, s)| t * s).collect()
    }

    fn from_std(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.col_scale)
            .map(|(t, s)| if *s > 0.0 { t / s } else { 0.0 })
            .collect()
    }

    /// `Σ w (y − xθ)²` from the Gram matrix, `θ` on the original scale.
    pub fn weighted_rss(&self, theta: &[f64]) -> f64 {
        let t = self.to_std(theta);
        self.rss_std(&t)
    }

    fn rss_std(&self, t: &[f64]) -> f64 {
        let m = self.width();
        let mut quad = 0.0;
        for j in 0..m {
            if t[j] == 0.0 {
                continue;
            }
            let row = &self.gram[j * m..(j + 1) * m];
            quad += t[j] * row.iter().zip(t).map(|(g, v)| g * v).sum::<f64>();
        }
        let lin: f64 = self.xty.iter().zip(t).map(|(c, v)| c * v).sum();
        (self.yty - 2.0 * lin + quad).max(0.0)
    }

    /// `Σ w (y − xθ)²` summed row by row.
    pub fn weighted_rss_direct(&self, theta: &[f64]) -> f64 {
        let m = self.width();
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(pos, &w)| {
                let row = &self.design[pos * m..(pos + 1) * m];
                let r = self.response[pos] - row.iter().zip(theta).map(|(x, t)| x * t).sum::<f64>();
                w * r * r
            })
            .sum()
    }

    fn lambdas(&self, lambda1: f64, lambda2: f64, spec: &PenaltySpec) -> Vec<f64> {
        (0..self.width())
            .map(|j| {
                if !self.layout.is_penalized(j) {
                    return 0.0;
                }
                let base = match self.layout.block(j) {
                    Block::Alpha => lambda1,
                    Block::Beta => lambda2,
                };
                if base == 0.0 {
                    0.0
                } else {
                    base * self.layout.factor(j, spec)
                }
            })
            .collect()
    }

    fn penalty_std(&self, t: &[f64], lambdas: &[f64], spec: &PenaltySpec) -> f64 {
        t.iter()
            .zip(lambdas)
            .enumerate()
            .filter(|(j, (v, _))| self.layout.is_penalized(*j) && **v != 0.0)
            .map(|(_, (v, l))| rho_unchecked(v.abs(), *l, spec.family, spec.gamma).0)
            .sum()
    }

    /// Penalized objective at `c`, re-evaluated row by row.
    pub fn objective(&self, c: &Coefficients, lambda1: f64, lambda2: f64, spec: &PenaltySpec) -> f64 {
        let theta = c.theta();
        let lambdas = self.lambdas(lambda1, lambda2, spec);
        self.weighted_rss_direct(&theta) + self.penalty_std(&self.to_std(&theta), &lambdas, spec)
    }

    fn coefficients(&self, t_std: &[f64], objective: f64, iterations: usize, converged: bool, trace: Vec<f64>) -> Coefficients {
        let theta = self.from_std(t_std);
        let q = self.layout.q();
        Coefficients {
            alpha: theta[..q].to_vec(),
            beta: self.layout.has_beta.then(|| theta[q..].to_vec()),
            objective,
            iterations,
            converged,
            trace,
        }
    }
}

impl RegressionProblem {
    /// Ridge solution in standardized units, penalty `ridge·‖θ̃‖²` on the
    /// penalized active columns. Inactive columns stay 0.
    pub fn ridge_pilot(&self, ridge: f64) -> Result<Vec<f64>> {
        let m = self.width();
        let active: Vec<usize> = (0..m).filter(|&j| self.is_active(j)).collect();
        let k = active.len();
        let mut a = vec![0.0; k * k];
        let mut b = vec![0.0; k];
        for (r, &j) in active.iter().enumerate() {
            b[r] = self.xty[j];
            for (c, &l) in active.iter().enumerate() {
                a[r * k + c] = self.gram[j * m + l];
            }
            if self.layout.is_penalized(j) {
                a[r * k + r] += ridge;
            }
        }
        let solved = crate::linalg::solve_spd(&a, &b)?;
        let mut out = vec![0.0; m];
        for (&j, v) in active.iter().zip(solved) {
            out[j] = v;
        }
        Ok(out)
    }

    /// Adaptive-lasso multipliers `1/|pilot|` from a ridge pilot, laid out
    /// as [`PenaltySpec::adaptive_weights`] expects.
    pub fn adaptive_weights(&self, ridge: f64) -> Result<Vec<f64>> {
        let pilot = self.ridge_pilot(ridge)?;
        let p = self.layout.p;
        let mut w = vec![1.0; 2 * p];
        for (j, v) in pilot.iter().enumerate() {
            if let Some(k) = self.layout.weight_index(j) {
                w[k] = if *v != 0.0 { 1.0 / v.abs() } else { f64::INFINITY };
            }
        }
        Ok(w)
    }
}

/// Builds the residualized problem of the full sample under weights `w`.
pub fn assemble_design(
    d: &Dataset,
    nf: &NuisanceFit,
    w: &WeightVector,
    layout: BlockLayout,
) -> Result<RegressionProblem> {
    if w.len() != d.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} rows",
            w.len(),
            d.len()
        )));
    }
    if layout.p != d.p() {
        return Err(Error::DimensionMismatch(format!(
            "layout has p = {}, dataset p = {}",
            layout.p,
            d.p()
        )));
    }
    let rows = DesignRows::residualized(d, nf, layout)?;
    let all: Vec<usize> = (0..d.len()).collect();
    let prob = RegressionProblem::with_weights(&rows, &all, w);
    prob.check_identifiable()?;
    Ok(prob)
}

/// Fitted coefficients on the original scale; index 0 of each block is the
/// intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub alpha: Vec<f64>,
    pub beta: Option<Vec<f64>>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each full cycle.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

impl Coefficients {
    pub fn theta(&self) -> Vec<f64> {
        let mut t = self.alpha.clone();
        if let Some(b) = &self.beta {
            t.extend(b);
        }
        t
    }

    pub fn nonzero_count(&self) -> usize {
        self.theta().iter().filter(|v| **v != 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 10_000,
        }
    }
}

fn cd_std(
    prob: &RegressionProblem,
    lambdas: &[f64],
    mut theta: Vec<f64>,
    spec: &PenaltySpec,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, f64, usize, bool, Vec<f64>)> {
    let m = prob.width();
    let g_mat = &prob.gram;
    for j in 0..m {
        if !prob.is_active(j) {
            theta[j] = 0.0;
        }
    }
    // g = c − Gθ, kept current after every coordinate move.
    let mut g: Vec<f64> = (0..m)
        .map(|j| {
            prob.xty[j]
                - g_mat[j * m..(j + 1) * m]
                    .iter()
                    .zip(&theta)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        })
        .collect();
    let objective = |theta: &[f64], g: &[f64]| -> f64 {
        let fit: f64 = theta
            .iter()
            .zip(g)
            .zip(&prob.xty)
            .map(|((t, gj), c)| t * (gj + c))
            .sum();
        (prob.yty - fit).max(0.0) + prob.penalty_std(theta, lambdas, spec)
    };
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut value = objective(&theta, &g);
    while iterations < opts.max_iter {
        iterations += 1;
        let mut max_change = 0.0f64;
        for j in 0..m {
            if !prob.is_active(j) {
                continue;
            }
            let gjj = g_mat[j * m + j];
            let z = g[j] + gjj * theta[j];
            let new = if prob.layout.is_penalized(j) {
                update_unchecked(2.0 * z, 2.0 * gjj, lambdas[j], spec.family, spec.gamma)
            } else {
                z / gjj
            };
            let delta = new - theta[j];
            if delta != 0.0 {
                theta[j] = new;
                for (gk, gkj) in g.iter_mut().zip(&g_mat[j * m..(j + 1) * m]) {
                    *gk -= gkj * delta;
                }
                max_change = max_change.max(delta.abs());
            }
        }
        value = objective(&theta, &g);
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        trace.push(value);
        if max_change < opts.tol {
            converged = true;
            break;
        }
    }
    Ok((theta, value, iterations, converged, trace))
}

/// Minimizes the penalized objective at `(λ1, λ2)`, starting from `init`
/// (zeros when absent).
pub fn coordinate_descent(
    prob: &RegressionProblem,
    lambda1: f64,
    lambda2: f64,
    init: Option<&Coefficients>,
    spec: &PenaltySpec,
    opts: &SolverOptions,
) -> Result<Coefficients> {
    spec.validate()?;
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
        return Err(Error::InvalidArgument("lambdas must be >= 0".into()));
    }
    let start = match init {
        Some(c) => prob.to_std(&c.theta()),
        None => vec![0.0; prob.width()],
    };
    let lambdas = prob.lambdas(lambda1, lambda2, spec);
    let (t, value, iterations, converged, trace) = cd_std(prob, &lambdas, start, spec, opts)?;
    Ok(prob.coefficients(&t, value, iterations, converged, trace))
}

/// Stationarity residual of the penalized objective at `c`, in
/// standardized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub max_violation: f64,
    pub worst_column: Option<usize>,
}

pub fn kkt_check(
    prob: &RegressionProblem,
    c: &Coefficients,
    lambda1: f64,
    lambda2: f64,
    spec: &PenaltySpec,
) -> KktReport {
    let m = prob.width();
    let t = prob.to_std(&c.theta());
    let lambdas = prob.lambdas(lambda1, lambda2, spec);
    let mut report = KktReport {
        max_violation: 0.0,
        worst_column: None,
    };
    for j in (0..m).filter(|&j| prob.is_active(j)) {
        let g = prob.xty[j]
            - prob.gram[j * m..(j + 1) * m]
                .iter()
                .zip(&t)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        let violation = if !prob.layout.is_penalized(j) {
            (2.0 * g).abs()
        } else if t[j] == 0.0 {
            (2.0 * g.abs() - lambdas[j]).max(0.0)
        } else {
            let d = rho_unchecked(t[j].abs(), lambdas[j], spec.family, spec.gamma).1;
            (-2.0 * g + d * t[j].signum()).abs()
        };
        if violation > report.max_violation {
            report = KktReport {
                max_violation: violation,
                worst_column: Some(j),
            };
        }
    }
    report
}

/// Smallest `(λ1, λ2)` at which every penalized coordinate of the block is
/// zero, computed at the unpenalized intercept-only fit.
pub fn lambda_max(prob: &RegressionProblem, spec: &PenaltySpec) -> Result<(f64, f64)> {
    let m = prob.width();
    let lambdas: Vec<f64> = (0..m)
        .map(|j| {
            if prob.layout.is_penalized(j) {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect();
    let (t, ..) = cd_std(prob, &lambdas, vec![0.0; m], spec, &SolverOptions::default())?;
    let mut out = (0.0f64, 0.0f64);
    for j in (0..m).filter(|&j| prob.is_active(j) && prob.layout.is_penalized(j)) {
        let factor = prob.layout.factor(j, spec);
        if !(factor > 0.0) || factor.is_infinite() {
            continue;
        }
        let g = prob.xty[j]
            - prob.gram[j * m..(j + 1) * m]
                .iter()
                .zip(&t)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        // Nudged up so rounding cannot let a coordinate in at the top.
        let level = 2.0 * g.abs() / factor * (1.0 + 1e-9);
        match prob.layout.block(j) {
            Block::Alpha => out.0 = out.0.max(level),
            Block::Beta => out.1 = out.1.max(level),
        }
    }
    Ok(out)
}

/// Descending log-spaced grid from `top` down to `ratio·top`; a single zero
/// when the block has nothing to penalize.
pub fn log_grid(top: f64, len: usize, ratio: f64) -> Vec<f64> {
    if !(top > 0.0) || len == 0 {
        return vec![0.0];
    }
    if len == 1 {
        return vec![top];
    }
    let step = ratio.ln() / (len - 1) as f64;
    (0..len).map(|k| top * (step * k as f64).exp()).collect()
}

/// Default `(grid1, grid2)` for the problem.
pub fn default_grids(
    prob: &RegressionProblem,
    spec: &PenaltySpec,
    len: usize,
    ratio: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (top1, top2) = lambda_max(prob, spec)?;
    Ok((log_grid(top1, len, ratio), log_grid(top2, len, ratio)))
}

/// Solutions over the `grid1 × grid2` product in λ1-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub grid1: Vec<f64>,
    pub grid2: Vec<f64>,
    pub solutions: Vec<Coefficients>,
    pub df: Vec<usize>,
    /// Index of the solution each fit was warm-started from.
    pub warm_from: Vec<Option<usize>>,
}

impl PathResult {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.grid2.len() + j
    }

    pub fn get(&self, i: usize, j: usize) -> &Coefficients {
        &self.solutions[self.index(i, j)]
    }

    pub fn lambdas(&self, k: usize) -> (f64, f64) {
        let n2 = self.grid2.len();
        (self.grid1[k / n2], self.grid2[k % n2])
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::InvalidArgument("grid must be nonempty with lambdas >= 0".into()));
    }
    if grid.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("grid must be sorted descending".into()));
    }
    Ok(())
}

/// Warm-start source of `(i, j)`: its λ1 predecessor, or along λ2 in the
/// first row.
fn warm_source(i: usize, j: usize, n2: usize) -> Option<usize> {
    match (i, j) {
        (0, 0) => None,
        (0, j) => Some(j - 1),
        (i, j) => Some((i - 1) * n2 + j),
    }
}

pub fn solution_path(
    prob: &RegressionProblem,
    grid1: &[f64],
    grid2: &[f64],
    spec: &PenaltySpec,
    opts: &SolverOptions,
) -> Result<PathResult> {
    check_grid(grid1)?;
    check_grid(grid2)?;
    spec.validate()?;
    let n2 = grid2.len();
    let m = prob.width();
    let mut std_solutions: Vec<Vec<f64>> = Vec::with_capacity(grid1.len() * n2);
    let mut path = PathResult {
        grid1: grid1.to_vec(),
        grid2: grid2.to_vec(),
        solutions: Vec::with_capacity(grid1.len() * n2),
        df: Vec::with_capacity(grid1.len() * n2),
        warm_from: Vec::with_capacity(grid1.len() * n2),
    };
    for (i, &l1) in grid1.iter().enumerate() {
        for (j, &l2) in grid2.iter().enumerate() {
            let from = warm_source(i, j, n2);
            let start = from.map_or_else(|| vec![0.0; m], |k| std_solutions[k].clone());
            let lambdas = prob.lambdas(l1, l2, spec);
            let (t, value, iterations, converged, trace) = cd_std(prob, &lambdas, start, spec, opts)?;
            let c = prob.coefficients(&t, value, iterations, converged, trace);
            path.df.push(c.nonzero_count());
            path.solutions.push(c);
            path.warm_from.push(from);
            std_solutions.push(t);
        }
    }
    Ok(path)
}

/// The solution the full path would produce at `(i, j)`, computed along its
/// warm-start chain only.
pub fn solve_at(
    prob: &RegressionProblem,
    grid1: &[f64],
    grid2: &[f64],
    (i, j): (usize, usize),
    spec: &PenaltySpec,
    opts: &SolverOptions,
) -> Result<Coefficients> {
    check_grid(grid1)?;
    check_grid(grid2)?;
    spec.validate()?;
    if i >= grid1.len() || j >= grid2.len() {
        return Err(Error::InvalidArgument(format!("grid index ({i}, {j}) out of range")));
    }
    let mut chain: Vec<(usize, usize)> = (0..=j).map(|jj| (0, jj)).collect();
    chain.extend((1..=i).map(|ii| (ii, j)));
    let mut t = vec![0.0; prob.width()];
    let mut last = None;
    for (ii, jj) in chain {
        let lambdas = prob.lambdas(grid1[ii], grid2[jj], spec);
        let out = cd_std(prob, &lambdas, t, spec, opts)?;
        t = out.0.clone();
        last = Some(out);
    }
    let (t, value, iterations, converged, trace) = last.expect("chain is nonempty");
    Ok(prob.coefficients(&t, value, iterations, converged, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::solve_spd;
    use crate::penalty::PenaltySpec;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Random rows with a sparse truth; censoring when `censor` is set.
    fn random_rows(n: usize, p: usize, seed: u64, censor: bool, has_beta: bool) -> DesignRows {
        let mut rng = stream_rng(seed, 3);
        let layout = BlockLayout {
            p,
            has_beta,
            penalize_intercepts: false,
        };
        let mut rows = DesignRows {
            layout,
            times: vec![],
            statuses: vec![],
            response: vec![],
            multiplier: vec![],
            source: vec![],
            covariates: vec![],
            labels: vec![],
        };
        for i in 0..n {
            let x: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
            let a = rng.random_bool(0.5);
            let s = i % 3 == 0;
            let m = f64::from(u8::from(a)) - 0.5;
            let noise: f64 = rng.sample(StandardNormal);
            let y = m * (1.0 + 2.0 * x[0] - 1.5 * x[1]) + if s { 0.0 } else { m * x[2] } + 0.5 * noise;
            rows.times.push(rng.random_range(0.1..10.0));
            rows.statuses.push(!censor || rng.random_bool(0.7));
            rows.response.push(y);
            rows.multiplier.push(m);
            rows.source.push(s);
            rows.covariates.push(x);
            rows.labels.push(2 * u8::from(s) + u8::from(a));
        }
        rows
    }

    fn wls(prob: &RegressionProblem) -> Vec<f64> {
        let m = prob.width();
        let mut a = vec![0.0; m * m];
        let mut b = vec![0.0; m];
        for (pos, &w) in prob.weights.iter().enumerate() {
            let row = &prob.design[pos * m..(pos + 1) * m];
            for j in 0..m {
                b[j] += w * row[j] * prob.response[pos];
                for k in 0..m {
                    a[j * m + k] += w * row[j] * row[k];
                }
            }
        }
        solve_spd(&a, &b).unwrap()
    }

    #[test]
    fn zero_lambda_matches_weighted_least_squares() {
        for (seed, censor) in [(1, false), (2, true)] {
            let rows = random_rows(200, 5, seed, censor, true);
            let prob = RegressionProblem::from_rows(&rows, None).unwrap();
            let spec = PenaltySpec::default();
            let opts = SolverOptions { tol: 1e-12, max_iter: 100_000 };
            let c = coordinate_descent(&prob, 0.0, 0.0, None, &spec, &opts).unwrap();
            for (a, b) in c.theta().iter().zip(wls(&prob)) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
            assert!(kkt_check(&prob, &c, 0.0, 0.0, &spec).max_violation < 1e-8);
        }
    }

    #[test]
    fn huge_lambda_zeroes_penalized_columns() {
        let rows = random_rows(150, 4, 3, true, true);
        let prob = RegressionProblem::from_rows(&rows, None).unwrap();
        let spec = PenaltySpec::default();
        let (l1, l2) = lambda_max(&prob, &spec).unwrap();
        let c = coordinate_descent(&prob, l1 * 1.0001, l2 * 1.0001, None, &spec, &SolverOptions::default()).unwrap();
        let theta = c.theta();
        for (j, v) in theta.iter().enumerate() {
            if prob.layout.is_penalized(j) {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(c.alpha[0] != 0.0);
        // Slightly below the top, something enters.
        let c = coordinate_descent(&prob, l1 * 0.9, l2 * 0.9, None, &spec, &SolverOptions::default()).unwrap();
        assert!(c.nonzero_count() > 2);
    }

    #[test]
    fn trial_only_rows_leave_beta_inactive() {
        let mut rows = random_rows(100, 3, 4, false, true);
        rows.source = vec![true; 100];
        let prob = RegressionProblem::from_rows(&rows, None).unwrap();
        for j in prob.layout.q()..prob.width() {
            assert!(!prob.is_active(j));
        }
        let c = coordinate_descent(&prob, 0.01, 0.01, None, &PenaltySpec::default(), &SolverOptions::default()).unwrap();
        assert!(c.beta.unwrap().iter().all(|b| *b == 0.0));
        let (_, l2) = lambda_max(&prob, &PenaltySpec::default()).unwrap();
        assert_eq!(l2, 0.0);
    }

    #[test]
    fn degenerate_treatment_residual_is_rejected() {
        let mut rows = random_rows(50, 3, 5, false, true);
        rows.multiplier = vec![0.0; 50];
        let prob = RegressionProblem::from_rows(&rows, None).unwrap();
        assert!(matches!(prob.check_identifiable(), Err(Error::DegenerateResidualTreatment)));
    }

    #[test]
    fn objective_is_monotone_and_matches_reevaluation() {
        let rows = random_rows(300, 8, 6, true, true);
        let prob = RegressionProblem::from_rows(&rows, None).unwrap();
        for spec in [PenaltySpec::mcp(3.0), PenaltySpec::scad(3.7), PenaltySpec::adaptive_lasso(None)] {
            let (l1, l2) = lambda_max(&prob, &spec).unwrap();
            let c = coordinate_descent(&prob, 0.1 * l1, 0.1 * l2, None, &spec, &SolverOptions::default()).unwrap();
            assert!(c.converged);
            for w in c.trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
            }
            let again = prob.objective(&c, 0.1 * l1, 0.1 * l2, &spec);
            assert!((again - c.objective).abs() <= 1e-10 * again.abs().max(1.0));
            assert!(kkt_check(&prob, &c, 0.1 * l1, 0.1 * l2, &spec).max_violation < 1e-6);
        }
    }

    #[test]
    fn zero_vector_is_flagged_by_kkt() {
        let rows = random_rows(200, 3, 7, false, false);
        let prob = RegressionProblem::from_rows(&rows, None).unwrap();
        let zero = prob.coefficients(&vec![0.0; prob.width()], 0.0, 0, false, vec![]);
        let r = kkt_check(&prob, &zero, 1e-4, 0.0, &PenaltySpec::default());
        assert!(r.max_violation > 1e-4);
    }

    #[test]
    fn column_scaling_is_neutral() {
        let rows = random_rows(250, 4, 8, true, true);
        let mut scaled = rows.clone();
        let factors = [10.0, 0.1, 3.0, 0.5];
        for x in scaled.covariates.iter_mut() {
            for (v, f) in x.iter_mut().zip(factors) {
                *v *= f;
            }
        }
        let spec = PenaltySpec::default();
        let a = RegressionProblem::from_rows(&rows, None).unwrap();
        let b = RegressionProblem::from_rows(&scaled, None).unwrap();
        let (l1, l2) = lambda_max(&a, &spec).unwrap();
        let ca = coordinate_descent(&a, 0.05 * l1, 0.05 * l2, None, &spec, &SolverOptions::default()).unwrap();
        let cb = coordinate_descent(&b, 0.05 * l1, 0.05 * l2, None, &spec, &SolverOptions::default()).unwrap();
        let q = a.layout.q();
        for block in 0..2 {
            for k in 0..4 {
                let j = block * q + 1 + k;
                let unscaled = cb.theta()[j] * factors[k];
                assert!((ca.theta()[j] - unscaled).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn path_endpoints_and_chain() {
        let rows = random_rows(300, 6, 9, true, true);
        let prob = RegressionProblem::from_rows(&rows, None).unwrap();
        let spec = PenaltySpec::default();
        let opts = SolverOptions::default();
        let (g1, g2) = default_grids(&prob, &spec, 6, 1e-3).unwrap();
        let path = solution_path(&prob, &g1, &g2, &spec, &opts).unwrap();
        // Largest pair: intercepts only.
        assert_eq!(path.df[0], 2);
        assert_eq!(path.warm_from[0], None);
        assert_eq!(path.warm_from[path.index(2, 3)], Some(path.index(1, 3)));
        let direct = solve_at(&prob, &g1, &g2, (4, 2), &spec, &opts).unwrap();
        assert_eq!(&direct, path.get(4, 2));
        let single = solution_path(&prob, &g1[2..3], &g2[1..2], &spec, &opts).unwrap();
        let one = coordinate_descent(&prob, g1[2], g2[1], None, &spec, &opts).unwrap();
        assert_eq!(single.solutions[0], one);
    }

    #[test]
    fn rejects_unsorted_grid() {
        let rows = random_rows(50, 3, 10, false, false);
        let prob = RegressionProblem::from_rows(&rows, None).unwrap();
        let spec = PenaltySpec::default();
        assert!(solution_path(&prob, &[0.1, 0.2], &[0.0], &spec, &SolverOptions::default()).is_err());
    }

    #[test]
    fn log_grid_shape() {
        let g = log_grid(2.0, 20, 1e-3);
        assert_eq!(g.len(), 20);
        assert!((g[0] - 2.0).abs() < 1e-15);
        assert!((g[19] - 2e-3).abs() < 1e-15);
        assert_eq!(log_grid(0.0, 20, 1e-3), vec![0.0]);
    }
}
