//! Folded-concave and weighted-L1 penalties with their exact univariate
//! minimizers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyFamily {
    /// Minimax concave penalty.
    Mcp,
    Scad,
    AdaptiveLasso,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub family: PenaltyFamily,
    /// Concavity; unused by the adaptive lasso.
    pub gamma: f64,
    /// Multipliers of λ, one per covariate coefficient: the `p` entries of
    /// the effect block, then the `p` entries of the confounding block. For
    /// the adaptive lasso these are the usual `1/|pilot|` weights; `None`
    /// means all ones (the estimator fills in pilot weights for the adaptive
    /// lasso).
    pub adaptive_weights: Option<Vec<f64>>,
}

impl Default for PenaltySpec {
    fn default() -> Self {
        Self::mcp(3.0)
    }
}

impl PenaltySpec {
    pub fn mcp(gamma: f64) -> Self {
        Self {
            family: PenaltyFamily::Mcp,
            gamma,
            adaptive_weights: None,
        }
    }

    pub fn scad(gamma: f64) -> Self {
        Self {
            family: PenaltyFamily::Scad,
            gamma,
            adaptive_weights: None,
        }
    }

    pub fn adaptive_lasso(weights: Option<Vec<f64>>) -> Self {
        Self {
            family: PenaltyFamily::AdaptiveLasso,
            gamma: f64::INFINITY,
            adaptive_weights: weights,
        }
    }

    /// Literature default concavity for the family.
    pub fn default_gamma(family: PenaltyFamily) -> f64 {
        match family {
            PenaltyFamily::Mcp => 3.0,
            PenaltyFamily::Scad => 3.7,
            PenaltyFamily::AdaptiveLasso => f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            PenaltyFamily::Mcp if !(self.gamma > 1.0) => Err(Error::InvalidPenalty(format!(
                "MCP needs gamma > 1, got {}",
                self.gamma
            ))),
            PenaltyFamily::Scad if !(self.gamma > 2.0) => Err(Error::InvalidPenalty(format!(
                "SCAD needs gamma > 2, got {}",
                self.gamma
            ))),
            _ => match &self.adaptive_weights {
                Some(w) if w.iter().any(|x| !(*x >= 0.0)) => Err(Error::InvalidPenalty(
                    "adaptive weights must be nonnegative".into(),
                )),
                _ => Ok(()),
            },
        }
    }

    /// λ multiplier for column `j`.
    #[inline]
    pub fn factor(&self, j: usize) -> f64 {
        self.adaptive_weights.as_ref().map_or(1.0, |w| w[j])
    }

    /// Smallest curvature `v` for which the scalar problem stays convex.
    pub fn min_curvature(&self) -> f64 {
        match self.family {
            PenaltyFamily::Mcp => 1.0 / self.gamma,
            PenaltyFamily::Scad => 1.0 / (self.gamma - 1.0),
            PenaltyFamily::AdaptiveLasso => 0.0,
        }
    }
}

/// Penalty value and right derivative at `t ≥ 0`.
pub fn rho_eval(t: f64, lambda: f64, spec: &PenaltySpec) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("penalty argument must be >= 0, got {t}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(rho_unchecked(t, lambda, spec.family, spec.gamma))
}

#[inline]
pub(crate) fn rho_unchecked(t: f64, lambda: f64, family: PenaltyFamily, gamma: f64) -> (f64, f64) {
    match family {
        PenaltyFamily::Mcp => {
            if t <= gamma * lambda {
                (lambda * t - t * t / (2.0 * gamma), lambda - t / gamma)
            } else {
                (gamma * lambda * lambda / 2.0, 0.0)
            }
        }
        PenaltyFamily::Scad => {
            if t <= lambda {
                (lambda * t, lambda)
            } else if t <= gamma * lambda {
                (
                    (2.0 * gamma * lambda * t - t * t - lambda * lambda) / (2.0 * (gamma - 1.0)),
                    (gamma * lambda - t) / (gamma - 1.0),
                )
            } else {
                (lambda * lambda * (gamma + 1.0) / 2.0, 0.0)
            }
        }
        PenaltyFamily::AdaptiveLasso => (lambda * t, lambda),
    }
}

#[inline]
fn soft_threshold(z: f64, threshold: f64) -> f64 {
    if z > threshold {
        z - threshold
    } else if z < -threshold {
        z + threshold
    } else {
        0.0
    }
}

/// Global minimizer of `½·v·θ² − z·θ + ρ(|θ|; λ)`.
///
/// `lambda` is the effective level for this coordinate (any adaptive factor
/// already applied). Requires `v` above the family's convexity bound.
pub fn coordinate_update(z: f64, v: f64, lambda: f64, spec: &PenaltySpec) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(v > spec.min_curvature()) {
        return Err(Error::InvalidArgument(format!(
            "curvature {v} must exceed {} for {:?}",
            spec.min_curvature(),
            spec.family
        )));
    }
    Ok(update_unchecked(z, v, lambda, spec.family, spec.gamma))
}

#[inline]
pub(crate) fn update_unchecked(z: f64, v: f64, lambda: f64, family: PenaltyFamily, gamma: f64) -> f64 {
    match family {
        PenaltyFamily::Mcp => {
            if z.abs() <= v * gamma * lambda {
                soft_threshold(z, lambda) / (v - 1.0 / gamma)
            } else {
                z / v
            }
        }
        PenaltyFamily::Scad => {
            let az = z.abs();
            if az <= lambda * (1.0 + v) {
                soft_threshold(z, lambda) / v
            } else if az <= v * gamma * lambda {
                soft_threshold(z, gamma * lambda / (gamma - 1.0)) / (v - 1.0 / (gamma - 1.0))
            } else {
                z / v
            }
        }
        PenaltyFamily::AdaptiveLasso => soft_threshold(z, lambda) / v,
    }
}
