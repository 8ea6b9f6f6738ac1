//! Loss functions and the per-worker cost-sensitivity machinery.
//!
//! The focal family is written in its multi-class form
//! `-rho * sum_i y_i (1 - p_i)^xi * ln(p_i)` over one-hot targets, which for
//! `xi = 0, rho = 1` reduces to cross-entropy. The adaptive variant replaces
//! the fixed scale `rho` with a per-worker value derived from that worker's
//! crude class imbalance ratio.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clamped into this range before any logarithm.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    CrossEntropy,
    Focal,
    AdaptiveFocal,
}

/// Loss selection plus its scalar parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Focusing exponent; 0 recovers cross-entropy.
    pub xi: f64,
    /// Fixed scale for the plain focal loss, in (0, 1].
    pub rho: f64,
    /// Numerator scale of the adaptive sigmoid map.
    pub a: f64,
    /// Steepness of the adaptive sigmoid map.
    pub b: f64,
}

impl LossSpec {
    pub fn mse() -> Self {
        LossSpec { kind: LossKind::Mse, xi: 0.0, rho: 1.0, a: 2.0, b: 3.0 }
    }

    pub fn cross_entropy() -> Self {
        LossSpec { kind: LossKind::CrossEntropy, xi: 0.0, rho: 1.0, a: 2.0, b: 3.0 }
    }

    pub fn focal(rho: f64, xi: f64) -> Self {
        LossSpec { kind: LossKind::Focal, xi, rho, a: 2.0, b: 3.0 }
    }

    pub fn adaptive_focal(xi: f64, a: f64, b: f64) -> Self {
        LossSpec { kind: LossKind::AdaptiveFocal, xi, rho: 1.0, a, b }
    }

    pub fn validate(&self) -> Result<()> {
        if self.xi < 0.0 {
            return Err(Error::Config(format!("xi must be >= 0, got {}", self.xi)));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::Config(format!(
                "rho must lie in (0, 1], got {}",
                self.rho
            )));
        }
        if self.a <= 0.0 || self.b <= 0.0 {
            return Err(Error::Config(format!(
                "a and b must be positive, got a={}, b={}",
                self.a, self.b
            )));
        }
        Ok(())
    }

    /// Fixes the loss scale for one worker. The adaptive kind requires the
    /// worker's imbalance profile; the others ignore it.
    pub fn resolve(&self, profile: Option<&ImbalanceProfile>) -> Result<ResolvedLoss> {
        self.validate()?;
        Ok(match self.kind {
            LossKind::Mse => ResolvedLoss::Mse,
            LossKind::CrossEntropy => ResolvedLoss::Focal { rho: 1.0, xi: 0.0 },
            LossKind::Focal => ResolvedLoss::Focal { rho: self.rho, xi: self.xi },
            LossKind::AdaptiveFocal => {
                let profile = profile.ok_or_else(|| {
                    Error::Contract(
                        "adaptive focal loss needs the worker's imbalance profile".into(),
                    )
                })?;
                ResolvedLoss::Focal { rho: profile.rho, xi: self.xi }
            }
        })
    }
}

/// A loss with all scales fixed, ready to drive training of one worker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedLoss {
    /// Mean squared reconstruction error over output units.
    Mse,
    /// Scaled focal loss over a class distribution.
    Focal { rho: f64, xi: f64 },
}

/// Per-class counts of one local dataset with its derived imbalance ratio
/// `m` and adaptive scale `rho`. Computed once per worker per run; the
/// partition never changes between rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ImbalanceProfile {
    pub class_counts: Vec<usize>,
    pub m: f64,
    pub rho: f64,
}

impl ImbalanceProfile {
    pub fn from_counts(class_counts: &[usize], a: f64, b: f64) -> Result<Self> {
        let m = crude_imbalance_ratio(class_counts)?;
        Ok(ImbalanceProfile {
            class_counts: class_counts.to_vec(),
            m,
            rho: adaptive_rho(m, a, b),
        })
    }
}

/// Crude class imbalance ratio `m = 1 - majority_count / total`.
pub fn crude_imbalance_ratio(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::Contract(
            "imbalance ratio of an empty dataset is undefined".into(),
        ));
    }
    let majority = class_counts.iter().copied().max().unwrap_or(0);
    Ok(1.0 - majority as f64 / total as f64)
}

/// Adaptive scale `rho = a / (1 + exp(-b * (m - 1)))`, strictly increasing
/// in `m` and never exactly zero.
pub fn adaptive_rho(m: f64, a: f64, b: f64) -> f64 {
    a / (1.0 + (-b * (m - 1.0)).exp())
}

pub(crate) fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Focal loss of one sample: `-rho * (1 - p_true)^xi * ln(p_true)` where
/// `p_true` is the predicted probability of the target class.
pub fn focal_loss(target_class: usize, probs: &[f64], rho: f64, xi: f64) -> f64 {
    let p = clamp_prob(probs[target_class]);
    -rho * (1.0 - p).powf(xi) * p.ln()
}

/// Focal loss with the scale taken from the worker's imbalance profile.
pub fn adaptive_focal_loss(
    target_class: usize,
    probs: &[f64],
    profile: &ImbalanceProfile,
    xi: f64,
) -> f64 {
    focal_loss(target_class, probs, profile.rho, xi)
}

/// Mean squared difference over features.
pub fn mse_loss(x: &[f64], reconstruction: &[f64]) -> Result<f64> {
    if x.len() != reconstruction.len() {
        return Err(Error::Shape(format!(
            "mse over {} vs {} values",
            x.len(),
            reconstruction.len()
        )));
    }
    let sum: f64 = x
        .iter()
        .zip(reconstruction)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / x.len() as f64)
}

impl ResolvedLoss {
    /// Sample loss for a classification target.
    pub(crate) fn class_value(&self, target_class: usize, probs: &[f64]) -> f64 {
        match *self {
            ResolvedLoss::Focal { rho, xi } => focal_loss(target_class, probs, rho, xi),
            ResolvedLoss::Mse => {
                // One-hot regression view; only used if MSE is configured on
                // a classifier, which training paths never do.
                let mut sum = 0.0;
                for (i, &p) in probs.iter().enumerate() {
                    let t = if i == target_class { 1.0 } else { 0.0 };
                    sum += (p - t) * (p - t);
                }
                sum / probs.len() as f64
            }
        }
    }

    /// d(loss)/d(probs) for a classification target, written into `out`.
    pub(crate) fn class_grad(&self, target_class: usize, probs: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        match *self {
            ResolvedLoss::Focal { rho, xi } => {
                let p = clamp_prob(probs[target_class]);
                // d/dp [ -rho (1-p)^xi ln p ]
                //   = -rho [ (1-p)^xi / p - xi (1-p)^(xi-1) ln p ]
                let mut g = (1.0 - p).powf(xi) / p;
                if xi > 0.0 {
                    g -= xi * (1.0 - p).powf(xi - 1.0) * p.ln();
                }
                out[target_class] = -rho * g;
            }
            ResolvedLoss::Mse => {
                let n = probs.len() as f64;
                for (i, &p) in probs.iter().enumerate() {
                    let t = if i == target_class { 1.0 } else { 0.0 };
                    out[i] = 2.0 * (p - t) / n;
                }
            }
        }
    }

    /// Sample loss for a regression / reconstruction target.
    pub(crate) fn vector_value(&self, target: &[f64], output: &[f64]) -> Result<f64> {
        match *self {
            ResolvedLoss::Mse => mse_loss(target, output),
            ResolvedLoss::Focal { .. } => Err(Error::Contract(
                "focal losses need a class target, not a vector target".into(),
            )),
        }
    }

    /// d(loss)/d(output) for a regression target, written into `out`.
    pub(crate) fn vector_grad(&self, target: &[f64], output: &[f64], out: &mut [f64]) {
        let n = output.len() as f64;
        for ((g, &o), &t) in out.iter_mut().zip(output).zip(target) {
            *g = 2.0 * (o - t) / n;
        }
    }
}
