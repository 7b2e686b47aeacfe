use serde::{Deserialize, Serialize};

use super::{ContrastiveError, NegativeMask, SimilarityMatrix};
use crate::motion::FeatureSequence;

/// Weights of the composite objective and the InfoNCE settings.
///
/// `lambda_kl` and `lambda_e` default to the values customary for this
/// family of text-motion retrieval models; they are meant to be overridden
/// from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_kl: f64,
    pub lambda_e: f64,
    pub lambda_nce: f64,
    pub tau: f64,
    pub filter_threshold: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda_kl: 1e-5, lambda_e: 1e-5, lambda_nce: 0.1, tau: 0.1, filter_threshold: 0.8 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), ContrastiveError> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(ContrastiveError::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        for (name, v) in [("lambda_kl", self.lambda_kl), ("lambda_e", self.lambda_e), ("lambda_nce", self.lambda_nce)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ContrastiveError::InvalidConfig(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(-1.0..=1.0).contains(&self.filter_threshold) {
            return Err(ContrastiveError::InvalidConfig(format!(
                "filter_threshold must lie in [-1, 1], got {}",
                self.filter_threshold
            )));
        }
        Ok(())
    }
}

/// Unweighted loss terms of one training step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub reconstruction: f64,
    pub kl: f64,
    pub embedding: f64,
    pub nce: f64,
}

/// `L_rec + λ_kl·L_kl + λ_e·L_e + λ_nce·L_nce`.
pub fn total_loss(c: &LossComponents, w: &LossWeights) -> f64 {
    c.reconstruction + w.lambda_kl * c.kl + w.lambda_e * c.embedding + w.lambda_nce * c.nce
}

/// Huber loss with unit transition point.
#[inline]
pub fn smooth_l1(d: f64) -> f64 {
    let a = d.abs();
    if a < 1.0 {
        0.5 * d * d
    } else {
        a - 0.5
    }
}

#[inline]
pub(crate) fn smooth_l1_grad(d: f64) -> f64 {
    d.clamp(-1.0, 1.0)
}

/// Mean smooth-L1 distance between two embeddings.
pub fn embedding_similarity_loss(zt: &[f64], zm: &[f64]) -> Result<f64, ContrastiveError> {
    if zt.len() != zm.len() || zt.is_empty() {
        return Err(ContrastiveError::Shape(format!("embeddings of {} and {} dims", zt.len(), zm.len())));
    }
    Ok(zt.iter().zip(zm).map(|(a, b)| smooth_l1(a - b)).sum::<f64>() / zt.len() as f64)
}

/// Mean smooth-L1 over every feature entry.
pub fn reconstruction_loss(decoded: &FeatureSequence, reference: &FeatureSequence) -> Result<f64, ContrastiveError> {
    if decoded.frames() != reference.frames() {
        return Err(ContrastiveError::Shape(format!(
            "{} decoded frames vs {} reference frames",
            decoded.frames(),
            reference.frames()
        )));
    }
    let a = decoded.as_flat();
    let b = reference.as_flat();
    Ok(a.iter().zip(b).map(|(x, y)| smooth_l1(x - y)).sum::<f64>() / a.len() as f64)
}

/// Symmetric InfoNCE over `s`, text-to-motion rows and motion-to-text
/// columns, each denominator restricted to the pairs kept by `mask`.
pub fn infonce_loss(s: &SimilarityMatrix, tau: f64, mask: &NegativeMask) -> Result<f64, ContrastiveError> {
    let n = s.n();
    check_inputs(n, tau, mask)?;
    let mut total = 0.0;
    for i in 0..n {
        let pos = s.get(i, i) / tau;
        total += pos - masked_lse((0..n).filter(|&j| mask.keep(i, j)).map(|j| s.get(i, j) / tau));
        total += pos - masked_lse((0..n).filter(|&j| mask.keep(j, i)).map(|j| s.get(j, i) / tau));
    }
    // `+ 0.0` turns a fully filtered -0 into 0.
    Ok(-total / (2.0 * n as f64) + 0.0)
}

pub(crate) fn check_inputs(n: usize, tau: f64, mask: &NegativeMask) -> Result<(), ContrastiveError> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(ContrastiveError::InvalidConfig(format!("tau must be positive, got {tau}")));
    }
    if mask.n() != n {
        return Err(ContrastiveError::Shape(format!("mask is {} x {0}, similarities {n} x {n}", mask.n())));
    }
    if let Some(i) = (0..n).find(|&i| !mask.keep(i, i)) {
        return Err(ContrastiveError::InvalidMask(format!("positive pair {i} is masked out")));
    }
    Ok(())
}

/// log-sum-exp with the maximum subtracted first.
pub(crate) fn masked_lse(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}
