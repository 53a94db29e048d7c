//! Classification losses on predicted class distributions.
//!
//! All losses depend on the prediction only through `p = pred[label]`,
//! clamped below at [`PROB_FLOOR`] before taking logarithms.

use serde::{Deserialize, Serialize};

use crate::diff::PROB_FLOOR;
use crate::error::{invalid, Result};
use crate::matrix::RealMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    FocalCrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub kind: LossKind,
    pub focal_gamma: f64,
    pub poly_enabled: bool,
    pub poly_epsilon: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            kind: LossKind::CrossEntropy,
            focal_gamma: 3.0,
            poly_enabled: false,
            poly_epsilon: 2.0,
        }
    }
}

impl LossConfig {
    pub fn focal(gamma: f64) -> Self {
        Self {
            kind: LossKind::FocalCrossEntropy,
            focal_gamma: gamma,
            ..Self::default()
        }
    }

    pub fn with_poly(mut self, epsilon: f64) -> Self {
        self.poly_enabled = true;
        self.poly_epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.focal_gamma.is_finite() || self.focal_gamma < 0.0 {
            return invalid(format!("focal gamma must be finite and >= 0, got {}", self.focal_gamma));
        }
        if !self.poly_epsilon.is_finite() {
            return invalid("poly epsilon must be finite");
        }
        Ok(())
    }

    fn gamma(&self) -> f64 {
        match self.kind {
            LossKind::CrossEntropy => 0.0,
            LossKind::FocalCrossEntropy => self.focal_gamma,
        }
    }

    fn epsilon(&self) -> f64 {
        if self.poly_enabled {
            self.poly_epsilon
        } else {
            0.0
        }
    }

    /// Loss as a function of the true-class probability.
    pub fn loss_at(&self, p: f64) -> f64 {
        let gamma = self.gamma();
        let base = focal_term(p, gamma);
        let eps = self.epsilon();
        if eps == 0.0 {
            base
        } else {
            base + eps * (1.0 - p)
        }
    }

    /// Derivative of [`LossConfig::loss_at`] with respect to `p`.
    pub fn dloss_dp(&self, p: f64) -> f64 {
        if p < PROB_FLOOR {
            // the clamp is flat there; only the poly term remains
            return -self.epsilon();
        }
        let gamma = self.gamma();
        let nll = -p.ln();
        let d_focal = if gamma == 0.0 {
            -1.0 / p
        } else {
            let q = 1.0 - p;
            -gamma * q.max(PROB_FLOOR).powf(gamma - 1.0) * nll - q.powf(gamma) / p
        };
        d_focal - self.epsilon()
    }
}

fn focal_term(p: f64, gamma: f64) -> f64 {
    let nll = -p.max(PROB_FLOOR).ln();
    if gamma == 0.0 {
        nll
    } else {
        (1.0 - p).powf(gamma) * nll
    }
}

fn true_prob(pred: &[f64], label: usize) -> Result<f64> {
    match pred.get(label) {
        Some(&p) => Ok(p),
        None => invalid(format!("label {label} out of range for {} classes", pred.len())),
    }
}

/// `-log pred[label]`.
pub fn cross_entropy(pred: &[f64], label: usize) -> Result<f64> {
    Ok(focal_term(true_prob(pred, label)?, 0.0))
}

/// `(1 - p)^gamma * -log p` with `p = pred[label]`.
pub fn focal_cross_entropy(pred: &[f64], label: usize, gamma: f64) -> Result<f64> {
    if !gamma.is_finite() || gamma < 0.0 {
        return invalid(format!("focal gamma must be finite and >= 0, got {gamma}"));
    }
    Ok(focal_term(true_prob(pred, label)?, gamma))
}

/// Poly-1 correction: `base + epsilon * (1 - pred[label])`.
pub fn poly_adjust(base_loss: f64, pred: &[f64], label: usize, epsilon: f64) -> Result<f64> {
    Ok(base_loss + epsilon * (1.0 - true_prob(pred, label)?))
}

pub fn sample_loss(pred: &[f64], label: usize, cfg: &LossConfig) -> Result<f64> {
    Ok(cfg.loss_at(true_prob(pred, label)?))
}

fn check_batch(preds: &RealMatrix, labels: &[usize]) -> Result<()> {
    if preds.rows() != labels.len() {
        return invalid(format!(
            "{} predictions but {} labels",
            preds.rows(),
            labels.len()
        ));
    }
    if labels.is_empty() {
        return invalid("empty batch");
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= preds.cols()) {
        return invalid(format!("label {bad} out of range for {} classes", preds.cols()));
    }
    Ok(())
}

/// Mean per-sample loss.
pub fn batch_loss(preds: &RealMatrix, labels: &[usize], cfg: &LossConfig) -> Result<f64> {
    check_batch(preds, labels)?;
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(b, &y)| cfg.loss_at(preds.get(b, y)))
        .sum();
    Ok(total / labels.len() as f64)
}

/// Mean loss and its gradient with respect to every predicted probability.
pub fn batch_loss_grad(
    preds: &RealMatrix,
    labels: &[usize],
    cfg: &LossConfig,
) -> Result<(f64, RealMatrix)> {
    check_batch(preds, labels)?;
    let scale = 1.0 / labels.len() as f64;
    let mut grad = RealMatrix::zeros(preds.rows(), preds.cols());
    let mut total = 0.0;
    for (b, &y) in labels.iter().enumerate() {
        let p = preds.get(b, y);
        total += cfg.loss_at(p);
        grad.set(b, y, cfg.dloss_dp(p) * scale);
    }
    Ok((total * scale, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cross_entropy_examples() {
        assert_eq!(cross_entropy(&[0.0, 1.0], 1).unwrap(), 0.0);
        assert!((cross_entropy(&[0.5, 0.5], 0).unwrap() - 0.693147180560).abs() < 1e-11);
        assert!((cross_entropy(&[0.25, 0.75], 0).unwrap() - 1.386294361120).abs() < 1e-11);
        assert!(cross_entropy(&[0.5, 0.5], 2).is_err());
        // floor keeps the loss finite
        assert!((cross_entropy(&[1.0, 0.0], 1).unwrap() - 27.631021115928547).abs() < 1e-9);
    }

    #[test]
    fn focal_examples() {
        let pred = [0.3, 0.7];
        assert_eq!(focal_cross_entropy(&pred, 1, 0.0).unwrap(), cross_entropy(&pred, 1).unwrap());
        let v = focal_cross_entropy(&[0.5, 0.5], 0, 3.0).unwrap();
        assert!((v - 0.125 * 2f64.ln()).abs() < 1e-15);
        assert!((v - 0.08664).abs() < 1e-5);
        assert_eq!(focal_cross_entropy(&[1.0, 0.0], 0, 3.0).unwrap(), 0.0);
        assert!(focal_cross_entropy(&pred, 0, -1.0).is_err());
    }

    #[test]
    fn poly_examples() {
        let pred = [0.5, 0.5];
        let base = cross_entropy(&pred, 0).unwrap();
        assert_eq!(poly_adjust(base, &pred, 0, 0.0).unwrap(), base);
        assert!((poly_adjust(base, &pred, 0, 2.0).unwrap() - 1.693147180560).abs() < 1e-11);
        assert_eq!(poly_adjust(0.3, &[1.0, 0.0], 0, 5.0).unwrap(), 0.3);
    }

    #[test]
    fn batch_examples() {
        let cfg = LossConfig::default();
        let perfect = RealMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(batch_loss(&perfect, &[0, 1], &cfg).unwrap(), 0.0);

        let p0 = (-0.2f64).exp();
        let p1 = (-0.4f64).exp();
        let m = RealMatrix::from_rows(&[vec![p0, 1.0 - p0], vec![1.0 - p1, p1]]).unwrap();
        assert!((batch_loss(&m, &[0, 1], &cfg).unwrap() - 0.3).abs() < 1e-12);

        let focal = LossConfig::focal(2.0).with_poly(5.0);
        let m = RealMatrix::from_rows(&[vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.05, 0.05, 0.9]])
            .unwrap();
        let labels = [1, 2, 0];
        let mut oracle = 0.0;
        for (b, &y) in labels.iter().enumerate() {
            let base = focal_cross_entropy(m.row(b), y, 2.0).unwrap();
            oracle += poly_adjust(base, m.row(b), y, 5.0).unwrap();
        }
        assert!((batch_loss(&m, &labels, &focal).unwrap() - oracle / 3.0).abs() < 1e-12);

        assert!(batch_loss(&RealMatrix::zeros(0, 2), &[], &cfg).is_err());
        assert!(batch_loss(&perfect, &[0], &cfg).is_err());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let cfgs = [
            LossConfig::default(),
            LossConfig::focal(3.0),
            LossConfig::focal(0.5).with_poly(2.0),
            LossConfig::default().with_poly(5.0),
        ];
        for cfg in cfgs {
            for &p in &[0.01, 0.2, 0.5, 0.77, 0.95] {
                let h = 1e-6;
                let fd = (cfg.loss_at(p + h) - cfg.loss_at(p - h)) / (2.0 * h);
                let an = cfg.dloss_dp(p);
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{cfg:?} p={p}: {fd} vs {an}");
            }
        }
    }

    proptest! {
        #[test]
        fn losses_non_negative(p in 0.0f64..=1.0, gamma in 0.0f64..5.0) {
            let pred = [p, 1.0 - p];
            prop_assert!(cross_entropy(&pred, 0).unwrap() >= 0.0);
            prop_assert!(focal_cross_entropy(&pred, 0, gamma).unwrap() >= 0.0);
        }
    }
}
