//! Focal loss over the labelled nodes and its gradient w.r.t. the logits.

use crate::error::{Error, Result};
use crate::hgnn::labels::LabelMask;
use crate::scalar::Scalar;

/// Probabilities are clamped to `[PROB_EPS, 1 − PROB_EPS]` before the log.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalLoss {
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for FocalLoss {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            gamma: 2.0,
        }
    }
}

impl FocalLoss {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Parameter(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Parameter(format!("gamma must be non-negative, got {gamma}")));
        }
        Ok(Self { alpha, gamma })
    }

    /// `−α (1 − p_t)^γ ln p_t` for one prediction.
    pub fn term<T: Scalar>(&self, prob: T, changed: bool) -> T {
        let eps = T::of(PROB_EPS);
        let p = prob.max(eps).min(T::one() - eps);
        let pt = if changed { p } else { T::one() - p };
        -T::of(self.alpha) * (T::one() - pt).powf(T::of(self.gamma)) * pt.ln()
    }

    /// Sum of [`FocalLoss::term`] over labelled nodes.
    pub fn value<T: Scalar>(&self, probs: &[T], mask: &LabelMask) -> Result<T> {
        check(probs, mask)?;
        Ok(mask.labeled().map(|(i, y)| self.term(probs[i], y)).sum())
    }

    /// Derivative of [`FocalLoss::value`] w.r.t. each node's logit, where
    /// `probs = sigmoid(logits)`. Zero for unlabelled and clamped nodes.
    pub fn logit_gradient<T: Scalar>(&self, probs: &[T], mask: &LabelMask) -> Result<Vec<T>> {
        check(probs, mask)?;
        let eps = T::of(PROB_EPS);
        let alpha = T::of(self.alpha);
        let gamma = T::of(self.gamma);
        let mut grad = vec![T::zero(); probs.len()];
        for (i, y) in mask.labeled() {
            let p = probs[i];
            if p < eps || p > T::one() - eps {
                continue;
            }
            let pt = if y { p } else { T::one() - p };
            let q = T::one() - pt;
            // d/dz of −α q^γ ln p_t, using dp_t/dz = ±p_t q
            let g = alpha * (gamma * q.powf(gamma) * pt * pt.ln() - q.powf(gamma + T::one()));
            grad[i] = if y { g } else { -g };
        }
        Ok(grad)
    }
}

fn check<T>(probs: &[T], mask: &LabelMask) -> Result<()> {
    if probs.len() != mask.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} mask entries",
            probs.len(),
            mask.len()
        )));
    }
    if mask.labeled_count() == 0 {
        return Err(Error::Setup("no labelled nodes".into()));
    }
    Ok(())
}
