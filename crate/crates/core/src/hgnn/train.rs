//! Full-graph training loop.

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::hgnn::labels::LabelMask;
use crate::hgnn::loss::FocalLoss;
use crate::hgnn::model::Model;
use crate::hgnn::optim::{Optimizer, OptimizerKind};
use crate::hypergraph::PropagationOperator;
use crate::rng::{stage_rng, STAGE_DROPOUT};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub loss: FocalLoss,
    pub seed: u64,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 400,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            loss: FocalLoss::default(),
            seed: 0,
            optimizer: OptimizerKind::adam(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!("learning rate must be non-negative, got {}", self.learning_rate)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Parameter(format!("weight decay must be non-negative, got {}", self.weight_decay)));
        }
        FocalLoss::new(self.loss.alpha, self.loss.gamma)?;
        Ok(())
    }
}

/// Trains `model` for `config.epochs` full-batch steps and returns it with
/// the objective recorded at each epoch's forward pass.
pub fn train<T: Scalar>(
    mut model: Model<T>,
    op: &PropagationOperator<T>,
    x: ArrayView2<'_, T>,
    mask: &LabelMask,
    config: &TrainConfig,
) -> Result<(Model<T>, Vec<T>)> {
    config.validate()?;
    if mask.len() != op.size() {
        return Err(Error::Dimension(format!("mask covers {} nodes, graph has {}", mask.len(), op.size())));
    }
    if !mask.has_both_classes() {
        return Err(Error::Setup("training needs labelled nodes of both classes".into()));
    }
    let mut rng = stage_rng(config.seed, STAGE_DROPOUT);
    let mut optimizer = {
        let params: Vec<_> = model.layers().iter().map(|l| &l.weights).collect();
        Optimizer::new(config.optimizer, &params)
    };
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (probs, cache) = model.forward(op, x, true, &mut rng)?;
        let objective = model.objective(&probs, mask, &config.loss, config.weight_decay)?;
        if !objective.is_finite() {
            return Err(Error::Diverged { epoch, loss: objective.as_f64() });
        }
        history.push(objective);
        let grads = model.backward(op, &cache, mask, &config.loss, config.weight_decay)?;
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::Diverged { epoch, loss: objective.as_f64() });
        }
        optimizer.step(&mut model.weights_mut(), &grads, config.learning_rate);
    }
    Ok((model, history))
}
