use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    SgdMomentum { momentum: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn sgd_momentum() -> Self {
        OptimizerKind::SgdMomentum { momentum: 0.9 }
    }

    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::SgdMomentum { .. } => "sgd_momentum",
            OptimizerKind::Adam { .. } => "adam",
        }
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "adam" => Ok(Self::adam()),
            "sgd_momentum" | "sgd" => Ok(Self::sgd_momentum()),
            other => Err(Error::Parameter(format!("unknown optimizer {other:?}"))),
        }
    }
}

/// First-order optimizer state for a list of parameter matrices.
pub struct Optimizer<T> {
    kind: OptimizerKind,
    first: Vec<Array2<T>>,
    second: Vec<Array2<T>>,
    steps: i32,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, params: &[&Array2<T>]) -> Self {
        let zeros = || params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
        let second = match kind {
            OptimizerKind::Adam { .. } => zeros(),
            OptimizerKind::SgdMomentum { .. } => Vec::new(),
        };
        Self {
            kind,
            first: zeros(),
            second,
            steps: 0,
        }
    }

    pub fn step(&mut self, params: &mut [&mut Array2<T>], grads: &[Array2<T>], lr: f64) {
        self.steps += 1;
        let lr = T::of(lr);
        match self.kind {
            OptimizerKind::SgdMomentum { momentum } => {
                let mu = T::of(momentum);
                for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.first) {
                    v.zip_mut_with(g, |v, &g| *v = mu * *v + g);
                    p.zip_mut_with(v, |p, &v| *p -= lr * v);
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let (b1, b2, eps) = (T::of(beta1), T::of(beta2), T::of(eps));
                let c1 = T::one() - b1.powi(self.steps);
                let c2 = T::one() - b2.powi(self.steps);
                for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.first).zip(&mut self.second) {
                    m.zip_mut_with(g, |m, &g| *m = b1 * *m + (T::one() - b1) * g);
                    v.zip_mut_with(g, |v, &g| *v = b2 * *v + (T::one() - b2) * g * g);
                    ndarray::Zip::from(&mut **p).and(&*m).and(&*v).for_each(|p, &m, &v| {
                        *p -= lr * (m / c1) / ((v / c2).sqrt() + eps);
                    });
                }
            }
        }
    }
}
