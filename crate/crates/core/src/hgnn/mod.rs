//! Semi-supervised hypergraph convolutional network.

pub mod labels;
pub mod loss;
pub mod model;
pub mod optim;
pub mod train;

pub use labels::{majority_labels, sample_labels, LabelMask, Sampling};
pub use loss::{FocalLoss, PROB_EPS};
pub use model::{conv_layer, sigmoid, Activation, ForwardCache, Layer, Model};
pub use optim::{Optimizer, OptimizerKind};
pub use train::{train, TrainConfig};
