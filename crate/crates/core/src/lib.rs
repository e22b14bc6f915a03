//! Object-level change detection for co-registered image pairs.
//!
//! The engine segments the stacked pair at a fine and a coarse scale, treats
//! every fine region as a hypergraph vertex, joins each vertex with its
//! spatial neighbours and its coarse-scale siblings into one hyperedge, and
//! trains a two-layer hypergraph convolutional network with focal loss on a
//! small labelled subset of the vertices. Node decisions are painted back to
//! pixels and scored against a reference change map.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision instantiations used by the
//! pipeline.

pub mod error;
pub mod evaluation;
pub mod features;
pub mod hgnn;
pub mod hypergraph;
pub mod pipeline;
pub mod raster;
pub mod rng;
pub mod scalar;
pub mod segmentation;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Csr64 = sparse::Csr<f64>;
pub type NodeFeatures64 = features::NodeFeatures<f64>;
pub type Hypergraph64 = hypergraph::Hypergraph<f64>;
pub type PropagationOperator64 = hypergraph::PropagationOperator<f64>;
pub type Model64 = hgnn::Model<f64>;
pub type Metrics64 = evaluation::Metrics<f64>;

pub type Csr32 = sparse::Csr<f32>;
pub type NodeFeatures32 = features::NodeFeatures<f32>;
pub type Hypergraph32 = hypergraph::Hypergraph<f32>;
pub type PropagationOperator32 = hypergraph::PropagationOperator<f32>;
pub type Model32 = hgnn::Model<f32>;
