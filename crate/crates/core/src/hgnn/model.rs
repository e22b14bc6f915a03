//! Layered hypergraph convolution `X⁽ˡ⁺¹⁾ = σ(P X⁽ˡ⁾ Θ⁽ˡ⁾)` with a sigmoid
//! head and hand-written reverse pass.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::hgnn::labels::LabelMask;
use crate::hgnn::loss::FocalLoss;
use crate::hypergraph::PropagationOperator;
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DNHM";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    pub fn code(self) -> u32 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(Activation::Identity),
            1 => Ok(Activation::Relu),
            other => Err(Error::format("activation", format!("unknown activation code {other}"))),
        }
    }

    fn apply<T: Scalar>(self, z: &Array2<T>) -> Array2<T> {
        match self {
            Activation::Identity => z.clone(),
            Activation::Relu => z.mapv(|v| if v > T::zero() { v } else { T::zero() }),
        }
    }

    fn backprop<T: Scalar>(self, grad: &mut Array2<T>, z: &Array2<T>) {
        if self == Activation::Relu {
            grad.zip_mut_with(z, |g, &z| {
                if z <= T::zero() {
                    *g = T::zero();
                }
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weights: Array2<T>,
    pub activation: Activation,
}

/// One hypergraph convolution `σ(P (X Θ))`, evaluated right to left.
pub fn conv_layer<T: Scalar>(
    op: &PropagationOperator<T>,
    x: ArrayView2<'_, T>,
    theta: ArrayView2<'_, T>,
    activation: Activation,
) -> Result<Array2<T>> {
    Ok(activation.apply(&pre_activation(op, x, theta)?))
}

fn pre_activation<T: Scalar>(
    op: &PropagationOperator<T>,
    x: ArrayView2<'_, T>,
    theta: ArrayView2<'_, T>,
) -> Result<Array2<T>> {
    if x.ncols() != theta.nrows() {
        return Err(Error::Dimension(format!(
            "layer input has {} columns, weights expect {}",
            x.ncols(),
            theta.nrows()
        )));
    }
    if x.nrows() != op.size() {
        return Err(Error::Dimension(format!(
            "{} node rows for a {}-vertex operator",
            x.nrows(),
            op.size()
        )));
    }
    op.matrix().mul_dense(x.dot(&theta).view())
}

pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

struct LayerCache<T> {
    /// Layer input after dropout.
    input: Array2<T>,
    /// Inverted-dropout multipliers, when dropout was applied.
    mask: Option<Array2<T>>,
    pre_activation: Array2<T>,
}

/// Intermediate values of a forward pass, consumed by [`Model::backward`].
pub struct ForwardCache<T> {
    layers: Vec<LayerCache<T>>,
    probs: Vec<T>,
}

impl<T> ForwardCache<T> {
    pub fn probs(&self) -> &[T] {
        &self.probs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    layers: Vec<Layer<T>>,
    dropout: f64,
    /// Whether dropout also applies to the raw node features.
    dropout_input: bool,
}

impl<T: Scalar> Model<T> {
    pub fn new(layers: Vec<Layer<T>>, dropout: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Parameter("model needs at least one layer".into()));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::Parameter(format!("dropout must lie in [0, 1), got {dropout}")));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[0].weights.ncols() != pair[1].weights.nrows() {
                return Err(Error::Dimension(format!(
                    "layer {l} outputs {} columns but layer {} takes {}",
                    pair[0].weights.ncols(),
                    l + 1,
                    pair[1].weights.nrows()
                )));
            }
        }
        let last = layers.last().unwrap().weights.ncols();
        if last != 1 {
            return Err(Error::Dimension(format!("final layer must output 1 column, got {last}")));
        }
        Ok(Self {
            layers,
            dropout,
            dropout_input: true,
        })
    }

    /// Glorot-uniform layers through `widths`; hidden layers use ReLU, the
    /// last is linear and feeds the sigmoid head.
    pub fn glorot<R: Rng>(widths: &[usize], dropout: f64, rng: &mut R) -> Result<Self> {
        if widths.len() < 2 || *widths.last().unwrap() != 1 || widths.contains(&0) {
            return Err(Error::Parameter(format!("invalid layer widths {widths:?}")));
        }
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                let weights = Array2::from_shape_simple_fn((w[0], w[1]), || {
                    T::of(rng.random_range(-limit..limit))
                });
                let activation = if l + 2 == widths.len() {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                Layer { weights, activation }
            })
            .collect();
        Self::new(layers, dropout)
    }

    pub fn with_input_dropout(mut self, enabled: bool) -> Self {
        self.dropout_input = enabled;
        self
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn weights_mut(&mut self) -> Vec<&mut Array2<T>> {
        self.layers.iter_mut().map(|l| &mut l.weights).collect()
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    /// Forward pass. Training mode applies inverted dropout to layer inputs.
    pub fn forward<R: Rng>(
        &self,
        op: &PropagationOperator<T>,
        x: ArrayView2<'_, T>,
        training: bool,
        rng: &mut R,
    ) -> Result<(Vec<T>, ForwardCache<T>)> {
        let keep = 1.0 - self.dropout;
        let scale = T::of(1.0 / keep);
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut current = x.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            let drop = training && self.dropout > 0.0 && (l > 0 || self.dropout_input);
            let mask = drop.then(|| {
                Array2::from_shape_simple_fn(current.raw_dim(), || {
                    if rng.random::<f64>() < keep {
                        scale
                    } else {
                        T::zero()
                    }
                })
            });
            if let Some(m) = &mask {
                current *= m;
            }
            let z = pre_activation(op, current.view(), layer.weights.view())?;
            let out = layer.activation.apply(&z);
            caches.push(LayerCache {
                input: current,
                mask,
                pre_activation: z,
            });
            current = out;
        }
        let probs: Vec<T> = current.column(0).iter().map(|&z| sigmoid(z)).collect();
        let cache = ForwardCache {
            layers: caches,
            probs: probs.clone(),
        };
        Ok((probs, cache))
    }

    /// Inference-mode probabilities.
    pub fn predict(&self, op: &PropagationOperator<T>, x: ArrayView2<'_, T>) -> Result<Vec<T>> {
        // inference draws nothing from the generator
        let mut unused = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        self.forward(op, x, false, &mut unused).map(|(p, _)| p)
    }

    pub fn weight_penalty(&self, weight_decay: f64) -> T {
        let sq: T = self.layers.iter().map(|l| l.weights.iter().map(|&v| v * v).sum::<T>()).sum();
        T::of(weight_decay / 2.0) * sq
    }

    /// Focal loss over labelled nodes plus `(λ/2)·Σ‖Θ‖²`.
    pub fn objective(&self, probs: &[T], mask: &LabelMask, loss: &FocalLoss, weight_decay: f64) -> Result<T> {
        Ok(loss.value(probs, mask)? + self.weight_penalty(weight_decay))
    }

    /// Gradient of [`Model::objective`] w.r.t. every layer's weights.
    pub fn backward(
        &self,
        op: &PropagationOperator<T>,
        cache: &ForwardCache<T>,
        mask: &LabelMask,
        loss: &FocalLoss,
        weight_decay: f64,
    ) -> Result<Vec<Array2<T>>> {
        let stale = cache.layers.len() != self.layers.len()
            || cache
                .layers
                .iter()
                .zip(&self.layers)
                .any(|(c, l)| c.input.ncols() != l.weights.nrows() || c.pre_activation.ncols() != l.weights.ncols());
        if stale || cache.probs.len() != op.size() {
            return Err(Error::Setup("forward cache does not match this model".into()));
        }
        let dlogits = loss.logit_gradient(&cache.probs, mask)?;
        let mut grad = Array2::from_shape_vec((dlogits.len(), 1), dlogits)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        let decay = T::of(weight_decay);
        let mut grads = Vec::with_capacity(self.layers.len());
        for (l, (layer, c)) in self.layers.iter().zip(&cache.layers).enumerate().rev() {
            layer.activation.backprop(&mut grad, &c.pre_activation);
            // P is symmetric, so its adjoint is itself
            let d_inner = op.matrix().mul_dense(grad.view())?;
            let mut d_theta = c.input.t().dot(&d_inner);
            d_theta.scaled_add(decay, &layer.weights);
            grads.push(d_theta);
            if l > 0 {
                grad = d_inner.dot(&layer.weights.t());
                if let Some(m) = &c.mask {
                    grad *= m;
                }
            }
        }
        grads.reverse();
        Ok(grads)
    }

    /// `DNHM` checkpoint: magic, version, layer count, then per layer
    /// `rows, cols, activation` and the row-major float64 weights.
    pub fn to_checkpoint(&self) -> Vec<u8> {
        let mut out = CHECKPOINT_MAGIC.to_vec();
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for layer in &self.layers {
            let (r, c) = layer.weights.dim();
            for field in [r as u32, c as u32, layer.activation.code()] {
                out.extend_from_slice(&field.to_le_bytes());
            }
            for v in layer.weights.iter() {
                out.extend_from_slice(&v.as_f64().to_le_bytes());
            }
        }
        out
    }

    pub fn from_checkpoint(bytes: &[u8], dropout: f64) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4, "magic")? != CHECKPOINT_MAGIC {
            return Err(Error::format("magic", "expected \"DNHM\""));
        }
        let version = r.u32("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::format("version", format!("unsupported version {version}")));
        }
        let count = r.u32("layer count")? as usize;
        let mut layers = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let rows = r.u32("rows")? as usize;
            let cols = r.u32("cols")? as usize;
            let activation = Activation::from_code(r.u32("activation")?)?;
            let raw = r.take(rows * cols * 8, "weights")?;
            let values = raw
                .chunks_exact(8)
                .map(|c| T::of(f64::from_le_bytes(c.try_into().unwrap())))
                .collect();
            let weights = Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::Dimension(e.to_string()))?;
            layers.push(Layer { weights, activation });
        }
        if r.pos != bytes.len() {
            return Err(Error::format("weights", "trailing bytes after last layer"));
        }
        Self::new(layers, dropout)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, dropout: f64) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&bytes, dropout).map_err(|e| e.in_file(path))
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize, field: &'static str) -> Result<&'a [u8]> {
        let chunk = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::format(field, "checkpoint truncated"))?;
        self.pos += n;
        Ok(chunk)
    }

    fn u32(&mut self, field: &'static str) -> Result<u32> {
        self.take(4, field).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }
}
