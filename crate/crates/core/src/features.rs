//! Object-wise node features.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::scalar::Scalar;
use crate::segmentation::Segmentation;

/// `N x d` matrix, one row per fine region.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatures<T> {
    matrix: Array2<T>,
}

impl<T: Scalar> NodeFeatures<T> {
    pub fn new(matrix: Array2<T>) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("node features must be finite".into()));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<T> {
        self.matrix
    }

    pub fn nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Per-column z-scores; constant columns become zero.
    pub fn standardized(&self) -> Self {
        let n = T::of_usize(self.nodes().max(1));
        let mut out = self.matrix.clone();
        for mut col in out.columns_mut() {
            let mean = col.iter().copied().sum::<T>() / n;
            let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
            let std = var.sqrt();
            col.mapv_inplace(|v| if std > T::zero() { (v - mean) / std } else { T::zero() });
        }
        Self { matrix: out }
    }

    /// Encodes as an `N x d x 1` float32 raster.
    pub fn to_raster(&self) -> Result<Raster> {
        let data = self.matrix.iter().map(|v| v.as_f64() as f32).collect();
        Raster::from_f32(self.nodes(), self.dim(), 1, data)
    }

    pub fn from_raster(r: &Raster) -> Result<Self> {
        let data = r
            .as_f32()
            .filter(|_| r.channels() == 1)
            .ok_or_else(|| Error::format("dtype", "node features must be a single-channel float32 raster"))?;
        let values = data.iter().map(|&v| T::of(v as f64)).collect();
        let matrix = Array2::from_shape_vec((r.height(), r.width()), values)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        Self::new(matrix)
    }
}

/// Mean of the feature map over each fine region.
pub fn pool<T: Scalar>(feature_map: &Raster, seg: &Segmentation) -> Result<NodeFeatures<T>> {
    pool_labels(feature_map, seg.labels(), seg.height(), seg.width(), seg.region_count())
}

pub fn pool_labels<T: Scalar>(
    feature_map: &Raster,
    labels: &[u32],
    height: usize,
    width: usize,
    regions: usize,
) -> Result<NodeFeatures<T>> {
    if feature_map.height() != height || feature_map.width() != width {
        return Err(Error::Dimension(format!(
            "feature map is {}x{}, segmentation is {height}x{width}",
            feature_map.height(),
            feature_map.width()
        )));
    }
    let values = feature_map
        .as_f32()
        .ok_or_else(|| Error::format("dtype", "feature map must be float32"))?;
    let d = feature_map.channels();
    let mut sums = Array2::<f64>::zeros((regions, d));
    let mut counts = vec![0usize; regions];
    for (p, &l) in labels.iter().enumerate() {
        let l = l as usize;
        if l >= regions {
            return Err(Error::Dimension(format!("label {l} outside 0..{regions}")));
        }
        counts[l] += 1;
        let mut row = sums.row_mut(l);
        for (acc, &v) in row.iter_mut().zip(&values[p * d..(p + 1) * d]) {
            *acc += v as f64;
        }
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Dimension(format!("region {empty} has no pixels")));
    }
    let matrix = Array2::from_shape_fn((regions, d), |(i, k)| T::of(sums[[i, k]] / counts[i] as f64));
    NodeFeatures::new(matrix)
}

/// Windowed statistics per pixel and channel: value, mean, population std
/// and range over a `(2r+1)²` window with replicated borders.
pub fn baseline_features(stacked: &Raster, radius: usize) -> Result<Raster> {
    let values = stacked
        .as_f32()
        .ok_or_else(|| Error::format("dtype", "baseline features need a float32 raster"))?;
    let (h, w, c) = (stacked.height(), stacked.width(), stacked.channels());
    let r = radius as isize;
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let count = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    let mut out = Vec::with_capacity(h * w * c * 4);
    for y in 0..h {
        for x in 0..w {
            for k in 0..c {
                let mut sum = 0.0f64;
                let mut sum_sq = 0.0f64;
                let mut lo = f32::INFINITY;
                let mut hi = f32::NEG_INFINITY;
                for dy in -r..=r {
                    let yy = clamp(y as isize + dy, h);
                    for dx in -r..=r {
                        let xx = clamp(x as isize + dx, w);
                        let v = values[(yy * w + xx) * c + k];
                        sum += v as f64;
                        sum_sq += (v as f64) * (v as f64);
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                let mean = sum / count;
                let var = (sum_sq / count - mean * mean).max(0.0);
                out.extend_from_slice(&[values[(y * w + x) * c + k], mean as f32, var.sqrt() as f32, hi - lo]);
            }
        }
    }
    Raster::from_f32(h, w, 4 * c, out)
}
