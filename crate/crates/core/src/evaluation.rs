//! Pixel-level accuracy assessment of change maps.

use std::fmt;

use num_traits::{FromPrimitive, Num};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::scalar::Scalar;

pub const CHANGED: u8 = 255;
pub const UNCHANGED: u8 = 0;

/// Marks every pixel whose region probability reaches `threshold`.
pub fn paint<T: Scalar>(node_probs: &[T], labels: &[u32], height: usize, width: usize, threshold: f64) -> Result<Raster> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Parameter(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let n = labels.iter().max().map_or(0, |&m| m as usize + 1);
    if n != node_probs.len() {
        return Err(Error::Dimension(format!(
            "{} node probabilities for {n} regions",
            node_probs.len()
        )));
    }
    let t = T::of(threshold);
    let map = labels
        .iter()
        .map(|&l| if node_probs[l as usize] >= t { CHANGED } else { UNCHANGED })
        .collect();
    Raster::from_u8(height, width, 1, map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionCounts {
    #[serde(rename = "TP")]
    pub tp: u64,
    #[serde(rename = "FP")]
    pub fp: u64,
    #[serde(rename = "TN")]
    pub tn: u64,
    #[serde(rename = "FN")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Counts with prediction and reference roles exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            tp: self.tp,
            fp: self.fn_,
            tn: self.tn,
            fn_: self.fp,
        }
    }
}

fn binary_values(r: &Raster, what: &str) -> Result<Vec<bool>> {
    let v = r
        .as_u8()
        .filter(|_| r.channels() == 1)
        .ok_or_else(|| Error::format("dtype", format!("{what} must be a single-channel uint8 map")))?;
    v.iter()
        .map(|&b| match b {
            CHANGED => Ok(true),
            UNCHANGED => Ok(false),
            other => Err(Error::format("value", format!("{what} contains {other}, expected 0 or 255"))),
        })
        .collect()
}

/// Per-pixel tally with "changed" as the positive class.
pub fn confusion(pred: &Raster, reference: &Raster) -> Result<ConfusionCounts> {
    if !pred.same_grid(reference) {
        return Err(Error::Dimension(format!(
            "prediction is {}x{}, reference is {}x{}",
            pred.height(),
            pred.width(),
            reference.height(),
            reference.width()
        )));
    }
    let p = binary_values(pred, "prediction")?;
    let r = binary_values(reference, "reference")?;
    let mut c = ConfusionCounts::default();
    for (&p, &r) in p.iter().zip(&r) {
        match (p, r) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// False-alarm rate, missed-alarm rate, overall accuracy and Cohen's kappa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics<T> {
    #[serde(rename = "FAR")]
    pub far: T,
    #[serde(rename = "MAR")]
    pub mar: T,
    #[serde(rename = "OA")]
    pub oa: T,
    #[serde(skip)]
    pub pre: T,
    #[serde(rename = "Kappa")]
    pub kappa: T,
}

/// Computes the metrics in any numeric field, so exact rationals can be used
/// to check the arithmetic. Zero denominators resolve to 0 for FAR/MAR; a
/// chance agreement of 1 yields kappa 1 when OA is 1 and 0 otherwise.
pub fn metrics<T>(c: &ConfusionCounts) -> Metrics<T>
where
    T: Num + Clone + PartialEq + FromPrimitive,
{
    let n = |v: u64| T::from_u64(v).expect("count fits the numeric type");
    let ratio = |num: u64, den: u64| if den == 0 { T::zero() } else { n(num) / n(den) };
    let total = c.total();
    let far = ratio(c.fp, c.fp + c.tn);
    let mar = ratio(c.fn_, c.fn_ + c.tp);
    let oa = ratio(c.tp + c.tn, total);
    let pre = if total == 0 {
        T::one()
    } else {
        let chance = n(c.tp + c.fn_) * n(c.tp + c.fp) + n(c.tn + c.fp) * n(c.tn + c.fn_);
        chance / (n(total) * n(total))
    };
    let kappa = if pre == T::one() {
        if oa == T::one() {
            T::one()
        } else {
            T::zero()
        }
    } else {
        (oa.clone() - pre.clone()) / (T::one() - pre.clone())
    };
    Metrics { far, mar, oa, pre, kappa }
}

/// Counts and `f64` metrics in one JSON object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Report {
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    #[serde(flatten)]
    pub metrics: Metrics<f64>,
}

impl Report {
    pub fn new(counts: ConfusionCounts) -> Self {
        Self {
            counts,
            metrics: metrics(&counts),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.counts;
        let m = &self.metrics;
        writeln!(f, "{:<6}{:>12}", "TP", c.tp)?;
        writeln!(f, "{:<6}{:>12}", "FP", c.fp)?;
        writeln!(f, "{:<6}{:>12}", "TN", c.tn)?;
        writeln!(f, "{:<6}{:>12}", "FN", c.fn_)?;
        writeln!(f, "{:<6}{:>12.6}", "FAR", m.far)?;
        writeln!(f, "{:<6}{:>12.6}", "MAR", m.mar)?;
        writeln!(f, "{:<6}{:>12.6}", "OA", m.oa)?;
        writeln!(f, "{:<6}{:>12.6}", "Kappa", m.kappa)
    }
}
