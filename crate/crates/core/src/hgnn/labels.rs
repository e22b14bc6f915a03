//! Labelled-node masks and their seeded sampling.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::rng::{stage_rng, STAGE_LABELS};

const MAX_DRAWS: usize = 32;

/// Per-node supervision: `Some(true)` changed, `Some(false)` unchanged,
/// `None` unlabelled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    labels: Vec<Option<bool>>,
}

impl LabelMask {
    pub fn new(labels: Vec<Option<bool>>) -> Self {
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.labels[i]
    }

    pub fn labeled(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.labels.iter().enumerate().filter_map(|(i, l)| l.map(|y| (i, y)))
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        self.labeled().fold((0, 0), |(u, c), (_, y)| if y { (u, c + 1) } else { (u + 1, c) })
    }

    pub fn has_both_classes(&self) -> bool {
        let (u, c) = self.class_counts();
        u > 0 && c > 0
    }

    /// One line per node: `1`, `0` or `-`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(2 * self.labels.len());
        for l in &self.labels {
            let c = match l {
                Some(true) => '1',
                Some(false) => '0',
                None => '-',
            };
            writeln!(out, "{c}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| match l.trim() {
                "1" => Ok(Some(true)),
                "0" => Ok(Some(false)),
                "-" => Ok(None),
                other => Err(Error::format("label", format!("line {}: unexpected {other:?}", i + 1))),
            })
            .collect::<Result<_>>()
            .map(Self::new)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| e.in_file(path))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Uniform without replacement, redrawn while a class is missing.
    #[default]
    Uniform,
    /// The same ratio drawn from each class separately.
    Stratified,
}

impl FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(Sampling::Uniform),
            "stratified" => Ok(Sampling::Stratified),
            other => Err(Error::Parameter(format!("unknown label sampling {other:?}"))),
        }
    }
}

fn quota(ratio: f64, n: usize) -> usize {
    // guard against 0.05 * 1000 landing just above 50
    ((ratio * n as f64 - 1e-9).ceil().max(1.0) as usize).min(n)
}

/// Picks `⌈ratio·N⌉` nodes and copies their labels from `reference`.
///
/// With uniform sampling the first `k` entries of a seeded permutation are
/// taken, so for a fixed seed larger ratios label a superset of the nodes
/// chosen at smaller ratios (unless a redraw was needed).
pub fn sample_labels(ratio: f64, seed: u64, reference: &[bool], sampling: Sampling) -> Result<LabelMask> {
    let n = reference.len();
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Parameter(format!("label ratio must lie in (0, 1], got {ratio}")));
    }
    if n == 0 {
        return Err(Error::Setup("no nodes to label".into()));
    }
    let mut rng = stage_rng(seed, STAGE_LABELS);
    let k = quota(ratio, n);
    let build = |chosen: &[usize]| {
        let mut labels = vec![None; n];
        for &i in chosen {
            labels[i] = Some(reference[i]);
        }
        LabelMask::new(labels)
    };

    match sampling {
        Sampling::Uniform => {
            let mut order: Vec<usize> = (0..n).collect();
            for _ in 0..MAX_DRAWS {
                order.shuffle(&mut rng);
                let mask = build(&order[..k]);
                if mask.has_both_classes() || k == n {
                    return Ok(mask);
                }
            }
            Err(Error::Setup(format!(
                "could not draw both classes with {k} of {n} nodes after {MAX_DRAWS} attempts"
            )))
        }
        Sampling::Stratified => {
            let mut chosen = Vec::new();
            for class in [false, true] {
                let mut members: Vec<usize> = (0..n).filter(|&i| reference[i] == class).collect();
                if members.is_empty() {
                    continue;
                }
                members.shuffle(&mut rng);
                chosen.extend_from_slice(&members[..quota(ratio, members.len())]);
            }
            let mask = build(&chosen);
            if !mask.has_both_classes() && ratio < 1.0 {
                return Err(Error::Setup("reference contains a single class".into()));
            }
            Ok(mask)
        }
    }
}

/// Per-region truth: a region is changed when at least half its pixels are
/// marked changed (non-zero) in the reference map.
pub fn majority_labels(reference: &Raster, labels: &[u32], regions: usize) -> Result<Vec<bool>> {
    let refs = reference
        .as_u8()
        .filter(|_| reference.channels() == 1)
        .ok_or_else(|| Error::format("dtype", "reference change map must be single-channel uint8"))?;
    if refs.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "reference has {} pixels, label map has {}",
            refs.len(),
            labels.len()
        )));
    }
    let mut changed = vec![0usize; regions];
    let mut total = vec![0usize; regions];
    for (&r, &l) in refs.iter().zip(labels) {
        let l = l as usize;
        if l >= regions {
            return Err(Error::Dimension(format!("label {l} outside 0..{regions}")));
        }
        total[l] += 1;
        if r != 0 {
            changed[l] += 1;
        }
    }
    Ok(changed.iter().zip(&total).map(|(&c, &t)| 2 * c >= t && t > 0).collect())
}
