//! Pipeline stages. Each stage reads its inputs from the configured paths
//! and the output directory, and persists what it produces there, so the
//! stages compose through the filesystem alone.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evaluation::{confusion, paint, Report};
use crate::features::{baseline_features, pool_labels, NodeFeatures};
use crate::hgnn::{majority_labels, sample_labels, train, LabelMask, Model};
use crate::hypergraph::Hypergraph;
use crate::raster::{read_raster, stack, write_raster, Raster, RasterFormat};
use crate::rng::{stage_rng, STAGE_INIT};
use crate::segmentation::{coarsen, label_adjacency, segment, validate_label_map, Hierarchy};

use super::config::PipelineConfig;

pub const STACKED: &str = "stacked.dnhg";
pub const FINE_LABELS: &str = "fine_labels.dnhg";
pub const COARSE_LABELS: &str = "coarse_labels.dnhg";
pub const HIERARCHY: &str = "hierarchy.txt";
pub const PIXEL_FEATURES: &str = "pixel_features.dnhg";
pub const NODE_FEATURES: &str = "node_features.dnhg";
pub const HYPERGRAPH: &str = "hypergraph.txt";
pub const LABEL_MASK: &str = "label_mask.txt";
pub const MODEL: &str = "model.dnhm";
pub const LOSS_HISTORY: &str = "loss_history.txt";
pub const PROBABILITIES: &str = "probabilities.txt";
pub const CHANGE_MAP: &str = "change_map.pgm";
pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_TEXT: &str = "metrics.txt";

/// Every artifact a full run leaves behind, in stage order.
pub const ARTIFACTS: &[&str] = &[
    STACKED,
    FINE_LABELS,
    COARSE_LABELS,
    HIERARCHY,
    PIXEL_FEATURES,
    NODE_FEATURES,
    HYPERGRAPH,
    LABEL_MASK,
    MODEL,
    LOSS_HISTORY,
    PROBABILITIES,
    CHANGE_MAP,
    METRICS_JSON,
    METRICS_TEXT,
];

fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Parameter(format!("{key} is not set")))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn prepare_out(cfg: &PipelineConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))
}

fn read_labels(cfg: &PipelineConfig) -> Result<(Raster, usize)> {
    let path = cfg.out(FINE_LABELS);
    let map = read_raster(&path)?;
    let n = validate_label_map(&map).map_err(|e| e.in_file(&path))?;
    Ok((map, n))
}

fn value_range(r: &Raster) -> f64 {
    let (lo, hi) = r
        .as_f32()
        .unwrap_or(&[])
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi >= lo {
        (hi - lo) as f64
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSummary {
    pub fine_scale: f64,
    pub coarse_scale: f64,
    pub fine_regions: usize,
    pub coarse_regions: usize,
}

impl fmt::Display for SegmentSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "fine regions {} (scale {:.4}), coarse regions {} (scale {:.4})",
            self.fine_regions, self.fine_scale, self.coarse_regions, self.coarse_scale
        )
    }
}

/// Stacks the pair and segments it at both scales.
pub fn run_segment(cfg: &PipelineConfig) -> Result<SegmentSummary> {
    cfg.validate()?;
    let t1 = read_raster(required(&cfg.t1, "t1")?)?;
    let t2 = read_raster(required(&cfg.t2, "t2")?)?;
    let stacked = stack(&t1, &t2)?;
    prepare_out(cfg)?;
    write_raster(&stacked, cfg.out(STACKED), RasterFormat::Dnhg)?;

    let (fine_params, coarse_params) = cfg.seg_params(value_range(&stacked))?;
    let fine = segment(&stacked, &fine_params)?;
    let (coarse, hierarchy) = coarsen(&fine, &stacked, &coarse_params)?;
    write_raster(fine.label_map(), cfg.out(FINE_LABELS), RasterFormat::Dnhg)?;
    write_raster(coarse.label_map(), cfg.out(COARSE_LABELS), RasterFormat::Dnhg)?;
    hierarchy.write(cfg.out(HIERARCHY))?;
    Ok(SegmentSummary {
        fine_scale: fine_params.scale,
        coarse_scale: coarse_params.scale,
        fine_regions: fine.region_count(),
        coarse_regions: coarse.region_count(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSummary {
    pub nodes: usize,
    pub dim: usize,
    pub external: bool,
}

impl fmt::Display for FeatureSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let source = if self.external { "external feature map" } else { "windowed statistics" };
        write!(f, "{} nodes x {} features from {source}", self.nodes, self.dim)
    }
}

/// Pools per-pixel features over the fine regions.
pub fn run_features(cfg: &PipelineConfig) -> Result<FeatureSummary> {
    cfg.validate()?;
    let (labels, n) = read_labels(cfg)?;
    let pixel = match &cfg.feature_map {
        Some(path) => {
            let fm = read_raster(path)?;
            if fm.as_f32().is_some() {
                fm
            } else {
                Raster::from_f32(fm.height(), fm.width(), fm.channels(), fm.to_unit_f32())?
            }
        }
        None => {
            let stacked = read_raster(cfg.out(STACKED))?;
            let fm = baseline_features(&stacked, cfg.feature_radius)?;
            write_raster(&fm, cfg.out(PIXEL_FEATURES), RasterFormat::Dnhg)?;
            fm
        }
    };
    let ids = labels.as_u32().expect("validated label map");
    let mut features = pool_labels::<f64>(&pixel, ids, labels.height(), labels.width(), n)?;
    if cfg.standardize {
        features = features.standardized();
    }
    write_raster(&features.to_raster()?, cfg.out(NODE_FEATURES), RasterFormat::Dnhg)?;
    Ok(FeatureSummary {
        nodes: features.nodes(),
        dim: features.dim(),
        external: cfg.feature_map.is_some(),
    })
}

fn read_features(cfg: &PipelineConfig) -> Result<NodeFeatures<f64>> {
    let path = cfg.out(NODE_FEATURES);
    NodeFeatures::from_raster(&read_raster(&path)?).map_err(|e| e.in_file(&path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSummary {
    pub vertices: usize,
    pub incidences: usize,
    pub mean_weight: f64,
}

impl fmt::Display for GraphSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} hyperedges, {} incidences, mean weight {:.4}",
            self.vertices, self.incidences, self.mean_weight
        )
    }
}

/// Builds the dual-neighbourhood hypergraph over the fine regions.
pub fn run_graph(cfg: &PipelineConfig) -> Result<GraphSummary> {
    cfg.validate()?;
    let (labels, n) = read_labels(cfg)?;
    let adjacency = label_adjacency(&labels)?;
    let hierarchy = Hierarchy::read(cfg.out(HIERARCHY))?;
    let features = read_features(cfg)?;
    if hierarchy.fine_count() != n || features.nodes() != n {
        return Err(Error::Dimension(format!(
            "{n} fine regions, {} hierarchy entries, {} feature rows",
            hierarchy.fine_count(),
            features.nodes()
        )));
    }
    let graph = Hypergraph::build(&adjacency, &hierarchy, &features, cfg.bandwidth)?;
    graph.operator()?;
    graph.write(cfg.out(HYPERGRAPH))?;
    let weights = graph.weights();
    Ok(GraphSummary {
        vertices: graph.vertex_count(),
        incidences: graph.edge_degrees().iter().sum(),
        mean_weight: weights.iter().sum::<f64>() / weights.len().max(1) as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub labeled: usize,
    pub labeled_changed: usize,
    pub epochs: usize,
    pub first_loss: f64,
    pub final_loss: f64,
}

impl fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} labelled nodes ({} changed), {} epochs, objective {:.6} -> {:.6}",
            self.labeled, self.labeled_changed, self.epochs, self.first_loss, self.final_loss
        )
    }
}

/// Samples training labels from the reference and fits the network.
pub fn run_train(cfg: &PipelineConfig) -> Result<TrainSummary> {
    cfg.validate()?;
    let (labels, n) = read_labels(cfg)?;
    let reference = read_raster(required(&cfg.reference, "reference")?)?;
    let truth = majority_labels(&reference, labels.as_u32().expect("validated label map"), n)?;
    let mask = sample_labels(cfg.label_ratio, cfg.seed, &truth, cfg.label_sampling)?;
    mask.write(cfg.out(LABEL_MASK))?;

    let op = Hypergraph::<f64>::read(cfg.out(HYPERGRAPH))?.operator()?;
    let features = read_features(cfg)?;
    if features.nodes() != op.size() {
        return Err(Error::Dimension(format!(
            "{} feature rows for {} graph vertices",
            features.nodes(),
            op.size()
        )));
    }
    let widths = [features.dim(), cfg.hidden, 1];
    let model = Model::<f64>::glorot(&widths, cfg.dropout, &mut stage_rng(cfg.seed, STAGE_INIT))?
        .with_input_dropout(cfg.dropout_input);
    let (model, history) = train(model, &op, features.matrix().view(), &mask, &cfg.train_config())?;
    model.save(cfg.out(MODEL))?;
    let history_text: String = history.iter().map(|v| format!("{v}\n")).collect();
    write_text(&cfg.out(LOSS_HISTORY), &history_text)?;

    let (_, changed) = mask.class_counts();
    Ok(TrainSummary {
        labeled: mask.labeled_count(),
        labeled_changed: changed,
        epochs: history.len(),
        first_loss: history.first().copied().unwrap_or(f64::NAN),
        final_loss: history.last().copied().unwrap_or(f64::NAN),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictSummary {
    pub changed_nodes: usize,
    pub changed_pixels: usize,
    pub pixels: usize,
}

impl fmt::Display for PredictSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} changed nodes, {} of {} pixels marked changed",
            self.changed_nodes, self.changed_pixels, self.pixels
        )
    }
}

/// Runs inference and paints node decisions back to pixels.
pub fn run_predict(cfg: &PipelineConfig) -> Result<PredictSummary> {
    cfg.validate()?;
    let (labels, n) = read_labels(cfg)?;
    let op = Hypergraph::<f64>::read(cfg.out(HYPERGRAPH))?.operator()?;
    let features = read_features(cfg)?;
    let model = Model::<f64>::load(cfg.out(MODEL), cfg.dropout)?;
    if op.size() != n || features.nodes() != n {
        return Err(Error::Dimension(format!(
            "{n} fine regions, {} graph vertices, {} feature rows",
            op.size(),
            features.nodes()
        )));
    }
    let probs = model.predict(&op, features.matrix().view())?;
    let text: String = probs.iter().map(|p| format!("{p}\n")).collect();
    write_text(&cfg.out(PROBABILITIES), &text)?;

    let ids = labels.as_u32().expect("validated label map");
    let map = paint(&probs, ids, labels.height(), labels.width(), cfg.threshold)?;
    write_raster(&map, cfg.out(CHANGE_MAP), RasterFormat::Pgm)?;
    Ok(PredictSummary {
        changed_nodes: probs.iter().filter(|&&p| p >= cfg.threshold).count(),
        changed_pixels: map.as_u8().unwrap().iter().filter(|&&v| v != 0).count(),
        pixels: map.pixels(),
    })
}

/// Reads node probabilities written by [`run_predict`].
pub fn read_probabilities(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    read_text(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse()
                .map_err(|_| Error::File {
                    path: path.to_path_buf(),
                    reason: format!("invalid probability {l:?}"),
                })
        })
        .collect()
}

/// Scores a change map against a reference map.
pub fn evaluate_files(prediction: impl AsRef<Path>, reference: impl AsRef<Path>) -> Result<Report> {
    let pred = read_raster(prediction)?;
    let reference = read_raster(reference)?;
    Ok(Report::new(confusion(&pred, &reference)?))
}

/// Scores the stored change map and writes the metrics.
pub fn run_evaluate(cfg: &PipelineConfig) -> Result<Report> {
    let reference = required(&cfg.reference, "reference")?;
    let report = evaluate_files(cfg.out(CHANGE_MAP), reference)?;
    prepare_out(cfg)?;
    write_text(&cfg.out(METRICS_JSON), &(report.to_json() + "\n"))?;
    write_text(&cfg.out(METRICS_TEXT), &report.to_string())?;
    Ok(report)
}

/// Reads a label mask written by [`run_train`].
pub fn read_label_mask(cfg: &PipelineConfig) -> Result<LabelMask> {
    LabelMask::read(cfg.out(LABEL_MASK))
}
