//! File-based orchestration of the full change-detection run.

mod config;
mod stages;
mod sweep;
mod synth;

use std::fmt::Write as _;
use std::fs;

use sha2::{Digest, Sha256};

pub use config::{PipelineConfig, ScaleUnits};
pub use stages::*;
pub use sweep::{run_sweep, SweepParam, SweepPoint, SWEEP_HEADER};
pub use synth::{synth, Rect, SynthScene, SYNTH_CHANNELS, SYNTH_REFERENCE, SYNTH_T1, SYNTH_T2};

use crate::error::{Error, Result};
use crate::evaluation::Report;
use crate::rng::{STAGE_DROPOUT, STAGE_INIT, STAGE_LABELS};

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub segment: SegmentSummary,
    pub features: FeatureSummary,
    pub graph: GraphSummary,
    pub train: TrainSummary,
    pub predict: PredictSummary,
    pub report: Report,
}

/// Runs every stage, scores the result and writes the manifest.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    cfg.validate()?;
    if cfg.reference.is_none() {
        return Err(Error::Parameter("reference is not set".into()));
    }
    let outcome = PipelineOutcome {
        segment: run_segment(cfg)?,
        features: run_features(cfg)?,
        graph: run_graph(cfg)?,
        train: run_train(cfg)?,
        predict: run_predict(cfg)?,
        report: run_evaluate(cfg)?,
    };
    write_manifest(cfg)?;
    Ok(outcome)
}

/// The effective configuration followed by a digest of every artifact
/// present in the output directory. The file parses as a configuration.
pub fn manifest_text(cfg: &PipelineConfig) -> Result<String> {
    let mut out = String::from("# hgcd run manifest\n");
    writeln!(
        out,
        "# random streams: root seed {}, stages {STAGE_LABELS} / {STAGE_INIT} / {STAGE_DROPOUT}",
        cfg.seed
    )
    .unwrap();
    out.push_str(&cfg.to_text());
    for name in ARTIFACTS {
        let path = cfg.out(name);
        if !path.exists() {
            continue;
        }
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        writeln!(out, "# sha256 {} {name}", hex::encode(Sha256::digest(&bytes))).unwrap();
    }
    Ok(out)
}

pub fn write_manifest(cfg: &PipelineConfig) -> Result<()> {
    let path = cfg.out(MANIFEST);
    fs::write(&path, manifest_text(cfg)?).map_err(|e| Error::io(&path, e))
}
