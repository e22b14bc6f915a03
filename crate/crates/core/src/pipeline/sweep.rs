//! One-parameter sweeps over full pipeline runs.

use std::fmt::Write as _;
use std::fs;
use std::str::FromStr;
use std::thread;

use crate::error::{Error, Result};
use crate::evaluation::Report;

use super::config::PipelineConfig;
use super::run_pipeline;

pub const SWEEP_HEADER: &str = "value,FAR,MAR,OA,Kappa";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    CoarseScale,
    LabelRatio,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::CoarseScale => "coarse_scale",
            SweepParam::LabelRatio => "label_ratio",
        }
    }

    fn apply(self, cfg: &mut PipelineConfig, value: f64) {
        match self {
            SweepParam::CoarseScale => cfg.coarse_scale = value,
            SweepParam::LabelRatio => cfg.label_ratio = value,
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "coarse_scale" | "s2" => Ok(SweepParam::CoarseScale),
            "label_ratio" => Ok(SweepParam::LabelRatio),
            other => Err(Error::Parameter(format!("cannot sweep {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub report: Report,
}

/// Runs the pipeline once per value, each in its own subdirectory of the
/// base output directory, and writes `sweep_<param>.csv` there.
pub fn run_sweep(base: &PipelineConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Parameter("sweep needs at least one value".into()));
    }
    let configs: Vec<PipelineConfig> = values
        .iter()
        .map(|&v| {
            let mut cfg = base.clone();
            param.apply(&mut cfg, v);
            cfg.out_dir = base.out_dir.join(format!("{}_{v}", param.name()));
            cfg.validate().map(|_| cfg)
        })
        .collect::<Result<_>>()?;

    let reports: Vec<Result<Report>> = thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| s.spawn(move || run_pipeline(cfg).map(|o| o.report)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let points = values
        .iter()
        .zip(reports)
        .map(|(&value, report)| report.map(|report| SweepPoint { value, report }))
        .collect::<Result<Vec<_>>>()?;

    let mut csv = format!("{SWEEP_HEADER}\n");
    for p in &points {
        let m = &p.report.metrics;
        writeln!(csv, "{},{},{},{},{}", p.value, m.far, m.mar, m.oa, m.kappa).unwrap();
    }
    let path = base.out_dir.join(format!("sweep_{}.csv", param.name()));
    fs::create_dir_all(&base.out_dir).map_err(|e| Error::io(&base.out_dir, e))?;
    fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    Ok(points)
}
