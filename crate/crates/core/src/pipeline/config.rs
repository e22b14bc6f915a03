//! Flat `key = value` pipeline configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hgnn::{FocalLoss, OptimizerKind, Sampling, TrainConfig};
use crate::hypergraph::Bandwidth;
use crate::segmentation::SegParams;

/// How segmentation scales are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleUnits {
    /// Scales are given for 8-bit radiometry and rescaled to the dynamic
    /// range of the stacked image: `s · sqrt(range / 255)`.
    #[default]
    Auto,
    /// Scales apply to the stacked values as they are.
    Raw,
}

impl ScaleUnits {
    fn name(self) -> &'static str {
        match self {
            ScaleUnits::Auto => "auto",
            ScaleUnits::Raw => "raw",
        }
    }

    /// Multiplier turning configured scales into merge thresholds for an
    /// image whose values span `range`.
    pub fn factor(self, range: f64) -> f64 {
        match self {
            ScaleUnits::Raw => 1.0,
            ScaleUnits::Auto if range > 0.0 && range.is_finite() => (range / 255.0).sqrt(),
            ScaleUnits::Auto => 1.0,
        }
    }
}

impl FromStr for ScaleUnits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(ScaleUnits::Auto),
            "raw" => Ok(ScaleUnits::Raw),
            other => Err(Error::Parameter(format!("unknown scale units {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub t1: Option<PathBuf>,
    pub t2: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub feature_map: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub fine_scale: f64,
    pub coarse_scale: f64,
    pub scale_units: ScaleUnits,
    pub shape: f64,
    pub compactness: f64,
    pub feature_radius: usize,
    pub standardize: bool,
    pub bandwidth: Bandwidth<f64>,
    pub label_ratio: f64,
    pub label_sampling: Sampling,
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub dropout_input: bool,
    pub alpha: f64,
    pub gamma: f64,
    pub optimizer: OptimizerKind,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            t1: None,
            t2: None,
            reference: None,
            feature_map: None,
            out_dir: PathBuf::from("out"),
            fine_scale: 8.0,
            coarse_scale: 15.0,
            scale_units: ScaleUnits::Auto,
            shape: SegParams::DEFAULT_SHAPE,
            compactness: SegParams::DEFAULT_COMPACTNESS,
            feature_radius: 2,
            standardize: false,
            bandwidth: Bandwidth::Fixed(1.0),
            label_ratio: 0.05,
            label_sampling: Sampling::Uniform,
            hidden: 64,
            epochs: 400,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            dropout: 0.5,
            dropout_input: true,
            alpha: 0.2,
            gamma: 2.0,
            optimizer: OptimizerKind::adam(),
            threshold: 0.5,
            seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parameter(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parameter(format!("invalid value {value:?} for {key}"))),
    }
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl PipelineConfig {
    pub const KEYS: &'static [&'static str] = &[
        "t1",
        "t2",
        "reference",
        "feature_map",
        "out_dir",
        "fine_scale",
        "coarse_scale",
        "scale_units",
        "shape",
        "compactness",
        "feature_radius",
        "standardize",
        "bandwidth",
        "label_ratio",
        "label_sampling",
        "hidden",
        "epochs",
        "learning_rate",
        "weight_decay",
        "dropout",
        "dropout_input",
        "alpha",
        "gamma",
        "optimizer",
        "threshold",
        "seed",
    ];

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "t1" => self.t1 = opt_path(value),
            "t2" => self.t2 = opt_path(value),
            "reference" => self.reference = opt_path(value),
            "feature_map" => self.feature_map = opt_path(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "fine_scale" => self.fine_scale = parse(key, value)?,
            "coarse_scale" => self.coarse_scale = parse(key, value)?,
            "scale_units" => self.scale_units = value.parse()?,
            "shape" => self.shape = parse(key, value)?,
            "compactness" => self.compactness = parse(key, value)?,
            "feature_radius" => self.feature_radius = parse(key, value)?,
            "standardize" => self.standardize = parse_bool(key, value)?,
            "bandwidth" => self.bandwidth = value.parse()?,
            "label_ratio" => self.label_ratio = parse(key, value)?,
            "label_sampling" => self.label_sampling = value.parse()?,
            "hidden" => self.hidden = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "weight_decay" => self.weight_decay = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "dropout_input" => self.dropout_input = parse_bool(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "optimizer" => self.optimizer = value.parse()?,
            "threshold" => self.threshold = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(Error::Parameter(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| e.in_file(path))
    }

    /// Canonical text form; parsing it yields an identical config.
    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let bandwidth = match self.bandwidth {
            Bandwidth::Auto => "auto".to_string(),
            Bandwidth::Fixed(b) => b.to_string(),
        };
        let sampling = match self.label_sampling {
            Sampling::Uniform => "uniform",
            Sampling::Stratified => "stratified",
        };
        let entries: Vec<(&str, String)> = vec![
            ("t1", path(&self.t1)),
            ("t2", path(&self.t2)),
            ("reference", path(&self.reference)),
            ("feature_map", path(&self.feature_map)),
            ("out_dir", self.out_dir.display().to_string()),
            ("fine_scale", self.fine_scale.to_string()),
            ("coarse_scale", self.coarse_scale.to_string()),
            ("scale_units", self.scale_units.name().to_string()),
            ("shape", self.shape.to_string()),
            ("compactness", self.compactness.to_string()),
            ("feature_radius", self.feature_radius.to_string()),
            ("standardize", self.standardize.to_string()),
            ("bandwidth", bandwidth),
            ("label_ratio", self.label_ratio.to_string()),
            ("label_sampling", sampling.to_string()),
            ("hidden", self.hidden.to_string()),
            ("epochs", self.epochs.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("weight_decay", self.weight_decay.to_string()),
            ("dropout", self.dropout.to_string()),
            ("dropout_input", self.dropout_input.to_string()),
            ("alpha", self.alpha.to_string()),
            ("gamma", self.gamma.to_string()),
            ("optimizer", self.optimizer.name().to_string()),
            ("threshold", self.threshold.to_string()),
            ("seed", self.seed.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fine_scale > 0.0) {
            return Err(Error::Parameter(format!("fine scale must be positive, got {}", self.fine_scale)));
        }
        if !(self.coarse_scale > self.fine_scale) {
            return Err(Error::Parameter(format!(
                "coarse scale must exceed fine scale ({} <= {})",
                self.coarse_scale, self.fine_scale
            )));
        }
        SegParams::new(self.fine_scale, self.shape, self.compactness)?;
        if !(self.label_ratio > 0.0 && self.label_ratio <= 1.0) {
            return Err(Error::Parameter(format!("label ratio must lie in (0, 1], got {}", self.label_ratio)));
        }
        if self.hidden == 0 {
            return Err(Error::Parameter("hidden width must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Parameter(format!("dropout must lie in [0, 1), got {}", self.dropout)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Parameter(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        self.train_config().validate()
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            loss: FocalLoss {
                alpha: self.alpha,
                gamma: self.gamma,
            },
            seed: self.seed,
            optimizer: self.optimizer,
        }
    }

    /// Fine and coarse merge parameters for an image spanning `range`.
    pub fn seg_params(&self, range: f64) -> Result<(SegParams, SegParams)> {
        let k = self.scale_units.factor(range);
        Ok((
            SegParams::new(self.fine_scale * k, self.shape, self.compactness)?,
            SegParams::new(self.coarse_scale * k, self.shape, self.compactness)?,
        ))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}
