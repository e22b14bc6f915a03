use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hgcd_core::pipeline::{
    evaluate_files, run_evaluate, run_features, run_graph, run_pipeline, run_predict, run_segment, run_sweep,
    run_train, synth, PipelineConfig, SweepParam, SWEEP_HEADER,
};

/// Object-level change detection with a dual-neighbourhood hypergraph network.
#[derive(Parser)]
#[command(name = "hgcd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic image pair and its reference change map.
    Synth(SynthArgs),
    /// Stack the pair and segment it at the fine and coarse scales.
    Segment(ConfigArgs),
    /// Pool pixel features over the fine regions.
    Features(ConfigArgs),
    /// Build the hypergraph over the fine regions.
    Graph(ConfigArgs),
    /// Sample labels and train the network.
    Train(ConfigArgs),
    /// Predict node probabilities and paint the change map.
    Predict(ConfigArgs),
    /// Score a change map against the reference.
    Evaluate(EvaluateArgs),
    /// Run every stage and write a manifest.
    Pipeline(ConfigArgs),
    /// Run the pipeline over several values of one parameter.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 128)]
    height: usize,
    #[arg(long, default_value_t = 128)]
    width: usize,
    /// Number of changed rectangles.
    #[arg(long, default_value_t = 3)]
    changes: usize,
    /// Standard deviation of the additive noise.
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    t1: Option<PathBuf>,
    #[arg(long)]
    t2: Option<PathBuf>,
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Per-pixel feature map replacing the built-in windowed statistics.
    #[arg(long)]
    feature_map: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    fine_scale: Option<f64>,
    #[arg(long)]
    coarse_scale: Option<f64>,
    #[arg(long)]
    label_ratio: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Any configuration key, as `key=value`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::read(path)?,
            None => PipelineConfig::default(),
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let overrides = [
            ("t1", path(&self.t1)),
            ("t2", path(&self.t2)),
            ("reference", path(&self.reference)),
            ("feature_map", path(&self.feature_map)),
            ("out_dir", path(&self.out_dir)),
            ("fine_scale", self.fine_scale.map(|v| v.to_string())),
            ("coarse_scale", self.coarse_scale.map(|v| v.to_string())),
            ("label_ratio", self.label_ratio.map(|v| v.to_string())),
            ("epochs", self.epochs.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                cfg.set(key, &value)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Change map to score instead of the one in the output directory.
    #[arg(long)]
    prediction: Option<PathBuf>,
    /// Print the metrics as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Parameter to vary: coarse_scale or label_ratio.
    #[arg(long)]
    param: SweepParam,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => {
            let scene = synth(a.height, a.width, a.changes, a.noise, a.seed)?;
            scene.write(&a.out)?;
            println!("wrote synthetic scene to {}", a.out.display());
        }
        Command::Segment(a) => println!("{}", run_segment(&a.load()?)?),
        Command::Features(a) => println!("{}", run_features(&a.load()?)?),
        Command::Graph(a) => println!("{}", run_graph(&a.load()?)?),
        Command::Train(a) => println!("{}", run_train(&a.load()?)?),
        Command::Predict(a) => println!("{}", run_predict(&a.load()?)?),
        Command::Evaluate(a) => {
            let cfg = a.config.load()?;
            let report = match &a.prediction {
                Some(pred) => {
                    let reference = cfg.reference.as_ref().context("reference is not set")?;
                    evaluate_files(pred, reference)?
                }
                None => run_evaluate(&cfg)?,
            };
            if a.json {
                println!("{}", report.to_json());
            } else {
                print!("{report}");
            }
        }
        Command::Pipeline(a) => {
            let outcome = run_pipeline(&a.load()?)?;
            println!("segment   {}", outcome.segment);
            println!("features  {}", outcome.features);
            println!("graph     {}", outcome.graph);
            println!("train     {}", outcome.train);
            println!("predict   {}", outcome.predict);
            print!("{}", outcome.report);
        }
        Command::Sweep(a) => {
            let points = run_sweep(&a.config.load()?, a.param, &a.values)?;
            println!("{SWEEP_HEADER}");
            for p in points {
                let m = p.report.metrics;
                println!("{},{:.6},{:.6},{:.6},{:.6}", p.value, m.far, m.mar, m.oa, m.kappa);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
