use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use vaeiw_core::features::neural::{load_weights, ModelKind, NeuralExtractor, NeuralMode};
use vaeiw_core::harness::{
    build_backend, collect_frames, run_benchmark, BackendKind, HarnessConfig, ScoreReport,
};
use vaeiw_core::{Budget, EnvConfig, FeatureExtractor, FrameSkip};

#[derive(Parser)]
#[command(name = "vaeiw", version, about = "Width-based planning over learned and hand-made screen features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record preprocessed frames from B-PROST RolloutIW episodes.
    Collect {
        #[command(flatten)]
        opts: RunOpts,
        /// Number of frames to store.
        #[arg(long, default_value_t = 15_000)]
        frames: usize,
        /// Resize frames to SIZE x SIZE instead of the native screen size.
        #[arg(long)]
        input_size: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Play episodes with one backend and write CSV and JSON reports.
    Plan {
        #[command(flatten)]
        opts: RunOpts,
        /// Output stem; `.csv` and `.json` are appended.
        #[arg(long)]
        out: PathBuf,
        /// Run episodes one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Merge reports, optionally normalizing against reference scores.
    Report {
        /// JSON reports to merge.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, requires = "human_score")]
        random_score: Option<f64>,
        #[arg(long, requires = "random_score")]
        human_score: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a weight file's manifest summary and feature-space sizes.
    InspectWeights { path: PathBuf },
}

#[derive(Args)]
struct RunOpts {
    /// TOML or JSON config with environment, backend, planner, extractor and run sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    backend: Option<BackendKind>,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, conflicts_with = "node_budget")]
    budget_ms: Option<u64>,
    #[arg(long)]
    node_budget: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f32>,
    #[arg(long)]
    frame_skip: Option<u32>,
    #[arg(long)]
    action_cap: Option<usize>,
}

fn load_config(path: &Path) -> Result<HarnessConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text)?
    } else {
        toml::from_str(&text)?
    };
    Ok(cfg)
}

impl RunOpts {
    fn resolve(&self) -> Result<HarnessConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => HarnessConfig::default(),
        };
        if let Some(name) = &self.env {
            cfg.environment = EnvConfig::by_name(name)?;
        }
        if let Some(b) = self.backend {
            cfg.backend.kind = b;
        }
        if let Some(w) = &self.weights {
            cfg.backend.weights = Some(w.clone());
        }
        if let Some(ms) = self.budget_ms {
            cfg.planner.budget = Budget::Millis(ms);
        }
        if let Some(n) = self.node_budget {
            cfg.planner.budget = Budget::Nodes(n);
        }
        if let Some(r) = self.runs {
            cfg.run.runs = r;
        }
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(a) = self.alpha {
            cfg.planner.alpha = a;
        }
        if let Some(g) = self.gamma {
            cfg.planner.gamma = g;
        }
        if let Some(l) = self.lambda {
            cfg.extractor.lambda = l;
        }
        if let Some(k) = self.frame_skip {
            cfg.run.frame_skip = FrameSkip::new(k)?;
        }
        if let Some(c) = self.action_cap {
            cfg.planner.action_cap = c;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn plan(cfg: &HarnessConfig, out: &Path, parallel: bool) -> Result<()> {
    let backend = build_backend(
        cfg.backend.kind,
        &cfg.environment,
        &cfg.extractor,
        None,
        cfg.backend.weights.as_deref(),
    )?;
    let score = run_benchmark(cfg, &backend, parallel)?;
    println!(
        "{} {}: mean {:.3} over {} runs",
        score.env,
        score.backend,
        score.mean,
        score.scores.len()
    );
    ScoreReport { entries: vec![score] }.write(out)?;
    Ok(())
}

fn report(inputs: &[PathBuf], reference: Option<(f64, f64)>, out: &Path) -> Result<()> {
    let mut merged = ScoreReport::default();
    for p in inputs {
        let r = ScoreReport::read(p).with_context(|| format!("reading {}", p.display()))?;
        merged.entries.extend(r.entries);
    }
    if let Some((random, human)) = reference {
        merged.normalize(random, human)?;
    }
    for e in &merged.entries {
        match e.normalized {
            Some(n) => println!("{} {}: mean {:.3} normalized {:.1}", e.env, e.backend, e.mean, n),
            None => println!("{} {}: mean {:.3}", e.env, e.backend, e.mean),
        }
    }
    merged.write(out)?;
    Ok(())
}

fn inspect(path: &Path) -> Result<()> {
    let weights = Arc::new(load_weights(path)?);
    let m = weights.manifest();
    let [h, w, c] = weights.latent_spec();
    println!("input      {}x{}x{}", m.input.height, m.input.width, m.input.channels);
    println!("layers     {}", m.layers.len());
    println!(
        "tensors    {} ({} parameters)",
        m.tensors.len(),
        m.tensors.iter().map(|t| t.numel()).sum::<usize>()
    );
    println!("latent     {h}x{w}x{c}");
    println!("kind       {:?}", weights.model_kind());
    match weights.model_kind() {
        ModelKind::Bernoulli => {
            let ex = NeuralExtractor::new(weights.clone(), NeuralMode::Threshold { lambda: m.lambda })?;
            println!("features   {} (threshold, lambda {})", ex.space().size(), m.lambda);
        }
        ModelKind::Gaussian => {
            for bits in [4, 6] {
                let ex = NeuralExtractor::new(weights.clone(), NeuralMode::Quantize { bits })?;
                println!("features   {} ({bits}-bit quantized)", ex.space().size());
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Collect {
            opts,
            frames,
            input_size,
            out,
        } => {
            let cfg = opts.resolve()?;
            let ds = collect_frames(&cfg.environment, &cfg, frames, &out, input_size.map(|s| (s, s)))?;
            println!(
                "wrote {} frames to {} ({} train, {} validation)",
                ds.len(),
                out.display(),
                ds.train_len(),
                ds.validation_len()
            );
        }
        Command::Plan { opts, out, sequential } => plan(&opts.resolve()?, &out, !sequential)?,
        Command::Report {
            inputs,
            random_score,
            human_score,
            out,
        } => report(&inputs, random_score.zip(human_score), &out)?,
        Command::InspectWeights { path } => inspect(&path)?,
    }
    Ok(())
}
