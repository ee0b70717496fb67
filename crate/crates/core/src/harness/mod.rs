//! Benchmark harness: configuration, backends, datasets and score reports.

pub mod backend;
pub mod config;
pub mod dataset;
pub mod report;
pub mod stats;

use rayon::prelude::*;
use thiserror::Error;

use crate::features::{BprostError, FeatureError, NeuralError};
use crate::novelty::NoveltyError;
use crate::planner::{derive_seed, run_episode, EpisodeRecord, PlanError};
use crate::sim::SimError;

pub use backend::{bprost_config, build_backend, Backend};
pub use config::{BackendKind, BackendSection, ExtractorSection, HarnessConfig, RunSection};
pub use dataset::{collect_frames, read_frame, split_point, write_frame, DatasetIndex, FrameDataset, FrameEntry};
pub use report::{mean, normalize_score, CsvRow, EnvScore, ScoreReport};
pub use stats::{binomial_upper_tail, sign_test, SignTest};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Bprost(#[from] BprostError),
    #[error(transparent)]
    Novelty(#[from] NoveltyError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("dataset: {0}")]
    Dataset(String),
}

/// Seed of run `i`, and the environment it plays.
pub fn run_seed(cfg: &HarnessConfig, i: usize) -> (u64, crate::sim::EnvConfig) {
    let seed = derive_seed(cfg.run.seed, i as u64);
    let env = if cfg.run.reseed_env {
        cfg.environment.with_seed(derive_seed(seed, 0))
    } else {
        cfg.environment.clone()
    };
    (seed, env)
}

/// Plays `cfg.run.runs` episodes with `backend`. Runs are independent and
/// seeded from the master seed, so `parallel` only changes wall time (and,
/// under a time budget, how much each step searches).
pub fn run_benchmark(
    cfg: &HarnessConfig,
    backend: &Backend,
    parallel: bool,
) -> Result<EnvScore, HarnessError> {
    cfg.validate()?;
    let planner = cfg.planner();
    let label = backend.kind().as_str();
    let one = |i: usize| -> Result<EpisodeRecord, HarnessError> {
        let (seed, env) = run_seed(cfg, i);
        Ok(run_episode(&env, backend.agent(), &planner, seed, label)?)
    };
    let runs: Vec<EpisodeRecord> = if parallel {
        (0..cfg.run.runs).into_par_iter().map(one).collect::<Result<_, _>>()?
    } else {
        (0..cfg.run.runs).map(one).collect::<Result<_, _>>()?
    };
    Ok(EnvScore::from_runs(cfg.environment.name(), label, runs))
}
