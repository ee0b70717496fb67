use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{Extracted, FeatureExtractor};
use crate::sim::{self, EnvConfig, Screen};

use super::rollout::{rollout_iw_plan, Start};
use super::tree::{SearchTree, ROOT};
use super::{plan_iw, PlanError, PlanOutcome, PlannerConfig};

/// Seed for stream `stream` of a master seed: splitmix64 applied to
/// `master + (stream + 1) * 0x9E3779B97F4A7C15`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Who picks actions during an episode.
#[derive(Clone, Copy)]
pub enum Agent<'a> {
    RolloutIw(&'a dyn FeatureExtractor),
    Iw(&'a dyn FeatureExtractor),
    /// Uniformly random actions, no search.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub env: String,
    pub backend: String,
    pub seed: u64,
    pub score: f64,
    pub actions: usize,
    /// Nodes generated at each decision point.
    pub expanded: Vec<usize>,
    /// Deepest tree node at each decision point.
    pub max_depth: Vec<u32>,
    pub wall_time_ms: f64,
}

impl EpisodeRecord {
    pub fn mean_expanded(&self) -> f64 {
        mean(self.expanded.iter().map(|&e| e as f64))
    }

    pub fn mean_depth(&self) -> f64 {
        mean(self.max_depth.iter().map(|&d| d as f64))
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

/// Observation made at each decision point, before the action is chosen.
pub struct DecisionPoint<'a> {
    pub index: usize,
    pub screen: &'a Screen,
    /// `None` for the random agent, which extracts nothing.
    pub features: Option<&'a Extracted>,
}

/// Plans and acts until the episode ends or `cfg.action_cap` actions ran.
pub fn run_episode(
    env: &EnvConfig,
    agent: Agent<'_>,
    cfg: &PlannerConfig,
    seed: u64,
    backend: &str,
) -> Result<EpisodeRecord, PlanError> {
    run_episode_observed(env, agent, cfg, seed, backend, &mut |_| {})
}

pub fn run_episode_observed(
    env: &EnvConfig,
    agent: Agent<'_>,
    cfg: &PlannerConfig,
    seed: u64,
    backend: &str,
    on_decision: &mut dyn FnMut(DecisionPoint<'_>),
) -> Result<EpisodeRecord, PlanError> {
    cfg.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let (mut state, mut screen) = sim::reset(env)?;
    let mut record = EpisodeRecord {
        env: env.name().to_string(),
        backend: backend.to_string(),
        seed,
        score: 0.0,
        actions: 0,
        expanded: Vec::new(),
        max_depth: Vec::new(),
        wall_time_ms: 0.0,
    };

    let extractor = match agent {
        Agent::RolloutIw(ex) | Agent::Iw(ex) => Some(ex),
        Agent::Random => None,
    };
    let mut root = match extractor {
        Some(ex) => Some(ex.extract(&screen, None)?),
        None => None,
    };
    let mut cached: Option<SearchTree> = None;

    while !state.is_terminal() && record.actions < cfg.action_cap {
        on_decision(DecisionPoint {
            index: record.actions,
            screen: &screen,
            features: root.as_ref(),
        });
        let (Some(ex), Some(root_features)) = (extractor, root.take()) else {
            let action = rng.random_range(0..state.action_count());
            let (next, step) = state.step(action, cfg.frame_skip)?;
            record.score += step.reward;
            record.actions += 1;
            state = next;
            screen = step.screen;
            continue;
        };

        let PlanOutcome { action, tree, stats } = match agent {
            Agent::RolloutIw(_) => {
                let start = match cached.take() {
                    Some(tree) => Start::Cached(tree),
                    None => Start::Fresh {
                        sim: state.clone(),
                        root: root_features.clone(),
                    },
                };
                rollout_iw_plan(start, ex, cfg, &mut rng)?
            }
            _ => plan_iw(&state, root_features.clone(), ex, cfg)?,
        };
        record.expanded.push(stats.expanded);
        record.max_depth.push(stats.max_depth);

        match tree.child(ROOT, action) {
            Some(child) => {
                let node = tree.node(child);
                record.score += node.reward_in;
                state = node.sim.clone();
                screen = state.screen();
                root = Some(Extracted {
                    features: node.features.clone(),
                    carry: node.carry.clone(),
                });
                if cfg.cache_subtree && matches!(agent, Agent::RolloutIw(_)) {
                    cached = Some(tree.advance(action)?);
                }
            }
            None => {
                let (next, step) = state.step(action, cfg.frame_skip)?;
                record.score += step.reward;
                root = Some(ex.extract(&step.screen, root_features.carry.as_ref())?);
                state = next;
                screen = step.screen;
            }
        }
        record.actions += 1;
    }
    record.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(record)
}
