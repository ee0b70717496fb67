//! Width-based planners: breadth-first IW(k) and anytime RolloutIW(1).

mod episode;
mod iw;
mod rollout;
mod tree;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureError;
use crate::novelty::NoveltyError;
use crate::sim::{ActionId, FrameSkip, SimError};

pub use episode::{derive_seed, run_episode, run_episode_observed, Agent, DecisionPoint, EpisodeRecord};
pub use iw::plan_iw;
pub use rollout::{rollout_iw_plan, Start};
pub use tree::{risk_adjusted, NodeId, SearchNode, SearchTree, ROOT};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("cannot plan from a terminal state")]
    TerminalRoot,
    #[error("root has no child for action {0}")]
    MissingChild(ActionId),
    #[error("invalid planner config: {0}")]
    InvalidConfig(String),
    #[error("extractor space {extractor} does not match tree features")]
    SpaceMismatch { extractor: u32 },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Novelty(#[from] NoveltyError),
}

/// Per-step search budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Maximum number of simulator steps (generated nodes). Zero replays the
    /// existing tree without expanding anything.
    Nodes(usize),
    /// Wall-clock limit, checked between simulator steps.
    Millis(u64),
}

impl Budget {
    pub(crate) fn start(self) -> BudgetClock {
        BudgetClock {
            budget: self,
            started: Instant::now(),
        }
    }
}

pub(crate) struct BudgetClock {
    budget: Budget,
    started: Instant,
}

impl BudgetClock {
    pub(crate) fn allows(&self, generated: usize) -> bool {
        match self.budget {
            Budget::Nodes(n) => generated < n,
            Budget::Millis(ms) => self.started.elapsed() < Duration::from_millis(ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Novelty width `k`. RolloutIW supports 1; IW accepts up to the tuple cap.
    pub width: usize,
    pub budget: Budget,
    pub gamma: f64,
    /// Multiplier on negative rewards during backup; 1 disables risk aversion.
    pub alpha: f64,
    pub action_cap: usize,
    pub cache_subtree: bool,
    /// Set by the caller per environment rather than read from config files.
    #[serde(skip)]
    pub frame_skip: FrameSkip,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            width: 1,
            budget: Budget::Millis(500),
            gamma: 0.99,
            alpha: 50_000.0,
            action_cap: 15_000,
            cache_subtree: true,
            frame_skip: FrameSkip::default(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(PlanError::InvalidConfig(format!("gamma {} not in (0, 1]", self.gamma)));
        }
        if !(self.alpha >= 1.0) {
            return Err(PlanError::InvalidConfig(format!("alpha {} below 1", self.alpha)));
        }
        if self.width == 0 {
            return Err(PlanError::InvalidConfig("width must be at least 1".into()));
        }
        if self.budget == Budget::Millis(0) {
            return Err(PlanError::InvalidConfig("time budget must be positive".into()));
        }
        if self.action_cap == 0 {
            return Err(PlanError::InvalidConfig("action cap must be positive".into()));
        }
        Ok(())
    }
}

/// Search effort of one planning step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    /// Simulator steps taken (new nodes generated).
    pub expanded: usize,
    /// New nodes that passed the novelty test.
    pub novel: usize,
    pub rollouts: usize,
    pub max_depth: u32,
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub action: ActionId,
    pub tree: SearchTree,
    pub stats: StepStats,
}
