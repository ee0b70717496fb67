//! Width-based planning (IW, RolloutIW) over pixel screens, with B-PROST and
//! learned VAE latent features, plus the small simulators and harness used
//! to benchmark them.

pub mod features;
pub mod harness;
pub mod novelty;
pub mod planner;
pub mod sim;

pub use features::{Extracted, FeatureError, FeatureExtractor};
pub use novelty::{Depth, FeatureBackend, FeatureId, FeatureSet, FeatureSpace, NoveltyTable, TupleNovelty};
pub use planner::{Budget, PlanError, PlannerConfig};
pub use sim::{ActionId, EnvConfig, FrameSkip, Screen, SimError, SimState};
