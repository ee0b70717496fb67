use std::path::Path;
use std::sync::Arc;

use crate::features::neural::{load_weights, EncoderWeights, NeuralMode};
use crate::features::{BprostConfig, BprostExtractor, FeatureExtractor, NeuralExtractor, RawPixels};
use crate::planner::Agent;
use crate::sim::EnvConfig;

use super::config::{BackendKind, ExtractorSection};
use super::HarnessError;

/// A ready-to-plan backend for one environment.
pub struct Backend {
    kind: BackendKind,
    extractor: Option<Box<dyn FeatureExtractor>>,
}

impl Backend {
    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn extractor(&self) -> Option<&dyn FeatureExtractor> {
        self.extractor.as_deref()
    }

    /// RolloutIW over the backend's features, or random play.
    pub fn agent(&self) -> Agent<'_> {
        match self.extractor() {
            Some(ex) => Agent::RolloutIw(ex),
            None => Agent::Random,
        }
    }

    pub fn random() -> Self {
        Self {
            kind: BackendKind::Random,
            extractor: None,
        }
    }

    pub fn from_extractor(kind: BackendKind, extractor: Box<dyn FeatureExtractor>) -> Self {
        Self {
            kind,
            extractor: Some(extractor),
        }
    }
}

/// B-PROST tiling for an environment's screens.
pub fn bprost_config(env: &EnvConfig, settings: &ExtractorSection) -> Result<BprostConfig, HarnessError> {
    let (w, h) = env.screen_size();
    let [tw, th] = settings.tile.unwrap_or([env.cell_size(); 2]);
    Ok(BprostConfig::for_screen(w, h, tw, th, env.palette_size() as usize)?)
}

/// Builds the feature backend. Neural kinds need `weights` (already loaded)
/// or a `weights_path`.
pub fn build_backend(
    kind: BackendKind,
    env: &EnvConfig,
    settings: &ExtractorSection,
    weights: Option<Arc<EncoderWeights>>,
    weights_path: Option<&Path>,
) -> Result<Backend, HarnessError> {
    let extractor: Box<dyn FeatureExtractor> = match kind {
        BackendKind::Random => return Ok(Backend::random()),
        BackendKind::Raw => {
            let (w, h) = env.screen_size();
            Box::new(RawPixels::new(w, h, env.palette_size()))
        }
        BackendKind::Bprost => Box::new(BprostExtractor::new(bprost_config(env, settings)?)?),
        BackendKind::Neural | BackendKind::NeuralQuant => {
            let weights = match (weights, weights_path) {
                (Some(w), _) => w,
                (None, Some(p)) => Arc::new(load_weights(p)?),
                (None, None) => {
                    return Err(HarnessError::Config(format!("backend {kind} needs --weights")))
                }
            };
            let mode = if kind == BackendKind::Neural {
                NeuralMode::Threshold {
                    lambda: settings.lambda,
                }
            } else {
                NeuralMode::Quantize {
                    bits: settings.quant_bits,
                }
            };
            Box::new(NeuralExtractor::new(weights, mode)?)
        }
    };
    Ok(Backend::from_extractor(kind, extractor))
}
