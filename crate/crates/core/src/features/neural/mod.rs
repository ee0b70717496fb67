//! Learned boolean features from an exported convolutional encoder.

pub mod arch;
pub mod format;
mod infer;

use std::sync::Arc;

use thiserror::Error;

use crate::features::{preprocess, Extracted, FeatureError, FeatureExtractor};
use crate::novelty::{FeatureBackend, FeatureId, FeatureSet, FeatureSpace};
use crate::sim::Screen;

pub use format::{InputSpec, LayerSpec, Manifest, ModelKind, TensorSpec, WeightFile};
pub use infer::{load_weights, Conv2d, EncoderWeights, LatentMap, Tensor3};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a weight file (bad magic)")]
    BadMagic,
    #[error("unsupported weight format version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated weight file: {0}")]
    Truncated(String),
    #[error("checksum mismatch: stored {stored:#010x}, computed {actual:#010x}")]
    Checksum { stored: u32, actual: u32 },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("input frame is {got:?}, encoder expects {expected:?}")]
    InputMismatch {
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("operation not available for {0:?} encoders")]
    WrongModelKind(ModelKind),
    #[error("threshold {0} must lie strictly inside (0, 1)")]
    BadThreshold(f32),
    #[error("quantization supports 1..=16 bits, got {0}")]
    BadBits(u32),
}

/// Feature id `i` (row-major over H, W, C) is set iff `probs[i] >= lambda`.
pub fn threshold_features(probs: &LatentMap, lambda: f32) -> FeatureSet {
    let ids = probs
        .data
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= lambda)
        .map(|(i, _)| i as FeatureId)
        .collect();
    FeatureSet::from_sorted(ids).expect("enumeration order is increasing")
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Equiprobable bin under N(0, 1): `min(2^bits - 1, floor(cdf(mean) * 2^bits))`.
pub fn quantize_bin(mean: f64, bits: u32) -> u32 {
    let bins = 1u32 << bits;
    ((std_normal_cdf(mean) * bins as f64).floor() as u32).min(bins - 1)
}

/// Each latent mean becomes `bits` features holding its bin index, most
/// significant bit first: latent `i` owns ids `i*bits .. (i+1)*bits`.
pub fn quantize_features(means: &LatentMap, bits: u32) -> Result<FeatureSet, NeuralError> {
    if bits == 0 || bits > 16 {
        return Err(NeuralError::BadBits(bits));
    }
    let mut ids = Vec::new();
    for (i, &m) in means.data.iter().enumerate() {
        if !m.is_finite() {
            return Err(NeuralError::NonFinite(format!("posterior mean {i}")));
        }
        let bin = quantize_bin(m as f64, bits);
        for b in 0..bits {
            if bin >> (bits - 1 - b) & 1 == 1 {
                ids.push(i as FeatureId * bits + b);
            }
        }
    }
    Ok(FeatureSet::from_sorted(ids).expect("ids emitted in increasing order"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeuralMode {
    /// Bernoulli encoders: keep latents with probability at least `lambda`.
    Threshold { lambda: f32 },
    /// Gaussian encoders: bit-code each quantized posterior mean.
    Quantize { bits: u32 },
}

/// Screen -> preprocessed frame -> encoder -> boolean features.
#[derive(Debug, Clone)]
pub struct NeuralExtractor {
    weights: Arc<EncoderWeights>,
    mode: NeuralMode,
    space: FeatureSpace,
}

impl NeuralExtractor {
    pub fn new(weights: Arc<EncoderWeights>, mode: NeuralMode) -> Result<Self, NeuralError> {
        let [h, w, c] = weights.latent_spec();
        let latents = (h * w * c) as u32;
        let size = match (mode, weights.model_kind()) {
            (NeuralMode::Threshold { lambda }, ModelKind::Bernoulli) => {
                if !(lambda > 0.0 && lambda < 1.0) {
                    return Err(NeuralError::BadThreshold(lambda));
                }
                latents
            }
            (NeuralMode::Quantize { bits }, ModelKind::Gaussian) => {
                if bits == 0 || bits > 16 {
                    return Err(NeuralError::BadBits(bits));
                }
                latents * bits
            }
            (_, kind) => return Err(NeuralError::WrongModelKind(kind)),
        };
        let space = FeatureSpace::new(size, FeatureBackend::Neural)
            .map_err(|_| NeuralError::Shape("empty latent map".into()))?;
        Ok(Self {
            weights,
            mode,
            space,
        })
    }

    pub fn weights(&self) -> &EncoderWeights {
        &self.weights
    }

    pub fn features_for(&self, frame: &crate::features::Frame) -> Result<FeatureSet, NeuralError> {
        match self.mode {
            NeuralMode::Threshold { lambda } => {
                Ok(threshold_features(&self.weights.encode_probs(frame)?, lambda))
            }
            NeuralMode::Quantize { bits } => {
                quantize_features(&self.weights.encode_means(frame)?, bits)
            }
        }
    }
}

impl FeatureExtractor for NeuralExtractor {
    fn space(&self) -> FeatureSpace {
        self.space
    }

    fn extract(&self, screen: &Screen, _carry: Option<&FeatureSet>) -> Result<Extracted, FeatureError> {
        let (h, w) = self.weights.input_size();
        let frame = preprocess(screen, h, w);
        Ok(Extracted {
            features: self.features_for(&frame)?,
            carry: None,
        })
    }
}
