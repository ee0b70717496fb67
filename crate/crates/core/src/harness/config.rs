use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::planner::PlannerConfig;
use crate::sim::{EnvConfig, FrameSkip, GridCollectConfig};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Bprost,
    Neural,
    NeuralQuant,
    Random,
    /// One feature per (pixel, color); useful on tiny screens.
    Raw,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bprost => "bprost",
            Self::Neural => "neural",
            Self::NeuralQuant => "neural-quant",
            Self::Random => "random",
            Self::Raw => "raw",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s {
            "bprost" | "b-prost" => Ok(Self::Bprost),
            "neural" => Ok(Self::Neural),
            "neural-quant" | "neural_quant" => Ok(Self::NeuralQuant),
            "random" => Ok(Self::Random),
            "raw" => Ok(Self::Raw),
            other => Err(HarnessError::Config(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSection {
    pub kind: BackendKind,
    pub weights: Option<PathBuf>,
}

impl Default for BackendSection {
    fn default() -> Self {
        Self {
            kind: BackendKind::Bprost,
            weights: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorSection {
    /// Probability threshold for Bernoulli latents.
    pub lambda: f32,
    /// Bits per latent for quantized Gaussian latents.
    pub quant_bits: u32,
    /// B-PROST tile `[width, height]` in pixels; defaults to the environment's cell.
    pub tile: Option<[usize; 2]>,
}

impl Default for ExtractorSection {
    fn default() -> Self {
        Self {
            lambda: 0.9,
            quant_bits: 4,
            tile: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub runs: usize,
    pub seed: u64,
    /// Give every run its own environment seed (layout / dynamics).
    pub reseed_env: bool,
    /// Desk environments advance one cell per frame, so they default to 1.
    pub frame_skip: FrameSkip,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            runs: 10,
            seed: 0,
            reseed_env: true,
            frame_skip: FrameSkip::new(1).expect("positive"),
        }
    }
}

/// Declarative configuration shared by every CLI phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub environment: EnvConfig,
    pub backend: BackendSection,
    pub planner: PlannerConfig,
    pub extractor: ExtractorSection,
    pub run: RunSection,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            environment: EnvConfig::GridCollect(GridCollectConfig::default()),
            backend: BackendSection::default(),
            planner: PlannerConfig::default(),
            extractor: ExtractorSection::default(),
            run: RunSection::default(),
        }
    }
}

impl HarnessConfig {
    /// Planner settings with the run's frame skip applied.
    pub fn planner(&self) -> PlannerConfig {
        PlannerConfig {
            frame_skip: self.run.frame_skip,
            ..self.planner.clone()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.environment.validate()?;
        self.planner().validate()?;
        if self.run.runs == 0 {
            return Err(HarnessError::Config("runs must be positive".into()));
        }
        if !(self.extractor.lambda > 0.0 && self.extractor.lambda < 1.0) {
            return Err(HarnessError::Config(format!(
                "lambda {} not in (0, 1)",
                self.extractor.lambda
            )));
        }
        Ok(())
    }
}
