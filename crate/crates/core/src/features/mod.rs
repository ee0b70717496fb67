//! Feature backends turning screens into boolean [`FeatureSet`]s.

pub mod bprost;
pub mod neural;

use thiserror::Error;

use crate::novelty::{FeatureBackend, FeatureId, FeatureSet, FeatureSpace};
use crate::sim::Screen;

pub use bprost::{BprostConfig, BprostError};
pub use neural::{NeuralError, NeuralExtractor};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Bprost(#[from] BprostError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("screen {got:?} does not match extractor geometry {expected:?}")]
    Geometry {
        got: (usize, usize, u8),
        expected: (usize, usize, u8),
    },
}

/// Output of one extraction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Extracted {
    pub features: FeatureSet,
    /// State threaded to the next decision point along the same path (the
    /// basic set, for backends with temporal features).
    pub carry: Option<FeatureSet>,
}

pub trait FeatureExtractor: Send + Sync {
    fn space(&self) -> FeatureSpace;

    /// `carry` is the value returned for the parent decision point, if any.
    fn extract(&self, screen: &Screen, carry: Option<&FeatureSet>) -> Result<Extracted, FeatureError>;
}

/// One feature per (pixel, color): id = `(y * width + x) * palette + color`.
#[derive(Debug, Clone, Copy)]
pub struct RawPixels {
    width: usize,
    height: usize,
    palette: u8,
}

impl RawPixels {
    pub fn new(width: usize, height: usize, palette: u8) -> Self {
        Self {
            width,
            height,
            palette,
        }
    }

    pub fn id(&self, x: usize, y: usize, color: u8) -> FeatureId {
        ((y * self.width + x) * self.palette as usize + color as usize) as FeatureId
    }
}

impl FeatureExtractor for RawPixels {
    fn space(&self) -> FeatureSpace {
        FeatureSpace::new(
            (self.width * self.height * self.palette as usize) as u32,
            FeatureBackend::Raw,
        )
        .expect("non-empty screen")
    }

    fn extract(&self, screen: &Screen, _carry: Option<&FeatureSet>) -> Result<Extracted, FeatureError> {
        if screen.width() != self.width
            || screen.height() != self.height
            || screen.palette_size() > self.palette
        {
            return Err(FeatureError::Geometry {
                got: (screen.width(), screen.height(), screen.palette_size()),
                expected: (self.width, self.height, self.palette),
            });
        }
        let p = self.palette as FeatureId;
        let ids = screen
            .pixels()
            .iter()
            .enumerate()
            .map(|(i, &c)| i as FeatureId * p + c as FeatureId)
            .collect();
        Ok(Extracted {
            features: FeatureSet::from_sorted(ids).expect("pixel order is increasing"),
            carry: None,
        })
    }
}

/// B-PROST as a planner backend; carries the basic set between decision points.
#[derive(Debug, Clone, Copy)]
pub struct BprostExtractor {
    cfg: BprostConfig,
}

impl BprostExtractor {
    pub fn new(cfg: BprostConfig) -> Result<Self, BprostError> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &BprostConfig {
        &self.cfg
    }
}

impl FeatureExtractor for BprostExtractor {
    fn space(&self) -> FeatureSpace {
        self.cfg.space()
    }

    fn extract(&self, screen: &Screen, carry: Option<&FeatureSet>) -> Result<Extracted, FeatureError> {
        let (features, basic) = bprost::extract_bprost(screen, carry, &self.cfg)?;
        Ok(Extracted {
            features,
            carry: Some(basic),
        })
    }
}

/// Grayscale image at a fixed resolution, values in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

/// Grayscale conversion followed by box-filter resampling to
/// `height`x`width`. Each output pixel averages the source pixels whose
/// index range `[i*H/h, (i+1)*H/h)` it covers; when upsampling that range is
/// empty and the nearest source pixel is used.
pub fn preprocess(screen: &Screen, height: usize, width: usize) -> Frame {
    let gray = screen.grayscale();
    let (sh, sw) = (screen.height(), screen.width());
    if (sh, sw) == (height, width) {
        return Frame {
            height,
            width,
            data: gray,
        };
    }
    let span = |i: usize, src: usize, dst: usize| {
        let lo = i * src / dst;
        let hi = ((i + 1) * src / dst).max(lo + 1).min(src);
        lo..hi
    };
    let mut data = Vec::with_capacity(height * width);
    for oy in 0..height {
        let ys = span(oy, sh, height);
        for ox in 0..width {
            let xs = span(ox, sw, width);
            let mut acc = 0.0f32;
            for y in ys.clone() {
                for x in xs.clone() {
                    acc += gray[y * sw + x];
                }
            }
            data.push(acc / (ys.len() * xs.len()) as f32);
        }
    }
    Frame {
        height,
        width,
        data,
    }
}
