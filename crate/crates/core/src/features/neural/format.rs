//! Portable encoder weight container.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic      6 bytes  "VAEIW\0"
//! version    u16      FORMAT_VERSION
//! manifest   u32 length + UTF-8 JSON (see [`Manifest`])
//! tensors    for each manifest tensor, in order: u64 byte length + f32 data
//! checksum   u32      CRC32 (IEEE) of the tensor section
//! ```
//!
//! Convolution kernels are stored `(out, in, kh, kw)`. Batchnorm layers own
//! four tensors: `weight`, `bias`, `running_mean`, `running_var`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::NeuralError;

pub const MAGIC: &[u8; 6] = b"VAEIW\0";
pub const FORMAT_VERSION: u16 = 1;
pub const DEFAULT_BN_EPSILON: f32 = 1e-5;
pub const DEFAULT_LEAKY_SLOPE: f32 = 0.01;
pub const FEATURE_LAYOUT_HWC: &str = "hwc";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Head emits logits for independent Bernoulli latents.
    Bernoulli,
    /// Head emits `2C` channels: posterior means, then log-variances.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv {
        name: String,
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 2],
        stride: usize,
        padding: usize,
        #[serde(default = "yes")]
        bias: bool,
    },
    /// Decoder-only; rejected at inference.
    ConvTranspose {
        name: String,
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 2],
        stride: usize,
        padding: usize,
    },
    Batchnorm {
        name: String,
        channels: usize,
        #[serde(default = "default_eps")]
        epsilon: f32,
    },
    LeakyRelu {
        #[serde(default = "default_slope")]
        slope: f32,
    },
    Dropout {
        #[serde(default)]
        p: f32,
    },
    ResidualBegin,
    ResidualEnd,
    Sigmoid,
}

fn yes() -> bool {
    true
}

fn default_eps() -> f32 {
    DEFAULT_BN_EPSILON
}

fn default_slope() -> f32 {
    DEFAULT_LEAKY_SLOPE
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub input: InputSpec,
    pub layers: Vec<LayerSpec>,
    pub tensors: Vec<TensorSpec>,
    /// `(H, W, C)` of the latent map.
    pub latent_spec: [usize; 3],
    pub model_kind: ModelKind,
    #[serde(default = "hwc")]
    pub feature_layout: String,
    #[serde(default = "default_lambda")]
    pub lambda: f32,
}

fn hwc() -> String {
    FEATURE_LAYOUT_HWC.to_string()
}

fn default_lambda() -> f32 {
    0.9
}

/// Manifest plus tensor data, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFile {
    pub manifest: Manifest,
    pub tensors: Vec<Vec<f32>>,
}

impl WeightFile {
    pub fn tensor_map(&self) -> HashMap<&str, &[f32]> {
        self.manifest
            .tensors
            .iter()
            .zip(&self.tensors)
            .map(|(spec, data)| (spec.name.as_str(), data.as_slice()))
            .collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, NeuralError> {
        if self.manifest.tensors.len() != self.tensors.len() {
            return Err(NeuralError::Shape(format!(
                "manifest lists {} tensors but {} are attached",
                self.manifest.tensors.len(),
                self.tensors.len()
            )));
        }
        let json = serde_json::to_vec(&self.manifest)?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        let blob_start = out.len();
        for t in &self.tensors {
            out.extend_from_slice(&((t.len() * 4) as u64).to_le_bytes());
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out[blob_start..]);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NeuralError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(6)? != MAGIC {
            return Err(NeuralError::BadMagic);
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != FORMAT_VERSION {
            return Err(NeuralError::UnsupportedVersion(version));
        }
        let len = u32::from_le_bytes(r.array()?) as usize;
        let manifest: Manifest = serde_json::from_slice(r.take(len)?)?;
        let blob_start = r.pos;
        let mut tensors = Vec::with_capacity(manifest.tensors.len());
        for spec in &manifest.tensors {
            let n = u64::from_le_bytes(r.array()?) as usize;
            if n != spec.numel() * 4 {
                return Err(NeuralError::Shape(format!(
                    "tensor {} holds {n} bytes, shape {:?} needs {}",
                    spec.name,
                    spec.shape,
                    spec.numel() * 4
                )));
            }
            let data: Vec<f32> = r
                .take(n)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            if data.iter().any(|v| !v.is_finite()) {
                return Err(NeuralError::NonFinite(format!("tensor {}", spec.name)));
            }
            tensors.push(data);
        }
        let blob_end = r.pos;
        let stored = u32::from_le_bytes(r.array()?);
        let actual = crc32fast::hash(&bytes[blob_start..blob_end]);
        if stored != actual {
            return Err(NeuralError::Checksum { stored, actual });
        }
        if r.pos != bytes.len() {
            return Err(NeuralError::Truncated("trailing bytes after checksum".into()));
        }
        Ok(Self { manifest, tensors })
    }

    pub fn write(&self, path: &Path) -> Result<(), NeuralError> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, NeuralError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NeuralError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| {
            NeuralError::Truncated(format!("need {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], NeuralError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}
