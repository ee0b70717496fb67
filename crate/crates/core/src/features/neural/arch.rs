//! Encoder manifests for the reference architectures, plus small
//! hand-built fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::format::{
    InputSpec, LayerSpec, Manifest, ModelKind, TensorSpec, WeightFile, DEFAULT_BN_EPSILON,
    DEFAULT_LEAKY_SLOPE, FEATURE_LAYOUT_HWC,
};

/// Accumulates layers and their tensor specs in file order.
#[derive(Debug, Default)]
pub struct ManifestBuilder {
    layers: Vec<LayerSpec>,
    tensors: Vec<TensorSpec>,
    channels: usize,
}

impl ManifestBuilder {
    pub fn new(input_channels: usize) -> Self {
        Self {
            channels: input_channels,
            ..Default::default()
        }
    }

    pub fn conv(mut self, name: &str, out: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        let in_c = self.channels;
        self.tensors.push(TensorSpec {
            name: format!("{name}.weight"),
            shape: vec![out, in_c, kernel, kernel],
        });
        self.tensors.push(TensorSpec {
            name: format!("{name}.bias"),
            shape: vec![out],
        });
        self.layers.push(LayerSpec::Conv {
            name: name.to_string(),
            in_channels: in_c,
            out_channels: out,
            kernel: [kernel, kernel],
            stride,
            padding,
            bias: true,
        });
        self.channels = out;
        self
    }

    pub fn batchnorm(mut self, name: &str) -> Self {
        let c = self.channels;
        for t in ["weight", "bias", "running_mean", "running_var"] {
            self.tensors.push(TensorSpec {
                name: format!("{name}.{t}"),
                shape: vec![c],
            });
        }
        self.layers.push(LayerSpec::Batchnorm {
            name: name.to_string(),
            channels: c,
            epsilon: DEFAULT_BN_EPSILON,
        });
        self
    }

    pub fn leaky_relu(mut self) -> Self {
        self.layers.push(LayerSpec::LeakyRelu {
            slope: DEFAULT_LEAKY_SLOPE,
        });
        self
    }

    pub fn dropout(mut self, p: f32) -> Self {
        self.layers.push(LayerSpec::Dropout { p });
        self
    }

    /// BN, LeakyReLU, 3x3 conv, dropout (twice), add the block input, LeakyReLU.
    pub fn residual_block(mut self, name: &str) -> Self {
        let c = self.channels;
        self.layers.push(LayerSpec::ResidualBegin);
        self = self
            .batchnorm(&format!("{name}.bn1"))
            .leaky_relu()
            .conv(&format!("{name}.conv1"), c, 3, 1, 1)
            .dropout(0.2)
            .batchnorm(&format!("{name}.bn2"))
            .leaky_relu()
            .conv(&format!("{name}.conv2"), c, 3, 1, 1)
            .dropout(0.2);
        self.layers.push(LayerSpec::ResidualEnd);
        self.leaky_relu()
    }

    pub fn sigmoid(mut self) -> Self {
        self.layers.push(LayerSpec::Sigmoid);
        self
    }

    pub fn finish(self, input: usize, latent_spec: [usize; 3], model_kind: ModelKind) -> Manifest {
        Manifest {
            input: InputSpec {
                height: input,
                width: input,
                channels: 1,
            },
            layers: self.layers,
            tensors: self.tensors,
            latent_spec,
            model_kind,
            feature_layout: FEATURE_LAYOUT_HWC.to_string(),
            lambda: 0.9,
        }
    }
}

fn head(b: ManifestBuilder, kind: ModelKind) -> ManifestBuilder {
    match kind {
        ModelKind::Bernoulli => b.sigmoid(),
        ModelKind::Gaussian => b,
    }
}

fn head_channels(latent_channels: usize, kind: ModelKind) -> usize {
    match kind {
        ModelKind::Bernoulli => latent_channels,
        ModelKind::Gaussian => 2 * latent_channels,
    }
}

/// 128x128 input to a 15x15 latent grid.
pub fn encoder15(latent_channels: usize, kind: ModelKind) -> Manifest {
    let b = ManifestBuilder::new(1)
        .conv("enc.conv0", 64, 4, 2, 0)
        .residual_block("enc.res0")
        .conv("enc.conv1", 64, 4, 2, 0)
        .residual_block("enc.res1")
        .conv("enc.head", head_channels(latent_channels, kind), 3, 2, 1);
    head(b, kind).finish(128, [15, 15, latent_channels], kind)
}

/// 128x128 input to a 4x4 latent grid.
pub fn encoder4(latent_channels: usize, kind: ModelKind) -> Manifest {
    let mut b = ManifestBuilder::new(1);
    for i in 0..4 {
        b = b
            .conv(&format!("enc.conv{i}"), 64, 3, 2, 0)
            .residual_block(&format!("enc.res{i}"));
    }
    let b = b.conv("enc.head", head_channels(latent_channels, kind), 3, 2, 1);
    head(b, kind).finish(128, [4, 4, latent_channels], kind)
}

/// 32x32 input to an 8x8 latent grid: two stride-2 convolutions with
/// residual blocks, then a 3x3 head.
pub fn desk_encoder(latent_channels: usize, kind: ModelKind) -> Manifest {
    let b = ManifestBuilder::new(1)
        .conv("enc.conv0", 32, 4, 2, 1)
        .residual_block("enc.res0")
        .conv("enc.conv1", 32, 4, 2, 1)
        .residual_block("enc.res1")
        .conv("enc.head", head_channels(latent_channels, kind), 3, 1, 1);
    head(b, kind).finish(32, [8, 8, latent_channels], kind)
}

/// Random weights for a manifest: conv tensors uniform in
/// `+-1/sqrt(fan_in)`, batchnorm at identity statistics.
pub fn seeded_weights(manifest: Manifest, seed: u64) -> WeightFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tensors = manifest
        .tensors
        .iter()
        .map(|t| {
            let n = t.numel();
            if t.name.ends_with("running_var") || (t.shape.len() == 1 && is_bn_gamma(&t.name)) {
                vec![1.0; n]
            } else if t.name.ends_with("running_mean") || is_bn_beta(&t.name) {
                vec![0.0; n]
            } else {
                let fan_in = if t.shape.len() == 4 {
                    t.shape[1..].iter().product::<usize>()
                } else {
                    n
                };
                let bound = 1.0 / (fan_in as f32).sqrt();
                (0..n).map(|_| rng.random_range(-bound..bound)).collect()
            }
        })
        .collect();
    WeightFile { manifest, tensors }
}

fn is_bn_gamma(name: &str) -> bool {
    name.contains(".bn") && name.ends_with(".weight")
}

fn is_bn_beta(name: &str) -> bool {
    name.contains(".bn") && name.ends_with(".bias")
}

/// One 1x1 convolution with unit weight: output equals input.
pub fn identity_fixture(height: usize, width: usize) -> WeightFile {
    let mut manifest = ManifestBuilder::new(1)
        .conv("id", 1, 1, 1, 0)
        .finish(height, [height, 1, 1], ModelKind::Bernoulli);
    manifest.input.width = width;
    manifest.latent_spec = [height, width, 1];
    WeightFile {
        manifest,
        tensors: vec![vec![1.0], vec![0.0]],
    }
}

/// Per-cell object detectors for GridCollect-style screens (grayscale levels
/// 0 background, 0.5 agent, 1.0 gem). A `cell`-strided box filter measures
/// each cell's mean intensity; three sigmoid channels fire for "occupied"
/// (mean > 0.25), "gem" (mean > 0.75) and "empty" (mean < 0.25).
pub fn cell_detector_fixture(board: usize, cell: usize) -> WeightFile {
    const SHARPNESS: f32 = 40.0;
    let manifest = ManifestBuilder::new(1)
        .conv("detect", 3, cell, cell, 0)
        .sigmoid()
        .finish(board * cell, [board, board, 3], ModelKind::Bernoulli);
    let area = (cell * cell) as f32;
    let gains = [SHARPNESS, SHARPNESS, -SHARPNESS];
    let mut weight = Vec::with_capacity(3 * cell * cell);
    for g in gains {
        weight.extend(std::iter::repeat_n(g / area, cell * cell));
    }
    let bias = vec![-0.25 * SHARPNESS, -0.75 * SHARPNESS, 0.25 * SHARPNESS];
    WeightFile {
        manifest,
        tensors: vec![weight, bias],
    }
}
