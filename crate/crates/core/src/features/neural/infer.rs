//! Deterministic forward inference for exported encoders.

use std::path::Path;

use super::format::{LayerSpec, Manifest, ModelKind, WeightFile, FEATURE_LAYOUT_HWC};
use super::NeuralError;
use crate::features::Frame;

/// Channel-major activation volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Tensor3 {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }
}

/// Latent map in `(H, W, C)` row-major order, the feature id layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMap {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl LatentMap {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Takes channels `first..first + count` of a CHW tensor into HWC order.
    fn from_chw(t: &Tensor3, first: usize, count: usize) -> Self {
        let mut data = Vec::with_capacity(t.height * t.width * count);
        for y in 0..t.height {
            for x in 0..t.width {
                for c in first..first + count {
                    data.push(t.at(c, y, x));
                }
            }
        }
        Self {
            height: t.height,
            width: t.width,
            channels: count,
            data,
        }
    }
}

/// 2-D convolution over a CHW tensor, computed as an im2col product.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub padding: usize,
    /// `(out, in, kh, kw)` row-major.
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Conv2d {
    pub fn output_size(&self, height: usize, width: usize) -> Option<(usize, usize)> {
        let ph = height + 2 * self.padding;
        let pw = width + 2 * self.padding;
        if self.stride == 0 || ph < self.kernel_h || pw < self.kernel_w {
            return None;
        }
        Some((
            (ph - self.kernel_h) / self.stride + 1,
            (pw - self.kernel_w) / self.stride + 1,
        ))
    }

    pub fn forward(&self, input: &Tensor3) -> Tensor3 {
        assert_eq!(input.channels, self.in_channels);
        let (oh, ow) = self
            .output_size(input.height, input.width)
            .expect("validated at load");
        let k = self.in_channels * self.kernel_h * self.kernel_w;
        let n = oh * ow;
        let pad = self.padding as isize;

        let mut cols = vec![0.0f32; k * n];
        for ic in 0..self.in_channels {
            for ky in 0..self.kernel_h {
                for kx in 0..self.kernel_w {
                    let row = (ic * self.kernel_h + ky) * self.kernel_w + kx;
                    let dst = &mut cols[row * n..(row + 1) * n];
                    for oy in 0..oh {
                        let iy = (oy * self.stride + ky) as isize - pad;
                        if iy < 0 || iy >= input.height as isize {
                            continue;
                        }
                        let src_row = (ic * input.height + iy as usize) * input.width;
                        for ox in 0..ow {
                            let ix = (ox * self.stride + kx) as isize - pad;
                            if ix >= 0 && ix < input.width as isize {
                                dst[oy * ow + ox] = input.data[src_row + ix as usize];
                            }
                        }
                    }
                }
            }
        }

        let mut out = Tensor3::zeros(self.out_channels, oh, ow);
        for (oc, acc) in out.data.chunks_exact_mut(n).enumerate() {
            acc.fill(self.bias[oc]);
            let w = &self.weight[oc * k..(oc + 1) * k];
            for (kk, &wv) in w.iter().enumerate() {
                if wv == 0.0 {
                    continue;
                }
                let col = &cols[kk * n..(kk + 1) * n];
                for (a, &c) in acc.iter_mut().zip(col) {
                    *a += wv * c;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Layer {
    Conv(Conv2d),
    BatchNorm {
        gamma: Vec<f32>,
        beta: Vec<f32>,
        mean: Vec<f32>,
        inv_std: Vec<f32>,
    },
    LeakyRelu(f32),
    Dropout,
    ResidualBegin,
    ResidualEnd,
    Sigmoid,
}

/// Validated encoder, ready for inference.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderWeights {
    manifest: Manifest,
    layers: Vec<Layer>,
    output: (usize, usize, usize),
}

/// Reads and validates a weight file.
pub fn load_weights(path: &Path) -> Result<EncoderWeights, NeuralError> {
    EncoderWeights::from_file(WeightFile::read(path)?)
}

impl EncoderWeights {
    pub fn from_file(file: WeightFile) -> Result<Self, NeuralError> {
        let m = &file.manifest;
        if m.feature_layout != FEATURE_LAYOUT_HWC {
            return Err(NeuralError::Manifest(format!(
                "unsupported feature layout {:?}",
                m.feature_layout
            )));
        }
        if !(m.lambda > 0.0 && m.lambda < 1.0) {
            return Err(NeuralError::Manifest(format!("lambda {} not in (0, 1)", m.lambda)));
        }
        if m.input.channels == 0 || m.input.height == 0 || m.input.width == 0 {
            return Err(NeuralError::Shape(format!("empty input {:?}", m.input)));
        }

        if file.tensors.len() != m.tensors.len() {
            return Err(NeuralError::Shape(format!(
                "manifest lists {} tensors but {} are attached",
                m.tensors.len(),
                file.tensors.len()
            )));
        }
        let tensors = file.tensor_map();
        if tensors.len() != m.tensors.len() {
            return Err(NeuralError::Manifest("duplicate tensor names".into()));
        }
        let mut used = 0usize;
        let mut fetch = |name: String, shape: &[usize]| -> Result<Vec<f32>, NeuralError> {
            let spec = m
                .tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| NeuralError::Shape(format!("missing tensor {name}")))?;
            if spec.shape != shape {
                return Err(NeuralError::Shape(format!(
                    "tensor {name} has shape {:?}, layer needs {shape:?}",
                    spec.shape
                )));
            }
            let data = tensors[name.as_str()];
            if data.len() != spec.numel() {
                return Err(NeuralError::Shape(format!(
                    "tensor {name} holds {} values, shape {shape:?} needs {}",
                    data.len(),
                    spec.numel()
                )));
            }
            used += 1;
            Ok(data.to_vec())
        };

        let mut shape = (m.input.channels, m.input.height, m.input.width);
        let mut saved = Vec::new();
        let mut layers = Vec::with_capacity(m.layers.len());
        for (i, spec) in m.layers.iter().enumerate() {
            let layer = match spec {
                LayerSpec::Conv {
                    name,
                    in_channels,
                    out_channels,
                    kernel,
                    stride,
                    padding,
                    bias,
                } => {
                    if *in_channels != shape.0 {
                        return Err(NeuralError::Shape(format!(
                            "layer {i} ({name}) expects {in_channels} input channels, gets {}",
                            shape.0
                        )));
                    }
                    let weight = fetch(
                        format!("{name}.weight"),
                        &[*out_channels, *in_channels, kernel[0], kernel[1]],
                    )?;
                    let bias = if *bias {
                        fetch(format!("{name}.bias"), &[*out_channels])?
                    } else {
                        vec![0.0; *out_channels]
                    };
                    let conv = Conv2d {
                        in_channels: *in_channels,
                        out_channels: *out_channels,
                        kernel_h: kernel[0],
                        kernel_w: kernel[1],
                        stride: *stride,
                        padding: *padding,
                        weight,
                        bias,
                    };
                    let (h, w) = conv.output_size(shape.1, shape.2).ok_or_else(|| {
                        NeuralError::Shape(format!(
                            "layer {i} ({name}) cannot convolve a {}x{} input",
                            shape.1, shape.2
                        ))
                    })?;
                    shape = (*out_channels, h, w);
                    Layer::Conv(conv)
                }
                LayerSpec::ConvTranspose { name, .. } => {
                    return Err(NeuralError::Manifest(format!(
                        "layer {i} ({name}): transposed convolutions are decoder-only"
                    )));
                }
                LayerSpec::Batchnorm {
                    name,
                    channels,
                    epsilon,
                } => {
                    if *channels != shape.0 {
                        return Err(NeuralError::Shape(format!(
                            "layer {i} ({name}) normalizes {channels} channels, gets {}",
                            shape.0
                        )));
                    }
                    if !(*epsilon > 0.0) {
                        return Err(NeuralError::Manifest(format!("layer {i}: epsilon must be positive")));
                    }
                    let gamma = fetch(format!("{name}.weight"), &[*channels])?;
                    let beta = fetch(format!("{name}.bias"), &[*channels])?;
                    let mean = fetch(format!("{name}.running_mean"), &[*channels])?;
                    let var = fetch(format!("{name}.running_var"), &[*channels])?;
                    if var.iter().any(|&v| v < 0.0) {
                        return Err(NeuralError::Manifest(format!("{name}: negative running variance")));
                    }
                    let inv_std = var.iter().map(|&v| 1.0 / (v + epsilon).sqrt()).collect();
                    Layer::BatchNorm {
                        gamma,
                        beta,
                        mean,
                        inv_std,
                    }
                }
                LayerSpec::LeakyRelu { slope } => Layer::LeakyRelu(*slope),
                LayerSpec::Dropout { .. } => Layer::Dropout,
                LayerSpec::ResidualBegin => {
                    saved.push(shape);
                    Layer::ResidualBegin
                }
                LayerSpec::ResidualEnd => {
                    let start = saved.pop().ok_or_else(|| {
                        NeuralError::Manifest(format!("layer {i}: residual end without begin"))
                    })?;
                    if start != shape {
                        return Err(NeuralError::Shape(format!(
                            "layer {i}: residual branch maps {start:?} to {shape:?}"
                        )));
                    }
                    Layer::ResidualEnd
                }
                LayerSpec::Sigmoid => Layer::Sigmoid,
            };
            layers.push(layer);
        }
        if !saved.is_empty() {
            return Err(NeuralError::Manifest("unclosed residual block".into()));
        }
        if used != m.tensors.len() {
            return Err(NeuralError::Manifest(format!(
                "{} tensors are not referenced by any layer",
                m.tensors.len() - used
            )));
        }

        let [lh, lw, lc] = m.latent_spec;
        let head_channels = match m.model_kind {
            ModelKind::Bernoulli => lc,
            ModelKind::Gaussian => 2 * lc,
        };
        if shape != (head_channels, lh, lw) {
            return Err(NeuralError::Shape(format!(
                "network output (C,H,W) = {shape:?} does not match latent spec {:?} for {:?}",
                m.latent_spec, m.model_kind
            )));
        }
        Ok(Self {
            manifest: file.manifest,
            layers,
            output: shape,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn latent_spec(&self) -> [usize; 3] {
        self.manifest.latent_spec
    }

    pub fn model_kind(&self) -> ModelKind {
        self.manifest.model_kind
    }

    /// `(height, width)` of the expected input frame.
    pub fn input_size(&self) -> (usize, usize) {
        (self.manifest.input.height, self.manifest.input.width)
    }

    /// Raw network output, CHW.
    pub fn forward(&self, frame: &Frame) -> Result<Tensor3, NeuralError> {
        let input = &self.manifest.input;
        if input.channels != 1 || frame.height != input.height || frame.width != input.width {
            return Err(NeuralError::InputMismatch {
                got: (frame.height, frame.width),
                expected: (input.height, input.width),
            });
        }
        let mut x = Tensor3 {
            channels: 1,
            height: frame.height,
            width: frame.width,
            data: frame.data.clone(),
        };
        let mut stack: Vec<Tensor3> = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Conv(conv) => x = conv.forward(&x),
                Layer::BatchNorm {
                    gamma,
                    beta,
                    mean,
                    inv_std,
                } => {
                    let plane = x.height * x.width;
                    for (c, chunk) in x.data.chunks_exact_mut(plane).enumerate() {
                        for v in chunk {
                            *v = (*v - mean[c]) * inv_std[c] * gamma[c] + beta[c];
                        }
                    }
                }
                Layer::LeakyRelu(slope) => {
                    for v in &mut x.data {
                        if *v < 0.0 {
                            *v *= slope;
                        }
                    }
                }
                Layer::Dropout => {}
                Layer::ResidualBegin => stack.push(x.clone()),
                Layer::ResidualEnd => {
                    let skip = stack.pop().expect("validated nesting");
                    for (v, s) in x.data.iter_mut().zip(&skip.data) {
                        *v += s;
                    }
                }
                Layer::Sigmoid => {
                    for v in &mut x.data {
                        *v = 1.0 / (1.0 + (-*v).exp());
                    }
                }
            }
            if x.data.iter().any(|v| !v.is_finite()) {
                return Err(NeuralError::NonFinite(format!("activation after layer {i}")));
            }
        }
        debug_assert_eq!(x.shape(), self.output);
        Ok(x)
    }

    /// Per-latent probabilities, `(H, W, C)` order.
    pub fn encode_probs(&self, frame: &Frame) -> Result<LatentMap, NeuralError> {
        let out = self.forward(frame)?;
        Ok(LatentMap::from_chw(&out, 0, out.channels))
    }

    /// Posterior means of a Gaussian encoder, `(H, W, C)` order.
    pub fn encode_means(&self, frame: &Frame) -> Result<LatentMap, NeuralError> {
        if self.model_kind() != ModelKind::Gaussian {
            return Err(NeuralError::WrongModelKind(self.model_kind()));
        }
        let out = self.forward(frame)?;
        Ok(LatentMap::from_chw(&out, 0, out.channels / 2))
    }
}
