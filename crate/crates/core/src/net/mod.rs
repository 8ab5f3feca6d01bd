//! The sparse-channel convolutional network that mirrors the 2D butterfly.
//!
//! Layer 0 maps each `omega`-patch of the input to `4 r^2` complex channels
//! (four depth-1 frequency boxes times `r^2` Chebyshev nodes). Recursion layer
//! `l` halves the spatial size with a 2x2 stride and splits every frequency
//! box into four, using `4^l` channel groups. The last layer is a 1x1
//! convolution producing `m_x m_y` output frequencies per finest box. Every
//! complex weight is stored as its 4x4 real matrix and every layer ends in
//! a ReLU.

mod config;
mod init;
mod io;
mod layer;
mod materialize;
mod params;

pub use config::{demorton, morton, ChannelIndex, InputKind, NetConfig};
pub use init::{Init, RandomInit};
pub use layer::{LayerGrad, SparseConvLayer};
pub use materialize::materialize_matrix;
pub use params::{param_count, LayerCount, ParamReport};

use num_complex::Complex64;

use crate::encoding::{decode, encode, relu_in_place, EncodedTensor, Encoded4};
use crate::error::{Error, Result};
use crate::reference::Signal2D;

#[derive(Debug, Clone, PartialEq)]
pub struct ButterflyNet2D {
    pub config: NetConfig,
    pub layers: Vec<SparseConvLayer>,
}

/// Post-activations of every layer for one input, position-major; entry 0
/// is the encoded input itself.
#[derive(Debug, Clone)]
pub struct Activations {
    pub acts: Vec<Vec<f64>>,
}

impl ButterflyNet2D {
    /// All-zero network with the layer shapes of `config`.
    pub fn build(config: NetConfig) -> Result<Self> {
        config.validate()?;
        let layers = params::layer_shapes(&config)
            .into_iter()
            .map(|(g, ci, co, k)| SparseConvLayer::zeros(g, ci, co, k))
            .collect();
        Ok(ButterflyNet2D { config, layers })
    }

    /// Input spatial size of layer `idx`.
    pub fn layer_input_size(&self, idx: usize) -> (usize, usize) {
        if idx == 0 {
            return self.config.input_size();
        }
        let s = 1usize << (self.config.layers as usize - idx);
        (s, s)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &EncodedTensor) -> Result<()> {
        let (h, w) = self.config.input_size();
        if (x.channels, x.height, x.width) != (1, h, w) {
            return Err(Error::invalid(format!(
                "network expects a 1-channel {h}x{w} input, got {} channels of {}x{}",
                x.channels, x.height, x.width
            )));
        }
        Ok(())
    }

    /// Forward pass keeping every post-activation.
    pub fn forward_cached(&self, x: &EncodedTensor) -> Result<Activations> {
        self.check_input(x)?;
        Ok(self.forward_pm(x.to_position_major()))
    }

    pub(crate) fn forward_pm(&self, input: Vec<f64>) -> Activations {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input);
        for (idx, layer) in self.layers.iter().enumerate() {
            let (h, w) = self.layer_input_size(idx);
            let (ho, wo) = (h / layer.kernel.0, w / layer.kernel.1);
            let mut y = vec![0.0; ho * wo * layer.out_channels()];
            layer.preactivation(acts.last().unwrap(), h, w, &mut y);
            relu_in_place(&mut y);
            acts.push(y);
        }
        Activations { acts }
    }

    /// Raw network output: `m_x m_y 4^L` complex channels at a single position.
    pub fn forward_raw(&self, x: &EncodedTensor) -> Result<EncodedTensor> {
        let out = self.forward_cached(x)?.acts.pop().unwrap();
        EncodedTensor::from_data(out.len() / 4, 1, 1, out)
    }

    /// Network output arranged on the output frequency grid.
    pub fn forward(&self, x: &EncodedTensor) -> Result<EncodedTensor> {
        unreshape_output(&self.config, &self.forward_raw(x)?)
    }

    /// Multiplies the network's output by `s > 0`, spreading the factor evenly
    /// over the layers (exact because every layer is positively homogeneous
    /// once its bias is scaled along).
    pub fn rescale(&mut self, s: f64) -> Result<()> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!("scale must be positive, got {s}")));
        }
        let per = s.powf(1.0 / self.layers.len() as f64);
        let mut acc = 1.0;
        for layer in &mut self.layers {
            acc *= per;
            layer.weights.iter_mut().for_each(|w| *w *= per);
            layer.bias.iter_mut().for_each(|b| *b *= acc);
        }
        Ok(())
    }

    /// Rescales every layer to the same weight RMS while keeping the product
    /// of the layer scales, so the computed function is unchanged.
    pub fn balance(&mut self) {
        let rms: Vec<f64> = self
            .layers
            .iter()
            .map(|l| (l.weights.iter().map(|w| w * w).sum::<f64>() / l.weights.len().max(1) as f64).sqrt())
            .collect();
        if rms.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return;
        }
        let log_mean = rms.iter().map(|v| v.ln()).sum::<f64>() / rms.len() as f64;
        let mut acc = 1.0;
        for (layer, v) in self.layers.iter_mut().zip(rms) {
            let c = (log_mean - v.ln()).exp();
            acc *= c;
            layer.weights.iter_mut().for_each(|w| *w *= c);
            layer.bias.iter_mut().for_each(|b| *b *= acc);
        }
    }

    /// Encodes a complex grid, runs the network and decodes the output grid.
    pub fn apply(&self, x: &Signal2D) -> Result<Signal2D> {
        let t = EncodedTensor::from_complex(x.nx, x.ny, &x.values)?;
        let y = self.forward(&t)?;
        Signal2D::new(y.height, y.width, y.decode_channel(0))
    }
}

/// Output frequency of complex output channel `c`.
fn output_position(config: &NetConfig, c: usize) -> (usize, usize) {
    let (mx, my) = config.m;
    let (ax, ay) = demorton(c / (mx * my), config.layers);
    let q = c % (mx * my);
    (ax * mx + q / my, ay * my + q % my)
}

/// Row-major index on the output grid of complex output channel `c`.
pub(crate) fn output_grid_index(config: &NetConfig, c: usize) -> usize {
    let (i, j) = output_position(config, c);
    i * config.output_size().1 + j
}

/// Maps the 1x1 output channels onto the `(m_x 2^L) x (m_y 2^L)` grid: the
/// channel of finest box `a` and local index `q` lands on `a * m + q`.
pub fn unreshape_output(config: &NetConfig, t: &EncodedTensor) -> Result<EncodedTensor> {
    let n = config.complex_channels(config.layers);
    if (t.channels, t.height, t.width) != (n, 1, 1) {
        return Err(Error::invalid(format!(
            "expected {n} channels at 1x1, got {} at {}x{}",
            t.channels, t.height, t.width
        )));
    }
    let (h, w) = config.output_size();
    let mut out = EncodedTensor::zeros(1, h, w);
    for c in 0..n {
        let (i, j) = output_position(config, c);
        out.set(0, i, j, t.get(c, 0, 0));
    }
    Ok(out)
}

/// Inverse of [`unreshape_output`].
pub fn reshape_output(config: &NetConfig, grid: &EncodedTensor) -> Result<EncodedTensor> {
    let (h, w) = config.output_size();
    if (grid.channels, grid.height, grid.width) != (1, h, w) {
        return Err(Error::invalid(format!("expected a 1-channel {h}x{w} grid")));
    }
    let n = config.complex_channels(config.layers);
    let mut out = EncodedTensor::zeros(n, 1, 1);
    for c in 0..n {
        let (i, j) = output_position(config, c);
        out.set(c, 0, 0, grid.get(0, i, j));
    }
    Ok(out)
}

/// Gradient of the raw output (position-major at 1x1, i.e. flat channels)
/// from a gradient on the decoded output grid.
pub(crate) fn raw_output_grad(config: &NetConfig, grad: &[Complex64]) -> Vec<f64> {
    let n = config.complex_channels(config.layers);
    let (_, w) = config.output_size();
    let mut g = vec![0.0; 4 * n];
    for c in 0..n {
        let (i, j) = output_position(config, c);
        let z = grad[i * w + j];
        g[4 * c..4 * c + 4].copy_from_slice(&[z.re, z.im, -z.re, -z.im]);
    }
    g
}

/// Decoded output grid from the raw output activations.
pub(crate) fn decode_raw(config: &NetConfig, raw: &[f64]) -> Vec<Complex64> {
    let n = config.complex_channels(config.layers);
    let (h, w) = config.output_size();
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    for c in 0..n {
        let (i, j) = output_position(config, c);
        out[i * w + j] = decode(Encoded4([raw[4 * c], raw[4 * c + 1], raw[4 * c + 2], raw[4 * c + 3]]));
    }
    out
}

/// Position-major encoded input from a complex grid.
pub(crate) fn encode_input(x: &[Complex64]) -> Vec<f64> {
    x.iter().flat_map(|&z| encode(z).0).collect()
}
