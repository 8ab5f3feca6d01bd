use crate::error::{Error, Result};
use crate::net::{Activations, ButterflyNet2D, LayerGrad};

/// Per-layer gradients shaped like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBuffers {
    pub layers: Vec<LayerGrad>,
}

impl GradientBuffers {
    pub fn zeros_like(net: &ButterflyNet2D) -> Self {
        GradientBuffers {
            layers: net.layers.iter().map(LayerGrad::zeros_like).collect(),
        }
    }

    pub fn clear(&mut self) {
        self.layers.iter_mut().for_each(LayerGrad::clear);
    }

    pub fn add(&mut self, other: &GradientBuffers) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|&v| v == 0.0))
    }
}

fn check_cache(net: &ButterflyNet2D, cache: &Activations) -> Result<()> {
    if cache.acts.len() != net.layers.len() + 1 {
        return Err(Error::InvalidState(format!(
            "cache holds {} activations, network needs {}",
            cache.acts.len(),
            net.layers.len() + 1
        )));
    }
    for (idx, layer) in net.layers.iter().enumerate() {
        let (h, w) = net.layer_input_size(idx);
        let (kh, kw) = layer.kernel;
        let want_in = h * w * layer.in_channels();
        let want_out = (h / kh) * (w / kw) * layer.out_channels();
        if cache.acts[idx].len() != want_in || cache.acts[idx + 1].len() != want_out {
            return Err(Error::InvalidState(format!("cached activations of layer {idx} do not match the network")));
        }
    }
    Ok(())
}

/// Accumulates into `grads` the gradient of `<upstream, output>`, where
/// `output` is the raw final activation recorded in `cache`. ReLU passes
/// gradient only where its output is strictly positive.
pub fn backward_into(
    net: &ButterflyNet2D,
    cache: &Activations,
    upstream: &[f64],
    grads: &mut GradientBuffers,
) -> Result<()> {
    run(net, cache, upstream, grads, false).map(|_| ())
}

/// Like [`backward_into`], also returning the gradient with respect to the
/// encoded (position-major) input.
pub fn backward_with_input(
    net: &ButterflyNet2D,
    cache: &Activations,
    upstream: &[f64],
    grads: &mut GradientBuffers,
) -> Result<Vec<f64>> {
    run(net, cache, upstream, grads, true)
}

fn run(
    net: &ButterflyNet2D,
    cache: &Activations,
    upstream: &[f64],
    grads: &mut GradientBuffers,
    want_input: bool,
) -> Result<Vec<f64>> {
    check_cache(net, cache)?;
    let n = net.layers.len();
    if upstream.len() != cache.acts[n].len() {
        return Err(Error::invalid(format!(
            "upstream gradient has {} entries, output has {}",
            upstream.len(),
            cache.acts[n].len()
        )));
    }
    let mut g = upstream.to_vec();
    for idx in (0..n).rev() {
        let layer = &net.layers[idx];
        for (gv, &a) in g.iter_mut().zip(&cache.acts[idx + 1]) {
            if a <= 0.0 {
                *gv = 0.0;
            }
        }
        let (h, w) = net.layer_input_size(idx);
        if idx > 0 || want_input {
            let mut gx = vec![0.0; cache.acts[idx].len()];
            layer.backprop(&cache.acts[idx], h, w, &g, &mut grads.layers[idx], Some(&mut gx));
            g = gx;
        } else {
            layer.backprop(&cache.acts[idx], h, w, &g, &mut grads.layers[idx], None);
            g = Vec::new();
        }
    }
    Ok(g)
}

pub fn backward(net: &ButterflyNet2D, cache: &Activations, upstream: &[f64]) -> Result<GradientBuffers> {
    let mut grads = GradientBuffers::zeros_like(net);
    backward_into(net, cache, upstream, &mut grads)?;
    Ok(grads)
}
