use crate::error::{Error, Result};
use crate::linalg::gemm;

/// Grouped convolution with kernel size equal to stride and no padding.
///
/// Real channels are split into `groups` contiguous blocks; output block `g`
/// reads only input block `g`. Weights are stored as
/// `[group][dx][dy][out][in]`, so each `(group, dx, dy)` block is a row-major
/// `out_per_group x in_per_group` matrix. Biases are `[group][out]`, which is
/// also the flat output channel order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseConvLayer {
    pub groups: usize,
    pub in_per_group: usize,
    pub out_per_group: usize,
    pub kernel: (usize, usize),
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl SparseConvLayer {
    pub fn zeros(groups: usize, in_per_group: usize, out_per_group: usize, kernel: (usize, usize)) -> Self {
        SparseConvLayer {
            groups,
            in_per_group,
            out_per_group,
            kernel,
            weights: vec![0.0; groups * kernel.0 * kernel.1 * out_per_group * in_per_group],
            bias: vec![0.0; groups * out_per_group],
        }
    }

    pub fn in_channels(&self) -> usize {
        self.groups * self.in_per_group
    }

    pub fn out_channels(&self) -> usize {
        self.groups * self.out_per_group
    }

    /// Fan-in of one output unit.
    pub fn fan_in(&self) -> usize {
        self.in_per_group * self.kernel.0 * self.kernel.1
    }

    pub fn block_len(&self) -> usize {
        self.out_per_group * self.in_per_group
    }

    pub fn block_offset(&self, g: usize, dx: usize, dy: usize) -> usize {
        ((g * self.kernel.0 + dx) * self.kernel.1 + dy) * self.block_len()
    }

    pub fn block(&self, g: usize, dx: usize, dy: usize) -> &[f64] {
        let o = self.block_offset(g, dx, dy);
        &self.weights[o..o + self.block_len()]
    }

    pub fn block_mut(&mut self, g: usize, dx: usize, dy: usize) -> &mut [f64] {
        let o = self.block_offset(g, dx, dy);
        let n = self.block_len();
        &mut self.weights[o..o + n]
    }

    /// Index of weight `(out, in)` in block `(g, dx, dy)`.
    pub fn weight_index(&self, g: usize, dx: usize, dy: usize, o: usize, i: usize) -> usize {
        self.block_offset(g, dx, dy) + o * self.in_per_group + i
    }

    pub fn output_shape(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let (kh, kw) = self.kernel;
        if h % kh != 0 || w % kw != 0 || h == 0 || w == 0 {
            return Err(Error::invalid(format!(
                "spatial size {h}x{w} not divisible by kernel {kh}x{kw}"
            )));
        }
        Ok((h / kh, w / kw))
    }

    /// Pre-activation `y = b + W * x` for a position-major input
    /// (`x[(i * w + j) * in_channels + c]`); `y` receives the same layout.
    pub fn preactivation(&self, x: &[f64], h: usize, w: usize, y: &mut [f64]) {
        let (kh, kw) = self.kernel;
        let (ho, wo) = (h / kh, w / kw);
        let (cin, cout) = (self.in_channels(), self.out_channels());
        let (ci, co) = (self.in_per_group, self.out_per_group);
        debug_assert_eq!(x.len(), h * w * cin);
        debug_assert_eq!(y.len(), ho * wo * cout);
        for p in 0..ho * wo {
            y[p * cout..(p + 1) * cout].copy_from_slice(&self.bias);
        }
        for g in 0..self.groups {
            for dx in 0..kh {
                for dy in 0..kw {
                    let blk = self.block(g, dx, dy);
                    for io in 0..ho {
                        let xo = ((io * kh + dx) * w + dy) * cin + g * ci;
                        let yo = io * wo * cout + g * co;
                        gemm(co, ci, wo, blk, ci, 1, &x[xo..], 1, kw * cin, 1.0, &mut y[yo..], 1, cout);
                    }
                }
            }
        }
    }

    /// Gradients of the pre-activation map: accumulates `dW`, `db` into
    /// `grad` and writes `dx` into `gx` when given.
    pub fn backprop(
        &self,
        x: &[f64],
        h: usize,
        w: usize,
        gy: &[f64],
        grad: &mut LayerGrad,
        gx: Option<&mut [f64]>,
    ) {
        let (kh, kw) = self.kernel;
        let (ho, wo) = (h / kh, w / kw);
        let (cin, cout) = (self.in_channels(), self.out_channels());
        let (ci, co) = (self.in_per_group, self.out_per_group);
        for p in 0..ho * wo {
            for (b, g) in grad.bias.iter_mut().zip(&gy[p * cout..(p + 1) * cout]) {
                *b += g;
            }
        }
        for g in 0..self.groups {
            for dx in 0..kh {
                for dy in 0..kw {
                    let off = self.block_offset(g, dx, dy);
                    let n = self.block_len();
                    for io in 0..ho {
                        let xo = ((io * kh + dx) * w + dy) * cin + g * ci;
                        let yo = io * wo * cout + g * co;
                        // dW (co x ci) += gY (co x wo) * X^T (wo x ci)
                        gemm(
                            co,
                            wo,
                            ci,
                            &gy[yo..],
                            1,
                            cout,
                            &x[xo..],
                            kw * cin,
                            1,
                            1.0,
                            &mut grad.weights[off..off + n],
                            ci,
                            1,
                        );
                    }
                }
            }
        }
        if let Some(gx) = gx {
            gx.iter_mut().for_each(|v| *v = 0.0);
            for g in 0..self.groups {
                for dx in 0..kh {
                    for dy in 0..kw {
                        let blk = self.block(g, dx, dy);
                        for io in 0..ho {
                            let xo = ((io * kh + dx) * w + dy) * cin + g * ci;
                            let yo = io * wo * cout + g * co;
                            // dX (ci x wo) = W^T (ci x co) * gY (co x wo)
                            gemm(ci, co, wo, blk, 1, ci, &gy[yo..], 1, cout, 1.0, &mut gx[xo..], 1, kw * cin);
                        }
                    }
                }
            }
        }
    }
}

/// Gradient buffers shaped like one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerGrad {
    pub fn zeros_like(layer: &SparseConvLayer) -> Self {
        LayerGrad {
            weights: vec![0.0; layer.weights.len()],
            bias: vec![0.0; layer.bias.len()],
        }
    }

    pub fn clear(&mut self) {
        self.weights.iter_mut().for_each(|v| *v = 0.0);
        self.bias.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct six-loop grouped convolution.
    fn naive(layer: &SparseConvLayer, x: &[f64], h: usize, w: usize) -> Vec<f64> {
        let (kh, kw) = layer.kernel;
        let (ho, wo) = (h / kh, w / kw);
        let (cin, cout) = (layer.in_channels(), layer.out_channels());
        let mut y = vec![0.0; ho * wo * cout];
        for i in 0..ho {
            for j in 0..wo {
                for g in 0..layer.groups {
                    for o in 0..layer.out_per_group {
                        let mut s = layer.bias[g * layer.out_per_group + o];
                        for dx in 0..kh {
                            for dy in 0..kw {
                                for c in 0..layer.in_per_group {
                                    let xv = x[((i * kh + dx) * w + j * kw + dy) * cin + g * layer.in_per_group + c];
                                    s += layer.weights[layer.weight_index(g, dx, dy, o, c)] * xv;
                                }
                            }
                        }
                        y[(i * wo + j) * cout + g * layer.out_per_group + o] = s;
                    }
                }
            }
        }
        y
    }

    fn filled(groups: usize, ci: usize, co: usize, k: (usize, usize)) -> SparseConvLayer {
        let mut l = SparseConvLayer::zeros(groups, ci, co, k);
        for (n, v) in l.weights.iter_mut().enumerate() {
            *v = ((n * 37 % 101) as f64 - 50.0) / 50.0;
        }
        for (n, v) in l.bias.iter_mut().enumerate() {
            *v = (n as f64 - 3.0) * 0.1;
        }
        l
    }

    #[test]
    fn preactivation_matches_naive() {
        let layer = filled(3, 2, 5, (2, 3));
        let (h, w) = (4, 6);
        let x: Vec<f64> = (0..h * w * 6).map(|n| ((n * 13 % 17) as f64) / 17.0 - 0.4).collect();
        let mut y = vec![0.0; 2 * 2 * 15];
        layer.preactivation(&x, h, w, &mut y);
        let want = naive(&layer, &x, h, w);
        for (a, b) in y.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(layer.output_shape(5, 6).is_err());
    }

    #[test]
    fn backprop_matches_adjoint_identity() {
        // <gY, J dX> = <J^T gY, dX> and dW via the naive forward's linearity.
        let layer = filled(2, 3, 2, (2, 2));
        let (h, w) = (4, 2);
        let x: Vec<f64> = (0..h * w * 6).map(|n| ((n * 7 % 11) as f64) / 11.0).collect();
        let gy: Vec<f64> = (0..2 * 1 * 4).map(|n| n as f64 * 0.25 - 1.0).collect();
        let mut grad = LayerGrad::zeros_like(&layer);
        let mut gx = vec![0.0; x.len()];
        layer.backprop(&x, h, w, &gy, &mut grad, Some(&mut gx));
        let base = naive(&layer, &x, h, w);
        let dot = |y: &[f64]| y.iter().zip(&base).zip(&gy).map(|((a, b), g)| (a - b) * g).sum::<f64>();
        for n in 0..x.len() {
            let mut xp = x.clone();
            xp[n] += 1.0;
            assert!((dot(&naive(&layer, &xp, h, w)) - gx[n]).abs() < 1e-12);
        }
        for n in 0..layer.weights.len() {
            let mut lp = layer.clone();
            lp.weights[n] += 1.0;
            assert!((dot(&naive(&lp, &x, h, w)) - grad.weights[n]).abs() < 1e-12);
        }
        for n in 0..layer.bias.len() {
            let mut lp = layer.clone();
            lp.bias[n] += 1.0;
            assert!((dot(&naive(&lp, &x, h, w)) - grad.bias[n]).abs() < 1e-12);
        }
    }
}
