//! Complex values as four nonnegative reals.
//!
//! A complex `x` is stored as `[(Re x)+, (Im x)+, (Re x)-, (Im x)-]` and a
//! complex product `a * x` becomes a 4x4 real matrix followed by ReLU. The
//! pre-activation of that product is `[Re y, Im y, -Re y, -Im y]`, so sums of
//! products stay exact under ReLU as long as the sum happens before it.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Four-real encoding of one complex value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Encoded4(pub [f64; 4]);

impl Encoded4 {
    /// At most one entry of each `+/-` pair is nonzero and all are `>= 0`.
    pub fn is_canonical(&self) -> bool {
        let v = &self.0;
        v.iter().all(|&c| c >= 0.0) && v[0] * v[2] == 0.0 && v[1] * v[3] == 0.0
    }
}

pub fn encode(z: Complex64) -> Encoded4 {
    Encoded4([
        z.re.max(0.0),
        z.im.max(0.0),
        (-z.re).max(0.0),
        (-z.im).max(0.0),
    ])
}

/// `(v0 - v2) + i (v1 - v3)`; also defined for non-canonical inputs.
pub fn decode(e: Encoded4) -> Complex64 {
    let v = e.0;
    Complex64::new(v[0] - v[2], v[1] - v[3])
}

/// Real 4x4 matrix realising multiplication by `a` on encoded values.
pub fn weight_matrix(a: Complex64) -> [[f64; 4]; 4] {
    let (re, im) = (a.re, a.im);
    [
        [re, -im, -re, im],
        [im, re, -im, -re],
        [-re, im, re, -im],
        [-im, -re, im, re],
    ]
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub fn relu_in_place(xs: &mut [f64]) {
    for x in xs {
        *x = x.max(0.0);
    }
}

/// `relu(M v)` for a 4x4 matrix and an encoded vector.
pub fn apply4(m: &[[f64; 4]; 4], v: Encoded4) -> Encoded4 {
    let mut out = [0.0; 4];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(&v.0).map(|(a, b)| a * b).sum::<f64>();
    }
    Encoded4(out.map(relu))
}

/// Real activation tensor of shape `(4 * channels, height, width)`, where
/// complex channel `c` occupies real channels `4c..4c+4`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedTensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl EncodedTensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        EncodedTensor {
            channels,
            height,
            width,
            data: vec![0.0; 4 * channels * height * width],
        }
    }

    pub fn from_data(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != 4 * channels * height * width {
            return Err(Error::invalid(format!(
                "tensor data has {} reals, expected 4*{channels}*{height}*{width}",
                data.len()
            )));
        }
        Ok(EncodedTensor {
            channels,
            height,
            width,
            data,
        })
    }

    /// Encodes a single-channel complex field given row-major (`i * width + j`).
    pub fn from_complex(height: usize, width: usize, values: &[Complex64]) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::invalid(format!(
                "expected {} values for a {height}x{width} field, got {}",
                height * width,
                values.len()
            )));
        }
        let mut t = Self::zeros(1, height, width);
        for (p, &z) in values.iter().enumerate() {
            t.set(0, p / width, p % width, encode(z));
        }
        Ok(t)
    }

    /// Real field encoded as `[(x)+, 0, (x)-, 0]`.
    pub fn from_real(height: usize, width: usize, values: &[f64]) -> Result<Self> {
        let z: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_complex(height, width, &z)
    }

    fn plane(&self) -> usize {
        self.height * self.width
    }

    pub fn real(&self, rc: usize, i: usize, j: usize) -> f64 {
        self.data[rc * self.plane() + i * self.width + j]
    }

    pub fn get(&self, c: usize, i: usize, j: usize) -> Encoded4 {
        let mut v = [0.0; 4];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = self.real(4 * c + k, i, j);
        }
        Encoded4(v)
    }

    pub fn set(&mut self, c: usize, i: usize, j: usize, e: Encoded4) {
        let plane = self.plane();
        for k in 0..4 {
            self.data[(4 * c + k) * plane + i * self.width + j] = e.0[k];
        }
    }

    /// Decodes channel `c` into a row-major complex field.
    pub fn decode_channel(&self, c: usize) -> Vec<Complex64> {
        (0..self.plane())
            .map(|p| decode(self.get(c, p / self.width, p % self.width)))
            .collect()
    }

    /// Position-major copy: `out[(i * width + j) * 4C + rc]`.
    pub(crate) fn to_position_major(&self) -> Vec<f64> {
        let rc = 4 * self.channels;
        let plane = self.plane();
        let mut out = vec![0.0; self.data.len()];
        for c in 0..rc {
            for p in 0..plane {
                out[p * rc + c] = self.data[c * plane + p];
            }
        }
        out
    }

    pub fn from_position_major(
        channels: usize,
        height: usize,
        width: usize,
        pm: &[f64],
    ) -> Self {
        let rc = 4 * channels;
        let plane = height * width;
        let mut data = vec![0.0; pm.len()];
        for p in 0..plane {
            for c in 0..rc {
                data[c * plane + p] = pm[p * rc + c];
            }
        }
        EncodedTensor {
            channels,
            height,
            width,
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode(c(3.0, -2.0)).0, [3.0, 0.0, 0.0, 2.0]);
        assert_eq!(encode(c(0.0, 0.0)).0, [0.0; 4]);
        assert_eq!(encode(c(-1.0, 1.0)).0, [0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode(Encoded4([3.0, 0.0, 0.0, 2.0])), c(3.0, -2.0));
        assert_eq!(decode(Encoded4([1.0; 4])), c(0.0, 0.0));
    }

    #[test]
    fn weight_matrix_examples() {
        let id = weight_matrix(c(1.0, 0.0));
        for z in [c(1.5, -0.25), c(-3.0, 2.0), c(0.0, 0.0)] {
            assert_eq!(apply4(&id, encode(z)), encode(z));
        }
        let rot = weight_matrix(c(0.0, 1.0));
        assert_eq!(apply4(&rot, encode(c(1.0, 0.0))).0, [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn weight_matrix_sign_pattern() {
        let (re, im) = (0.7, -1.3);
        let m = weight_matrix(c(re, im));
        let pattern = [
            [(1.0, 0.0), (0.0, -1.0), (-1.0, 0.0), (0.0, 1.0)],
            [(0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0)],
            [(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0), (0.0, -1.0)],
            [(0.0, -1.0), (-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)],
        ];
        for i in 0..4 {
            for j in 0..4 {
                let (pr, pi) = pattern[i][j];
                assert_eq!(m[i][j], pr * re + pi * im);
            }
        }
    }

    #[test]
    fn relu_examples() {
        let mut v = vec![-1.0, 2.0];
        relu_in_place(&mut v);
        assert_eq!(v, vec![0.0, 2.0]);
        let mut w = vec![0.0, 3.0, 1e-300];
        relu_in_place(&mut w);
        assert_eq!(w, vec![0.0, 3.0, 1e-300]);
        for x in [-2.0, -0.0, 0.5] {
            assert_eq!(relu(relu(x)), relu(x));
        }
    }

    proptest! {
        #[test]
        fn encode_is_canonical_and_invertible(re in -1e6f64..1e6, im in -1e6f64..1e6) {
            let e = encode(c(re, im));
            prop_assert!(e.is_canonical());
            prop_assert_eq!(decode(e), c(re, im));
        }

        #[test]
        fn product_through_relu(ar in -10f64..10.0, ai in -10f64..10.0, xr in -10f64..10.0, xi in -10f64..10.0) {
            let (a, x) = (c(ar, ai), c(xr, xi));
            let y = decode(apply4(&weight_matrix(a), encode(x)));
            prop_assert!((y - a * x).norm() <= 1e-14 * (1.0 + (a * x).norm()));
        }

        #[test]
        fn multiply_accumulate_is_exact(pairs in proptest::collection::vec(
            ((-5f64..5.0, -5f64..5.0), (-5f64..5.0, -5f64..5.0)), 1..=64)) {
            let mut pre = [0.0; 4];
            let mut want = c(0.0, 0.0);
            for &((ar, ai), (xr, xi)) in &pairs {
                let m = weight_matrix(c(ar, ai));
                let e = encode(c(xr, xi));
                for (o, row) in pre.iter_mut().zip(&m) {
                    *o += row.iter().zip(&e.0).map(|(p, q)| p * q).sum::<f64>();
                }
                want += c(ar, ai) * c(xr, xi);
            }
            prop_assert_eq!(pre[0], -pre[2]);
            prop_assert_eq!(pre[1], -pre[3]);
            let got = decode(Encoded4(pre.map(relu)));
            let scale: f64 = pairs.iter().map(|&((ar, ai), (xr, xi))| c(ar, ai).norm() * c(xr, xi).norm()).sum();
            prop_assert!((got - want).norm() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn tensor_layout_roundtrip() {
        let vals: Vec<Complex64> = (0..6).map(|k| c(k as f64 - 2.5, 1.0 - k as f64)).collect();
        let t = EncodedTensor::from_complex(2, 3, &vals).unwrap();
        assert_eq!(t.decode_channel(0), vals);
        assert_eq!(t.get(0, 1, 2), encode(vals[5]));
        let pm = t.to_position_major();
        assert_eq!(&pm[20..24], &encode(vals[5]).0);
        assert_eq!(EncodedTensor::from_position_major(1, 2, 3, &pm), t);
        assert!(EncodedTensor::from_complex(2, 2, &vals).is_err());
    }
}
