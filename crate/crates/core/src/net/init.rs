use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::morton;
use super::{ButterflyNet2D, SparseConvLayer};
use crate::encoding::weight_matrix;
use crate::error::{Error, Result};
use crate::kernel_math::{cheb_points, DomainBox, DomainIndex, Side};
use crate::reference::Direction;

/// Writes the 4x4 real expansion of `a` at complex position `(o, i)` of
/// block `(g, dx, dy)`.
fn put(layer: &mut SparseConvLayer, g: usize, dx: usize, dy: usize, o: usize, i: usize, a: Complex64) {
    let m = weight_matrix(a);
    for (p, row) in m.iter().enumerate() {
        for (q, &v) in row.iter().enumerate() {
            let idx = layer.weight_index(g, dx, dy, 4 * o + p, 4 * i + q);
            layer.weights[idx] = v;
        }
    }
}

impl ButterflyNet2D {
    /// Sets every weight from the butterfly transfer kernels of the configured
    /// direction and zeroes every bias. The resulting network computes the
    /// butterfly approximation exactly. Layer scales are then balanced (see
    /// [`ButterflyNet2D::balance`]), which leaves the function unchanged but
    /// keeps the inverse normalization from collapsing into one layer.
    pub fn init_fourier(&mut self) -> Result<()> {
        let c = self.config;
        let grid = cheb_points(c.r)?;
        let r = c.r;
        let l = c.layers;
        let sign = c.direction.sign();
        let (nx, ny) = c.input_size();
        let (mx_total, my_total) = c.output_size();
        let extent = c.phase_extent();
        let kappa = (extent.0 / mx_total as f64, extent.1 / my_total as f64);
        let kernel = |xi: (f64, f64), d: (f64, f64)| {
            Complex64::from_polar(1.0, sign * 2.0 * PI * (xi.0 * d.0 + xi.1 * d.1))
        };
        // Samples sit at the centers of their cells, so the time square
        // starts half a sample before zero.
        let origin = (-0.5 / nx as f64, -0.5 / ny as f64);
        let time_box = |d: &DomainIndex| d.to_box((1.0, 1.0)).translated(origin);
        for layer in &mut self.layers {
            layer.weights.iter_mut().for_each(|w| *w = 0.0);
            layer.bias.iter_mut().for_each(|b| *b = 0.0);
        }

        // Layer 0: uniform samples of a finest time box to its Chebyshev nodes.
        let b_fine = time_box(&DomainIndex::new(Side::B, l - 1, 0, 0)?);
        for ax in 0..2 {
            for ay in 0..2 {
                let xi0 = DomainIndex::a_at_layer(0, ax, ay)?.to_box(extent).center();
                let a = morton(ax, ay, 1);
                for kx in 0..r {
                    for ky in 0..r {
                        let t = b_fine.cheb_point(&grid, kx, ky);
                        let o = (a * r + kx) * r + ky;
                        for sx in 0..c.omega.0 {
                            for sy in 0..c.omega.1 {
                                let u = (sx as f64 / nx as f64, sy as f64 / ny as f64);
                                let f = b_fine.to_frame(u);
                                let w = kernel(xi0, (u.0 - t.0, u.1 - t.1)) * grid.lagrange2d(kx, ky, f.0, f.1);
                                put(&mut self.layers[0], 0, sx, sy, o, 0, w);
                            }
                        }
                    }
                }
            }
        }

        // Recursion layers: Chebyshev nodes of the four children of a time
        // box to the nodes of the box itself, one group per parent frequency box.
        for ell in 1..l {
            let parent_b = DomainIndex::new(Side::B, l - ell - 1, 0, 0)?;
            let pbox = time_box(&parent_b);
            let children: Vec<DomainBox> = parent_b.children().iter().map(time_box).collect();
            let na = 1usize << ell;
            let layer = &mut self.layers[ell as usize];
            for px in 0..na {
                for py in 0..na {
                    let g = morton(px, py, ell);
                    for cx in 0..2 {
                        for cy in 0..2 {
                            let xi0 = DomainIndex::a_at_layer(ell, 2 * px + cx, 2 * py + cy)?.to_box(extent).center();
                            let child_a = 2 * cx + cy;
                            for (d, cbox) in children.iter().enumerate() {
                                let (dx, dy) = (d / 2, d % 2);
                                for sx in 0..r {
                                    for sy in 0..r {
                                        let u = cbox.cheb_point(&grid, sx, sy);
                                        let f = pbox.to_frame(u);
                                        for kx in 0..r {
                                            for ky in 0..r {
                                                let t = pbox.cheb_point(&grid, kx, ky);
                                                let w = kernel(xi0, (u.0 - t.0, u.1 - t.1))
                                                    * grid.lagrange2d(kx, ky, f.0, f.1);
                                                let o = (child_a * r + kx) * r + ky;
                                                put(layer, g, dx, dy, o, sx * r + sy, w);
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }

        // Kernel application on the whole time square.
        let root = time_box(&DomainIndex::new(Side::B, 0, 0, 0)?);
        let scale = match c.direction {
            Direction::Forward => 1.0,
            Direction::Inverse => 1.0 / (nx * ny) as f64,
        };
        let nfine = 1usize << l;
        let (mx, my) = c.m;
        let layer = &mut self.layers[l as usize];
        for ax in 0..nfine {
            for ay in 0..nfine {
                let g = morton(ax, ay, l);
                for qx in 0..mx {
                    for qy in 0..my {
                        let xi = (kappa.0 * (ax * mx + qx) as f64, kappa.1 * (ay * my + qy) as f64);
                        for sx in 0..r {
                            for sy in 0..r {
                                let t = root.cheb_point(&grid, sx, sy);
                                put(layer, g, 0, 0, qx * my + qy, sx * r + sy, kernel(xi, t) * scale);
                            }
                        }
                    }
                }
            }
        }
        self.balance();
        Ok(())
    }

    /// Random weights by `scheme`, zero biases. Deterministic in `seed`.
    pub fn init_random(&mut self, scheme: RandomInit, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut self.layers {
            layer.bias.iter_mut().for_each(|b| *b = 0.0);
            let fan_in = layer.fan_in() as f64;
            match scheme {
                RandomInit::KaimingUniform => {
                    let bound = (6.0 / fan_in).sqrt();
                    for w in &mut layer.weights {
                        *w = rng.gen_range(-bound..bound);
                    }
                }
                RandomInit::KaimingNormal => {
                    let std = (2.0 / fan_in).sqrt();
                    for w in &mut layer.weights {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        *w = std * z;
                    }
                }
                RandomInit::Orthogonal => orthogonal_layer(layer, &mut rng),
            }
        }
    }
}

/// Each group's `out x (kh kw in)` matrix gets orthonormal rows (or columns
/// when it is tall), from Gram-Schmidt on a Gaussian matrix.
fn orthogonal_layer(layer: &mut SparseConvLayer, rng: &mut ChaCha8Rng) {
    let (kh, kw) = layer.kernel;
    let (co, ci) = (layer.out_per_group, layer.in_per_group);
    let cols = ci * kh * kw;
    let (n_vec, dim) = if co <= cols { (co, cols) } else { (cols, co) };
    for g in 0..layer.groups {
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(n_vec);
        while q.len() < n_vec {
            let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut *rng)).collect();
            for _ in 0..2 {
                for u in &q {
                    let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
                }
            }
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 1e-8 {
                v.iter_mut().for_each(|a| *a /= n);
                q.push(v);
            }
        }
        for o in 0..co {
            for dx in 0..kh {
                for dy in 0..kw {
                    for i in 0..ci {
                        let col = (dx * kw + dy) * ci + i;
                        let v = if co <= cols { q[o][col] } else { q[col][o] };
                        let idx = layer.weight_index(g, dx, dy, o, i);
                        layer.weights[idx] = v;
                    }
                }
            }
        }
    }
}

/// Random initialization schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RandomInit {
    KaimingUniform,
    KaimingNormal,
    Orthogonal,
}

impl RandomInit {
    pub fn name(self) -> &'static str {
        match self {
            RandomInit::KaimingUniform => "kaiming_uniform",
            RandomInit::KaimingNormal => "kaiming_normal",
            RandomInit::Orthogonal => "orthogonal",
        }
    }
}

impl FromStr for RandomInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "kaiming_uniform" | "uniform" => Ok(RandomInit::KaimingUniform),
            "kaiming_normal" | "normal" => Ok(RandomInit::KaimingNormal),
            "orthogonal" => Ok(RandomInit::Orthogonal),
            other => Err(Error::invalid(format!("unknown init scheme '{other}'"))),
        }
    }
}

/// Any initialization the network supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Init {
    Fourier,
    Random(RandomInit),
}

impl Init {
    pub const ALL: [Init; 4] = [
        Init::Fourier,
        Init::Random(RandomInit::KaimingUniform),
        Init::Random(RandomInit::KaimingNormal),
        Init::Random(RandomInit::Orthogonal),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Init::Fourier => "fourier",
            Init::Random(r) => r.name(),
        }
    }
}

impl std::fmt::Display for Init {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("fourier") {
            Ok(Init::Fourier)
        } else {
            s.parse().map(Init::Random)
        }
    }
}

impl ButterflyNet2D {
    /// Applies `init`; `seed` is ignored by the Fourier initialization.
    pub fn initialize(&mut self, init: Init, seed: u64) -> Result<()> {
        match init {
            Init::Fourier => self.init_fourier(),
            Init::Random(r) => {
                self.init_random(r, seed);
                Ok(())
            }
        }
    }
}
