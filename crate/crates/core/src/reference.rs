//! Native complex-arithmetic ground truth: the O(N^2) 2D DFT and its
//! inverse, and the three-stage 2D butterfly approximation.
//!
//! Conventions. Input samples of an `nx x ny` grid sit at
//! `t = (i / nx, j / ny)` and the forward transform produces integer
//! frequencies `xi in [0, Mx) x [0, My)` with kernel `exp(-2 pi i xi . t)`,
//! unnormalized. The inverse transform reads a frequency grid and returns
//! `x(t) = 1/(nx ny) sum_xi exp(+2 pi i xi . t) u(xi)` on its output grid.
//!
//! The butterfly runs both directions on the same geometry: input sample `i`
//! sits at `i / n`, the center of its cell `[(i - 1/2)/n, (i + 1/2)/n)`, so
//! the time square is `B = [-1/(2n), 1 - 1/(2n))^2` and every box of its
//! quadtree holds whole cells. Outputs are the points `kappa * tau` of
//! `A = [0, K)^2`, where `tau` is the integer output index. For the forward direction `kappa = 1`
//! and `K = M`; for the inverse direction the input index plays the role of
//! a frequency, so `kappa = n / M` and `K = n`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_math::{cheb_points, ChebGrid};

/// Which transform a butterfly or network approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    /// Sign of the kernel exponent.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        }
    }
}

/// Complex values on a 2D grid, row-major (`values[i * ny + j]`).
///
/// Used both for time-grid signals and for frequency grids.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal2D {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<Complex64>,
}

pub type GridSignal = Signal2D;
pub type FreqSignal = Signal2D;

impl Signal2D {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Signal2D {
            nx,
            ny,
            values: vec![Complex64::new(0.0, 0.0); nx * ny],
        }
    }

    pub fn new(nx: usize, ny: usize, values: Vec<Complex64>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid("signal dimensions must be positive"));
        }
        if values.len() != nx * ny {
            return Err(Error::invalid(format!(
                "signal of size {nx}x{ny} needs {} values, got {}",
                nx * ny,
                values.len()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("signal values must be finite"));
        }
        Ok(Signal2D { nx, ny, values })
    }

    pub fn from_real(nx: usize, ny: usize, values: &[f64]) -> Result<Self> {
        Self::new(nx, ny, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.ny + j]
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `||self - other|| / ||other||`.
    pub fn rel_l2(&self, other: &Signal2D) -> f64 {
        let diff: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        diff / other.norm()
    }

    pub fn scaled(&self, s: Complex64) -> Signal2D {
        Signal2D {
            nx: self.nx,
            ny: self.ny,
            values: self.values.iter().map(|&z| z * s).collect(),
        }
    }
}

/// `exp(sign * 2 pi i * (a * b mod n) / n)` for every `a in [rows]`, `b in [n]`.
fn twiddles(rows: usize, n: usize, sign: f64) -> Vec<Complex64> {
    let mut t = Vec::with_capacity(rows * n);
    for a in 0..rows {
        for b in 0..n {
            let k = (a * b) % n;
            t.push(Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64));
        }
    }
    t
}

fn direct_sum(x: &Signal2D, out: (usize, usize), sign: f64, scale: f64, by_input: bool) -> Signal2D {
    // Exponent is `xi . t` with t measured on the grid whose size is the
    // denominator: the input grid for the forward sum, the output grid for
    // the inverse sum.
    let (mx, my) = out;
    let (ex, ey) = if by_input {
        (twiddles(mx, x.nx, sign), twiddles(my, x.ny, sign))
    } else {
        (twiddles(x.nx, mx, sign), twiddles(x.ny, my, sign))
    };
    let mut values = Vec::with_capacity(mx * my);
    for a in 0..mx {
        for b in 0..my {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..x.nx {
                let wx = if by_input { ex[a * x.nx + i] } else { ex[i * mx + a] };
                let mut row = Complex64::new(0.0, 0.0);
                for j in 0..x.ny {
                    let wy = if by_input { ey[b * x.ny + j] } else { ey[j * my + b] };
                    row += wy * x.values[i * x.ny + j];
                }
                acc += wx * row;
            }
            values.push(acc * scale);
        }
    }
    Signal2D {
        nx: mx,
        ny: my,
        values,
    }
}

/// Exact forward DFT by direct double summation:
/// `u(xi) = sum_t exp(-2 pi i xi . t) x(t)`, `xi in [0, kx_max) x [0, ky_max)`.
pub fn dft2d_exact(x: &Signal2D, out: (usize, usize)) -> Signal2D {
    direct_sum(x, out, -1.0, 1.0, true)
}

/// Exact inverse DFT onto an `out.0 x out.1` time grid:
/// `x(t) = 1/(kx_max ky_max) sum_xi exp(+2 pi i xi . t) u(xi)`.
pub fn idft2d_exact(u: &Signal2D, out: (usize, usize)) -> Signal2D {
    let scale = 1.0 / (u.nx * u.ny) as f64;
    direct_sum(u, out, 1.0, scale, false)
}

/// Applies the exact transform of the given direction.
pub fn exact_transform(x: &Signal2D, out: (usize, usize), direction: Direction) -> Signal2D {
    match direction {
        Direction::Forward => dft2d_exact(x, out),
        Direction::Inverse => idft2d_exact(x, out),
    }
}

/// Butterfly expansion coefficients at one layer.
///
/// Indexed by (frequency box at depth `level + 1`, time box at depth
/// `L - level - 1`, Chebyshev index `(kx, ky)`), with boxes flattened
/// row-major. The last layer `level = L - 1` pairs every finest frequency
/// box with the whole time square.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    pub level: u32,
    pub a_per_axis: usize,
    pub b_per_axis: usize,
    pub r: usize,
    pub lambda: Vec<Complex64>,
}

impl CoefficientTensor {
    fn zeros(level: u32, layers: u32, r: usize) -> Self {
        let a_per_axis = 1usize << (level + 1);
        let b_per_axis = 1usize << (layers - level - 1);
        let len = a_per_axis * a_per_axis * b_per_axis * b_per_axis * r * r;
        CoefficientTensor {
            level,
            a_per_axis,
            b_per_axis,
            r,
            lambda: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn index(&self, a: (usize, usize), b: (usize, usize), k: (usize, usize)) -> usize {
        let af = a.0 * self.a_per_axis + a.1;
        let bf = b.0 * self.b_per_axis + b.1;
        let nb = self.b_per_axis * self.b_per_axis;
        ((af * nb + bf) * self.r + k.0) * self.r + k.1
    }

    pub fn get(&self, a: (usize, usize), b: (usize, usize), k: (usize, usize)) -> Complex64 {
        self.lambda[self.index(a, b, k)]
    }
}

/// Geometry and precomputed 1D transfer factors of a 2D butterfly.
///
/// Every transfer kernel factors as a product of an x-part and a y-part,
/// so the stages below are evaluated as two 1D contractions.
#[derive(Debug, Clone)]
pub struct ButterflyPlan {
    pub layers: u32,
    pub r: usize,
    pub input: (usize, usize),
    pub output: (usize, usize),
    pub direction: Direction,
    pub omega: (usize, usize),
    pub m: (usize, usize),
    grid: ChebGrid,
    // interp[axis][(a * r + k) * omega + s]
    interp: [Vec<Complex64>; 2],
    // recur[layer - 1][axis][((a * 2 + d) * r + k) * r + s]
    recur: Vec<[Vec<Complex64>; 2]>,
    // kernel[axis][(a * m + q) * r + s]
    kernel: [Vec<Complex64>; 2],
}

/// Checks `n = omega * 2^(L-1)` and `M = m * 2^L` per axis.
pub fn split_sizes(
    layers: u32,
    input: (usize, usize),
    output: (usize, usize),
) -> Result<((usize, usize), (usize, usize))> {
    if layers == 0 || layers > 20 {
        return Err(Error::invalid(format!("layer count {layers} out of range")));
    }
    let in_div = 1usize << (layers - 1);
    let out_div = 1usize << layers;
    let factor = |n: usize, d: usize, what: &str| {
        if n == 0 || n % d != 0 {
            Err(Error::invalid(format!(
                "{what} size {n} is not a positive multiple of {d} for L = {layers}"
            )))
        } else {
            Ok(n / d)
        }
    };
    let omega = (factor(input.0, in_div, "input")?, factor(input.1, in_div, "input")?);
    let m = (factor(output.0, out_div, "output")?, factor(output.1, out_div, "output")?);
    Ok((omega, m))
}

impl ButterflyPlan {
    pub fn new(
        layers: u32,
        r: usize,
        input: (usize, usize),
        output: (usize, usize),
        direction: Direction,
    ) -> Result<Self> {
        let (omega, m) = split_sizes(layers, input, output)?;
        let grid = cheb_points(r)?;
        let sign = direction.sign();
        let l = layers as i32;
        let mut interp: [Vec<Complex64>; 2] = Default::default();
        let mut kernel: [Vec<Complex64>; 2] = Default::default();
        let mut recur = Vec::new();
        for _ in 1..layers {
            recur.push(<[Vec<Complex64>; 2]>::default());
        }
        let phase = |arg: f64| Complex64::from_polar(1.0, sign * 2.0 * PI * arg);

        for axis in 0..2 {
            let (n, mm, om) = if axis == 0 {
                (input.0, m.0, omega.0)
            } else {
                (input.1, m.1, omega.1)
            };
            let big_m = mm << layers;
            let k_extent = phase_extent(direction, n, big_m);
            let kappa = k_extent / big_m as f64;

            // Interpolation: uniform points of the depth-(L-1) time box to its
            // Chebyshev points, one table per depth-1 frequency box.
            let b_side = 2f64.powi(-(l - 1));
            let table = &mut interp[axis];
            for a in 0..2 {
                let xi0 = (a as f64 + 0.5) * k_extent / 2.0;
                for k in 0..r {
                    let tk = b_side * (grid.point(k) + 0.5);
                    for s in 0..om {
                        let u = (s as f64 + 0.5) / n as f64;
                        let f = u / b_side - 0.5;
                        table.push(phase(xi0 * (u - tk)) * grid.lagrange(k, f));
                    }
                }
            }

            // Recursion: Chebyshev points of the two children of a time box to
            // the Chebyshev points of the box itself.
            for layer in 1..layers {
                let a_count = 1usize << (layer + 1);
                let parent_side = 2f64.powi(-(l - layer as i32 - 1));
                let a_side = k_extent / a_count as f64;
                let table = &mut recur[layer as usize - 1][axis];
                for a in 0..a_count {
                    let xi0 = (a as f64 + 0.5) * a_side;
                    for d in 0..2 {
                        for k in 0..r {
                            let tk = parent_side * (grid.point(k) + 0.5);
                            for s in 0..r {
                                let u = parent_side * 0.5 * (d as f64 + grid.point(s) + 0.5);
                                let f = u / parent_side - 0.5;
                                table.push(phase(xi0 * (u - tk)) * grid.lagrange(k, f));
                            }
                        }
                    }
                }
            }

            // Kernel application on the whole time square.
            let table = &mut kernel[axis];
            for a in 0..(1usize << layers) {
                for q in 0..mm {
                    let xi = kappa * (a * mm + q) as f64;
                    for s in 0..r {
                        table.push(phase(xi * (grid.point(s) + 0.5 - 0.5 / n as f64)));
                    }
                }
            }
        }

        Ok(ButterflyPlan {
            layers,
            r,
            input,
            output,
            direction,
            omega,
            m,
            grid,
            interp,
            recur,
            kernel,
        })
    }

    pub fn grid(&self) -> &ChebGrid {
        &self.grid
    }

    /// Output normalization: `1 / (nx ny)` for the inverse transform.
    pub fn scale(&self) -> f64 {
        match self.direction {
            Direction::Forward => 1.0,
            Direction::Inverse => 1.0 / (self.input.0 * self.input.1) as f64,
        }
    }

    /// Stage `l = 0`: transfer from the uniform grid of every finest time box
    /// to its Chebyshev points, for each of the four depth-1 frequency boxes.
    pub fn interpolate(&self, x: &Signal2D) -> Result<CoefficientTensor> {
        if (x.nx, x.ny) != self.input {
            return Err(Error::invalid(format!(
                "input is {}x{}, plan expects {:?}",
                x.nx, x.ny, self.input
            )));
        }
        let r = self.r;
        let (ox, oy) = self.omega;
        let mut out = CoefficientTensor::zeros(0, self.layers, r);
        let nb = out.b_per_axis;
        let mut partial = vec![Complex64::new(0.0, 0.0); r * ox];
        for ax in 0..2 {
            for ay in 0..2 {
                for bx in 0..nb {
                    for by in 0..nb {
                        let empty = (0..ox).all(|sx| {
                            let row = (bx * ox + sx) * x.ny + by * oy;
                            x.values[row..row + oy].iter().all(|z| z.re == 0.0 && z.im == 0.0)
                        });
                        if empty {
                            continue;
                        }
                        // partial[ky][sx] = sum_sy Ty[ay][ky][sy] x[bx*ox+sx][by*oy+sy]
                        for ky in 0..r {
                            let ty = &self.interp[1][(ay * r + ky) * oy..][..oy];
                            for sx in 0..ox {
                                let row = (bx * ox + sx) * x.ny + by * oy;
                                let xs = &x.values[row..row + oy];
                                partial[ky * ox + sx] =
                                    ty.iter().zip(xs).map(|(w, v)| w * v).sum();
                            }
                        }
                        for kx in 0..r {
                            let tx = &self.interp[0][(ax * r + kx) * ox..][..ox];
                            for ky in 0..r {
                                let p = &partial[ky * ox..][..ox];
                                let idx = out.index((ax, ay), (bx, by), (kx, ky));
                                out.lambda[idx] = tx.iter().zip(p).map(|(w, v)| w * v).sum();
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Stage `l = level.level + 1`: merges the four child time boxes into
    /// their parent for every child frequency box.
    pub fn recurse(&self, lambda: &CoefficientTensor) -> Result<CoefficientTensor> {
        let level = lambda.level + 1;
        if level >= self.layers || lambda.r != self.r {
            return Err(Error::invalid(format!(
                "cannot recurse from level {} with L = {}",
                lambda.level, self.layers
            )));
        }
        let r = self.r;
        let tables = &self.recur[level as usize - 1];
        let mut out = CoefficientTensor::zeros(level, self.layers, r);
        let (na, nb) = (out.a_per_axis, out.b_per_axis);
        let mut partial = vec![Complex64::new(0.0, 0.0); 2 * r * r];
        for ax in 0..na {
            for ay in 0..na {
                let pa = (ax / 2, ay / 2);
                for bx in 0..nb {
                    for by in 0..nb {
                        let empty = (0..4).all(|d| {
                            let base = lambda.index(pa, (2 * bx + d / 2, 2 * by + d % 2), (0, 0));
                            lambda.lambda[base..base + r * r].iter().all(|z| z.re == 0.0 && z.im == 0.0)
                        });
                        if empty {
                            continue;
                        }
                        let mut acc = vec![Complex64::new(0.0, 0.0); r * r];
                        for dx in 0..2 {
                            // partial[dy][ky][sx] = sum_sy Ty[ay][dy][ky][sy] lambda[child][sx][sy]
                            for dy in 0..2 {
                                let child = (2 * bx + dx, 2 * by + dy);
                                for ky in 0..r {
                                    let ty = &tables[1][((ay * 2 + dy) * r + ky) * r..][..r];
                                    for sx in 0..r {
                                        let base = lambda.index(pa, child, (sx, 0));
                                        let ls = &lambda.lambda[base..base + r];
                                        partial[(dy * r + ky) * r + sx] =
                                            ty.iter().zip(ls).map(|(w, v)| w * v).sum();
                                    }
                                }
                            }
                            for kx in 0..r {
                                let tx = &tables[0][((ax * 2 + dx) * r + kx) * r..][..r];
                                for ky in 0..r {
                                    let mut s = Complex64::new(0.0, 0.0);
                                    for dy in 0..2 {
                                        let p = &partial[(dy * r + ky) * r..][..r];
                                        s += tx.iter().zip(p).map(|(w, v)| w * v).sum::<Complex64>();
                                    }
                                    acc[kx * r + ky] += s;
                                }
                            }
                        }
                        let base = out.index((ax, ay), (bx, by), (0, 0));
                        out.lambda[base..base + r * r].copy_from_slice(&acc);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Final stage: evaluates the kernel at the output points of every finest
    /// frequency box from the coefficients on the whole time square.
    pub fn apply_kernel(&self, lambda: &CoefficientTensor) -> Result<Signal2D> {
        if lambda.level + 1 != self.layers || lambda.r != self.r {
            return Err(Error::invalid(format!(
                "kernel application needs level {} coefficients, got level {}",
                self.layers - 1,
                lambda.level
            )));
        }
        let r = self.r;
        let (mx, my) = self.m;
        let na = lambda.a_per_axis;
        let mut out = Signal2D::zeros(self.output.0, self.output.1);
        let scale = self.scale();
        let mut partial = vec![Complex64::new(0.0, 0.0); my * r];
        for ax in 0..na {
            for ay in 0..na {
                let base = lambda.index((ax, ay), (0, 0), (0, 0));
                let coeffs = &lambda.lambda[base..base + r * r];
                for qy in 0..my {
                    let ky = &self.kernel[1][(ay * my + qy) * r..][..r];
                    for sx in 0..r {
                        partial[qy * r + sx] =
                            ky.iter().zip(&coeffs[sx * r..][..r]).map(|(w, v)| w * v).sum();
                    }
                }
                for qx in 0..mx {
                    let kx = &self.kernel[0][(ax * mx + qx) * r..][..r];
                    for qy in 0..my {
                        let p = &partial[qy * r..][..r];
                        let v: Complex64 = kx.iter().zip(p).map(|(w, v)| w * v).sum();
                        out.values[(ax * mx + qx) * out.ny + ay * my + qy] = v * scale;
                    }
                }
            }
        }
        Ok(out)
    }

    /// All three stages.
    pub fn apply(&self, x: &Signal2D) -> Result<Signal2D> {
        let mut lambda = self.interpolate(x)?;
        for _ in 1..self.layers {
            lambda = self.recurse(&lambda)?;
        }
        self.apply_kernel(&lambda)
    }
}

/// Extent `K` of the frequency square used by the butterfly geometry.
pub fn phase_extent(direction: Direction, input_n: usize, output_n: usize) -> f64 {
    match direction {
        Direction::Forward => output_n as f64,
        Direction::Inverse => input_n as f64,
    }
}

/// Butterfly approximation of the forward or inverse 2D DFT.
pub fn butterfly_forward(
    x: &Signal2D,
    layers: u32,
    r: usize,
    output: (usize, usize),
    direction: Direction,
) -> Result<Signal2D> {
    ButterflyPlan::new(layers, r, (x.nx, x.ny), output, direction)?.apply(x)
}
