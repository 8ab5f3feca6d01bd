//! Dense complex matrices and the relative operator-norm errors used to
//! compare an approximate transform against the exact one.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::reference::{Direction, Signal2D};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn set_column(&mut self, j: usize, col: &[Complex64]) {
        for (i, &v) in col.iter().enumerate() {
            self.data[i * self.cols + j] = v;
        }
    }

    /// Elementwise `self - other`.
    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::invalid(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self^H w`.
    pub fn adjoint_matvec(&self, w: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (row, &wi) in self.data.chunks(self.cols).zip(w) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * wi;
            }
        }
        out
    }

    /// Maximum column sum of moduli.
    pub fn norm_1(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for row in self.data.chunks(self.cols) {
            for (s, a) in sums.iter_mut().zip(row) {
                *s += a.norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Maximum row sum of moduli.
    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().map(|a| a.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value by power iteration on `M^H M`.
    pub fn norm_2(&self) -> f64 {
        spectral_norm(self, 10_000, 1e-6)
    }
}

/// Power iteration for the largest singular value. Stops when the Rayleigh
/// quotient changes by at most `tol` relative, or after `max_iter` steps.
pub fn spectral_norm(m: &CMatrix, max_iter: usize, tol: f64) -> f64 {
    if m.rows == 0 || m.cols == 0 {
        return 0.0;
    }
    // Deterministic, generic start vector.
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 + 0.5
    };
    let mut v: Vec<Complex64> = (0..m.cols).map(|_| Complex64::new(next(), next() - 1.0)).collect();
    let mut prev = 0.0;
    for _ in 0..max_iter {
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|z| *z /= nv);
        let w = m.matvec(&v);
        let rq = w.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if rq == 0.0 {
            return 0.0;
        }
        if (rq - prev).abs() <= tol * rq {
            return rq.sqrt();
        }
        prev = rq;
        v = m.adjoint_matvec(&w);
    }
    prev.sqrt()
}

/// Relative errors `||B - F|| / ||F||` in the 1-, 2- and infinity-norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonMetrics {
    pub eps_1: f64,
    pub eps_2: f64,
    pub eps_inf: f64,
}

pub fn epsilon_metrics(b: &CMatrix, f: &CMatrix) -> Result<EpsilonMetrics> {
    let d = b.sub(f)?;
    let (f1, f2, finf) = (f.norm_1(), f.norm_2(), f.norm_inf());
    if f1 == 0.0 {
        return Err(Error::invalid("reference matrix is zero"));
    }
    Ok(EpsilonMetrics {
        eps_1: d.norm_1() / f1,
        eps_2: d.norm_2() / f2,
        eps_inf: d.norm_inf() / finf,
    })
}

/// Dense matrix of an exact transform: column `p` is the transform of the
/// `p`-th unit input (row-major input index), rows are row-major outputs.
pub fn exact_matrix(input: (usize, usize), output: (usize, usize), direction: Direction) -> CMatrix {
    // Entry ((a, b), (i, j)) is the product of two 1D twiddles; the phase
    // index is reduced modulo the grid that carries the time samples.
    let sign = direction.sign();
    let (tx, ty, scale) = match direction {
        Direction::Forward => (input.0, input.1, 1.0),
        Direction::Inverse => (output.0, output.1, 1.0 / (input.0 * input.1) as f64),
    };
    let tw = |xi: usize, t: usize, n: usize| {
        Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * ((xi * t) % n) as f64 / n as f64)
    };
    let mut m = CMatrix::zeros(output.0 * output.1, input.0 * input.1);
    for a in 0..output.0 {
        for b in 0..output.1 {
            let row = (a * output.1 + b) * m.cols;
            for i in 0..input.0 {
                let wx = tw(a, i, tx) * scale;
                for j in 0..input.1 {
                    m.data[row + i * input.1 + j] = wx * tw(b, j, ty);
                }
            }
        }
    }
    m
}

/// Dense matrix of any linear map given by its action on unit inputs.
pub fn matrix_of<F>(input: (usize, usize), output: (usize, usize), mut apply: F) -> Result<CMatrix>
where
    F: FnMut(&Signal2D) -> Result<Signal2D>,
{
    let cols = input.0 * input.1;
    let mut m = CMatrix::zeros(output.0 * output.1, cols);
    let mut e = Signal2D::zeros(input.0, input.1);
    for p in 0..cols {
        e.values[p] = Complex64::new(1.0, 0.0);
        let y = apply(&e)?;
        if (y.nx, y.ny) != output {
            return Err(Error::invalid("map returned wrong output shape"));
        }
        m.set_column(p, &y.values);
        e.values[p] = Complex64::new(0.0, 0.0);
    }
    Ok(m)
}
