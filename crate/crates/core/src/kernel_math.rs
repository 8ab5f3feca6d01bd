//! Chebyshev interpolation on `[-1/2, 1/2]` and the recursive 4-partition of
//! the frequency square `A = [0, K)^2` and the time square `B = [0, 1)^2`.
//!
//! Boxes are addressed by *depth*: depth 0 is the whole square and every
//! extra level of depth splits each box into four. In the butterfly
//! recursion the frequency boxes used at layer `l` live at depth `l + 1`
//! and the matching time boxes at depth `L - l - 1`, so the product of
//! their side lengths is the same at every layer.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

/// Chebyshev points of order `r` on `[-1/2, 1/2]`, in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebGrid {
    points: Vec<f64>,
    // Barycentric-free denominators prod_{p != k} (z_k - z_p).
    denoms: Vec<f64>,
}

/// Builds the Chebyshev grid `z_i = cos((2i + 1) pi / (2r)) / 2`, `i = 0..r`.
pub fn cheb_points(r: usize) -> Result<ChebGrid> {
    if r == 0 {
        return Err(Error::invalid("Chebyshev order must be at least 1"));
    }
    let points: Vec<f64> = (0..r)
        .map(|i| 0.5 * ((2 * i + 1) as f64 * PI / (2 * r) as f64).cos())
        .collect();
    let denoms = (0..r)
        .map(|k| {
            (0..r)
                .filter(|&p| p != k)
                .map(|p| points[k] - points[p])
                .product()
        })
        .collect();
    Ok(ChebGrid { points, denoms })
}

impl ChebGrid {
    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, k: usize) -> f64 {
        self.points[k]
    }

    /// Lagrange basis polynomial `L_k(x) = prod_{p != k} (x - z_p) / (z_k - z_p)`.
    ///
    /// `x` may lie outside `[-1/2, 1/2]`.
    pub fn lagrange(&self, k: usize, x: f64) -> f64 {
        assert!(k < self.order(), "Chebyshev index {k} out of range");
        let num: f64 = self
            .points
            .iter()
            .enumerate()
            .filter(|&(p, _)| p != k)
            .map(|(_, &z)| x - z)
            .product();
        num / self.denoms[k]
    }

    /// Tensor-product basis `L_kx(x) * L_ky(y)`.
    pub fn lagrange2d(&self, kx: usize, ky: usize, x: f64, y: f64) -> f64 {
        self.lagrange(kx, x) * self.lagrange(ky, y)
    }
}

/// Half-open axis-aligned box `[lo, lo + side)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainBox {
    pub lo: (f64, f64),
    pub side: (f64, f64),
}

impl DomainBox {
    pub fn new(lo: (f64, f64), side: (f64, f64)) -> Result<Self> {
        if !(side.0 > 0.0 && side.1 > 0.0) {
            return Err(Error::invalid(format!(
                "box sides must be positive, got {side:?}"
            )));
        }
        Ok(DomainBox { lo, side })
    }

    pub fn center(&self) -> (f64, f64) {
        (self.lo.0 + 0.5 * self.side.0, self.lo.1 + 0.5 * self.side.1)
    }

    pub fn hi(&self) -> (f64, f64) {
        (self.lo.0 + self.side.0, self.lo.1 + self.side.1)
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        let hi = self.hi();
        p.0 >= self.lo.0 && p.0 < hi.0 && p.1 >= self.lo.1 && p.1 < hi.1
    }

    /// Affine map of a point of the box onto the reference square
    /// `[-1/2, 1/2)^2` where the Chebyshev grid lives.
    pub fn to_frame(&self, p: (f64, f64)) -> (f64, f64) {
        let c = self.center();
        ((p.0 - c.0) / self.side.0, (p.1 - c.1) / self.side.1)
    }

    /// Inverse of [`DomainBox::to_frame`].
    pub fn from_frame(&self, f: (f64, f64)) -> (f64, f64) {
        let c = self.center();
        (c.0 + f.0 * self.side.0, c.1 + f.1 * self.side.1)
    }

    pub fn translated(&self, by: (f64, f64)) -> DomainBox {
        DomainBox {
            lo: (self.lo.0 + by.0, self.lo.1 + by.1),
            side: self.side,
        }
    }

    /// Chebyshev point `(kx, ky)` of `grid` placed inside this box.
    pub fn cheb_point(&self, grid: &ChebGrid, kx: usize, ky: usize) -> (f64, f64) {
        self.from_frame((grid.point(kx), grid.point(ky)))
    }
}

/// Which of the two squares a box belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Frequency square `[0, K)^2`.
    A,
    /// Time square `[0, 1)^2`.
    B,
}

/// A box of the recursive 4-partition: `2^depth` boxes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DomainIndex {
    pub side: Side,
    pub depth: u32,
    pub ix: usize,
    pub iy: usize,
}

impl DomainIndex {
    pub fn new(side: Side, depth: u32, ix: usize, iy: usize) -> Result<Self> {
        let n = 1usize << depth;
        if ix >= n || iy >= n {
            return Err(Error::invalid(format!(
                "box index ({ix}, {iy}) out of range at depth {depth} (per-axis count {n})"
            )));
        }
        Ok(DomainIndex {
            side,
            depth,
            ix,
            iy,
        })
    }

    /// Frequency box `A^l_{ix,iy}` used at butterfly layer `l` (depth `l + 1`).
    pub fn a_at_layer(layer: u32, ix: usize, iy: usize) -> Result<Self> {
        Self::new(Side::A, layer + 1, ix, iy)
    }

    /// Time box `B^{level}_{jx,jy}` where `level = L - l`; levels 0 and 1
    /// both denote the whole square.
    pub fn b_at_level(level: u32, jx: usize, jy: usize) -> Result<Self> {
        Self::new(Side::B, level.saturating_sub(1), jx, jy)
    }

    /// Boxes per axis at this depth.
    pub fn per_axis(&self) -> usize {
        1 << self.depth
    }

    /// Geometric box for a square of the given per-axis extent
    /// (`(K_x, K_y)` for side A, `(1, 1)` for side B).
    pub fn to_box(&self, extent: (f64, f64)) -> DomainBox {
        let n = self.per_axis() as f64;
        let side = (extent.0 / n, extent.1 / n);
        DomainBox {
            lo: (self.ix as f64 * side.0, self.iy as f64 * side.1),
            side,
        }
    }

    /// The four children in the order `(0,0), (0,1), (1,0), (1,1)`.
    pub fn children(&self) -> [DomainIndex; 4] {
        let child = |dx: usize, dy: usize| DomainIndex {
            side: self.side,
            depth: self.depth + 1,
            ix: 2 * self.ix + dx,
            iy: 2 * self.iy + dy,
        };
        [child(0, 0), child(0, 1), child(1, 0), child(1, 1)]
    }

    pub fn parent(&self) -> Result<DomainIndex> {
        if self.depth == 0 {
            return Err(Error::invalid("the root box has no parent"));
        }
        Ok(DomainIndex {
            side: self.side,
            depth: self.depth - 1,
            ix: self.ix / 2,
            iy: self.iy / 2,
        })
    }

    /// Whether `self` is a (non-strict) descendant of `other`.
    pub fn within(&self, other: &DomainIndex) -> bool {
        if self.side != other.side || self.depth < other.depth {
            return false;
        }
        let shift = self.depth - other.depth;
        self.ix >> shift == other.ix && self.iy >> shift == other.iy
    }
}

/// Separation factor `gamma = e * pi * w(A) * w(B) / r^2`.
pub fn separation_gamma(side_a: f64, side_b: f64, r: usize) -> f64 {
    E * PI * side_a * side_b / (r * r) as f64
}

/// Constant-free low-rank interpolation bound `gamma^(r^2) / (1 - gamma)`.
pub fn lowrank_error_bound(side_a: f64, side_b: f64, r: usize) -> Result<f64> {
    if r == 0 {
        return Err(Error::invalid("Chebyshev order must be at least 1"));
    }
    let gamma = separation_gamma(side_a, side_b, r);
    if !(gamma < 1.0) {
        return Err(Error::BoundInapplicable { gamma });
    }
    Ok(gamma.powi((r * r) as i32) / (1.0 - gamma))
}
