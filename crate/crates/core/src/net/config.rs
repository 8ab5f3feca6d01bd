use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reference::{phase_extent, split_sizes, Direction};

/// Whether network inputs are real grids or complex grids. Both are fed as
/// four encoded reals per pixel; the kind only selects training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Real,
    Complex,
}

/// Shape parameters of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub layers: u32,
    pub r: usize,
    pub omega: (usize, usize),
    pub m: (usize, usize),
    pub direction: Direction,
    pub input_kind: InputKind,
}

impl NetConfig {
    pub fn new(
        layers: u32,
        r: usize,
        omega: (usize, usize),
        m: (usize, usize),
        direction: Direction,
        input_kind: InputKind,
    ) -> Result<Self> {
        let c = NetConfig {
            layers,
            r,
            omega,
            m,
            direction,
            input_kind,
        };
        c.validate()?;
        Ok(c)
    }

    /// Config for given input and output grid sizes. Forward networks take
    /// real inputs, inverse networks complex ones.
    pub fn for_sizes(
        layers: u32,
        r: usize,
        input: (usize, usize),
        output: (usize, usize),
        direction: Direction,
    ) -> Result<Self> {
        let (omega, m) = split_sizes(layers, input, output)?;
        let kind = match direction {
            Direction::Forward => InputKind::Real,
            Direction::Inverse => InputKind::Complex,
        };
        Self::new(layers, r, omega, m, direction, kind)
    }

    /// Square `n x n -> n x n` transform with `L = log2 n` unless given.
    pub fn square(n: usize, layers: u32, r: usize, direction: Direction) -> Result<Self> {
        Self::for_sizes(layers, r, (n, n), (n, n), direction)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.layers > 12 {
            return Err(Error::invalid(format!("layer count {} out of range 1..=12", self.layers)));
        }
        if self.r == 0 || self.r > 32 {
            return Err(Error::invalid(format!("Chebyshev order {} out of range 1..=32", self.r)));
        }
        if self.omega.0 == 0 || self.omega.1 == 0 || self.m.0 == 0 || self.m.1 == 0 {
            return Err(Error::invalid("omega and m must be positive"));
        }
        Ok(())
    }

    pub fn input_size(&self) -> (usize, usize) {
        let s = 1usize << (self.layers - 1);
        (self.omega.0 * s, self.omega.1 * s)
    }

    pub fn output_size(&self) -> (usize, usize) {
        let s = 1usize << self.layers;
        (self.m.0 * s, self.m.1 * s)
    }

    /// Extent of the frequency square on each axis.
    pub fn phase_extent(&self) -> (f64, f64) {
        let (i, o) = (self.input_size(), self.output_size());
        (
            phase_extent(self.direction, i.0, o.0),
            phase_extent(self.direction, i.1, o.1),
        )
    }

    /// Complex channels after layer `l` (the last layer is `l = L`).
    pub fn complex_channels(&self, l: u32) -> usize {
        if l < self.layers {
            (4usize << (2 * l)) * self.r * self.r
        } else {
            (1usize << (2 * self.layers)) * self.m.0 * self.m.1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: NetConfig = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

/// Z-order code of a box index at the given depth, x bit above y bit.
///
/// Children of box `a` are `4 * morton(a) + (2 cx + cy)`, so every parent box
/// owns a contiguous block of channels.
pub fn morton(ix: usize, iy: usize, depth: u32) -> usize {
    let mut code = 0;
    for b in (0..depth).rev() {
        code = (code << 2) | (((ix >> b) & 1) << 1) | ((iy >> b) & 1);
    }
    code
}

pub fn demorton(code: usize, depth: u32) -> (usize, usize) {
    let (mut ix, mut iy) = (0, 0);
    for b in 0..depth {
        ix |= ((code >> (2 * b + 1)) & 1) << b;
        iy |= ((code >> (2 * b)) & 1) << b;
    }
    (ix, iy)
}

/// Complex channel of an intermediate layer: frequency box `a` at `depth`
/// and Chebyshev node `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelIndex {
    pub a: (usize, usize),
    pub k: (usize, usize),
}

impl ChannelIndex {
    pub fn flat(&self, depth: u32, r: usize) -> usize {
        (morton(self.a.0, self.a.1, depth) * r + self.k.0) * r + self.k.1
    }

    pub fn from_flat(c: usize, depth: u32, r: usize) -> Self {
        let a = demorton(c / (r * r), depth);
        ChannelIndex {
            a,
            k: ((c / r) % r, c % r),
        }
    }
}
