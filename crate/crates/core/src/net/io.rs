//! Checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "BFN2"                       4 bytes
//! version                      u32 (= 1)
//! L, r, wx, wy, mx, my         u32 each
//! direction                    u32 (0 forward, 1 inverse)
//! input kind                   u32 (0 real, 1 complex)
//! layer count                  u32
//! per layer:
//!   weight count               u64
//!   weights                    f64 LE, [group][dx][dy][out][in]
//!   bias count                 u64
//!   biases                     f64 LE, [group][out]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ButterflyNet2D, InputKind, NetConfig};
use crate::error::{Error, Result};
use crate::reference::Direction;

const MAGIC: &[u8; 4] = b"BFN2";
const VERSION: u32 = 1;

fn put_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64s(w: &mut impl Write, v: &[f64]) -> std::io::Result<()> {
    w.write_all(&(v.len() as u64).to_le_bytes())?;
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64s(r: &mut impl Read, expected: usize, what: &str) -> Result<Vec<f64>> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated {what} length: {e}")))?;
    let n = u64::from_le_bytes(b) as usize;
    if n != expected {
        return Err(Error::Format(format!("{what} count {n} does not match config ({expected})")));
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated {what}: {e}")))?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

impl ButterflyNet2D {
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let c = &self.config;
        w.write_all(MAGIC)?;
        put_u32(w, VERSION)?;
        for v in [c.layers as usize, c.r, c.omega.0, c.omega.1, c.m.0, c.m.1] {
            put_u32(w, v as u32)?;
        }
        put_u32(w, matches!(c.direction, Direction::Inverse) as u32)?;
        put_u32(w, matches!(c.input_kind, InputKind::Complex) as u32)?;
        put_u32(w, self.layers.len() as u32)?;
        for layer in &self.layers {
            put_f64s(w, &layer.weights)?;
            put_f64s(w, &layer.bias)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| Error::Format(format!("missing magic: {e}")))?;
        if &magic != MAGIC {
            return Err(Error::Format("not a BFN2 checkpoint".into()));
        }
        let version = get_u32(r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mut f = [0usize; 6];
        for v in &mut f {
            *v = get_u32(r)? as usize;
        }
        let direction = match get_u32(r)? {
            0 => Direction::Forward,
            1 => Direction::Inverse,
            d => return Err(Error::Format(format!("bad direction tag {d}"))),
        };
        let input_kind = match get_u32(r)? {
            0 => InputKind::Real,
            1 => InputKind::Complex,
            k => return Err(Error::Format(format!("bad input kind tag {k}"))),
        };
        let config = NetConfig::new(f[0] as u32, f[1], (f[2], f[3]), (f[4], f[5]), direction, input_kind)
            .map_err(|e| Error::Format(format!("bad config: {e}")))?;
        let mut net = ButterflyNet2D::build(config)?;
        let count = get_u32(r)? as usize;
        if count != net.layers.len() {
            return Err(Error::Format(format!("layer count {count}, config implies {}", net.layers.len())));
        }
        for layer in &mut net.layers {
            layer.weights = get_f64s(r, layer.weights.len(), "weight")?;
            layer.bias = get_f64s(r, layer.bias.len(), "bias")?;
        }
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(file))
    }
}
