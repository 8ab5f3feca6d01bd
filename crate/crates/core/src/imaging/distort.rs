use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::image::Image;
use crate::error::{Error, Result};

pub const BLUR_SIGMA: f64 = 2.5;
pub const NOISE_STD: f64 = 0.1;

fn square_side(img: &Image) -> Option<usize> {
    (img.height == img.width).then_some(img.height)
}

/// Zeroes a centered square of side `10 * size / 32`.
pub fn distort_inpaint(img: &Image) -> Result<Image> {
    let size = square_side(img)
        .filter(|s| [32, 64, 128, 256].contains(s))
        .ok_or_else(|| {
            Error::invalid(format!(
                "inpainting needs a square image of size 32, 64, 128 or 256, got {}x{}",
                img.height, img.width
            ))
        })?;
    let side = 10 * size / 32;
    let lo = (size - side) / 2;
    let mut out = img.clone();
    for c in 0..img.channels {
        for i in lo..lo + side {
            for j in lo..lo + side {
                out.set(c, i, j, 0.0);
            }
        }
    }
    Ok(out)
}

/// Normalized 5x5 Gaussian, row-major.
pub fn blur_kernel() -> [f64; 25] {
    let mut k = [0.0; 25];
    for (idx, v) in k.iter_mut().enumerate() {
        let (i, j) = ((idx / 5) as f64 - 2.0, (idx % 5) as f64 - 2.0);
        *v = (-(i * i + j * j) / (2.0 * BLUR_SIGMA * BLUR_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Mirror index without repeating the edge sample (`-1 -> 1`).
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// 5x5 Gaussian blur with reflect padding.
pub fn distort_blur(img: &Image) -> Image {
    let k = blur_kernel();
    let (h, w) = (img.height, img.width);
    let mut out = img.clone();
    for c in 0..img.channels {
        let src = img.plane(c);
        let dst = out.plane_mut(c);
        for i in 0..h {
            for j in 0..w {
                let mut acc = 0.0;
                for di in 0..5 {
                    let ii = reflect(i as isize + di as isize - 2, h);
                    for dj in 0..5 {
                        let jj = reflect(j as isize + dj as isize - 2, w);
                        acc += k[di * 5 + dj] * src[ii * w + jj];
                    }
                }
                dst[i * w + j] = acc.clamp(0.0, 1.0);
            }
        }
    }
    out
}

/// The pre-clamp Gaussian noise field used by [`distort_noise`].
pub fn noise_field(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, NOISE_STD).expect("valid normal");
    (0..len).map(|_| normal.sample(&mut rng)).collect()
}

/// Adds N(0, 0.1^2) per pixel and clamps to [0, 1].
pub fn distort_noise(img: &Image, seed: u64) -> Image {
    let noise = noise_field(img.data.len(), seed);
    let mut out = img.clone();
    for (v, n) in out.data.iter_mut().zip(noise) {
        *v = (*v + n).clamp(0.0, 1.0);
    }
    out
}

/// Line width and starting rows/columns of the watermark grid.
pub fn watermark_lines(size: usize) -> (usize, Vec<usize>) {
    let width = (size / 32).max(1);
    let starts = (0..8).map(|k| size / 16 + k * size / 8).collect();
    (width, starts)
}

/// Eight black horizontal and eight black vertical lines.
pub fn distort_watermark(img: &Image) -> Result<Image> {
    let size = square_side(img)
        .filter(|&s| s >= 32)
        .ok_or_else(|| Error::invalid(format!("watermark needs a square image of size >= 32, got {}x{}", img.height, img.width)))?;
    let (width, starts) = watermark_lines(size);
    let mut on_line = vec![false; size];
    for s in starts {
        on_line[s..(s + width).min(size)].iter_mut().for_each(|v| *v = true);
    }
    let mut out = img.clone();
    for c in 0..img.channels {
        for i in 0..size {
            for j in 0..size {
                if on_line[i] || on_line[j] {
                    out.set(c, i, j, 0.0);
                }
            }
        }
    }
    Ok(out)
}

/// Restoration tasks; `Identity` applies no distortion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Inpaint,
    Deblur,
    Denoise,
    Watermark,
    Identity,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Inpaint, Task::Deblur, Task::Denoise, Task::Watermark, Task::Identity];

    pub fn name(self) -> &'static str {
        match self {
            Task::Inpaint => "inpaint",
            Task::Deblur => "deblur",
            Task::Denoise => "denoise",
            Task::Watermark => "watermark",
            Task::Identity => "identity",
        }
    }

    /// Distorted copy of `img`; `seed` only matters for noise.
    pub fn distort(self, img: &Image, seed: u64) -> Result<Image> {
        match self {
            Task::Inpaint => distort_inpaint(img),
            Task::Deblur => Ok(distort_blur(img)),
            Task::Denoise => Ok(distort_noise(img, seed)),
            Task::Watermark => distort_watermark(img),
            Task::Identity => Ok(img.clone()),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown task '{s}'")))
    }
}
