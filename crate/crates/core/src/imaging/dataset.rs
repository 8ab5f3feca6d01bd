use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::image::{load_image, save_image, Image};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the manifest root.
    pub file: String,
    pub split: Split,
}

/// A directory of images with a train/test assignment; images are resized
/// to `size x size` on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub size: usize,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn is_image(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("png" | "ppm" | "pgm" | "pnm")
    )
}

impl DatasetManifest {
    /// Every image file in `dir` (sorted by name); each `test_every`-th one
    /// goes to the test split.
    pub fn from_directory(dir: &Path, size: usize, test_every: usize) -> Result<Self> {
        let mut files: Vec<String> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_image(p))
            .filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(String::from))
            .collect();
        files.sort();
        let step = test_every.max(2);
        let entries = files
            .into_iter()
            .enumerate()
            .map(|(k, file)| ManifestEntry {
                file,
                split: if k % step == step - 1 { Split::Test } else { Split::Train },
            })
            .collect();
        let m = DatasetManifest {
            root: dir.to_path_buf(),
            size,
            entries,
        };
        m.validate()?;
        Ok(m)
    }

    /// Reads `path`, or `path/manifest.json` when `path` is a directory
    /// holding one; any other directory is scanned with a 1-in-4 test split.
    pub fn open(path: &Path, size: usize) -> Result<Self> {
        if path.is_dir() {
            let m = path.join(MANIFEST_FILE);
            if m.is_file() {
                return Self::load(&m);
            }
            return Self::from_directory(path, size, 4);
        }
        Self::load(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if m.root.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            m.root = base.join(&m.root);
        }
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::invalid(format!("dataset at {} has no images", self.root.display())));
        }
        if self.size == 0 {
            return Err(Error::invalid("dataset image size must be positive"));
        }
        Ok(())
    }

    pub fn count(&self, split: Split) -> usize {
        self.entries.iter().filter(|e| e.split == split).count()
    }

    /// RGB images of one split at the manifest size.
    pub fn load_split(&self, split: Split) -> Result<Vec<Image>> {
        self.entries
            .iter()
            .filter(|e| e.split == split)
            .map(|e| {
                let img = load_image(&self.root.join(&e.file))?.to_rgb();
                img.resized(self.size, self.size)
            })
            .collect()
    }
}

/// One synthetic RGB picture: a smooth gradient background overlaid with a
/// checkerboard patch and a few Gaussian blobs.
pub fn synthetic_image(size: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = size as f64;
    let mut data = vec![0.0; 3 * size * size];
    let base: [f64; 3] = [rng.gen_range(0.1..0.6), rng.gen_range(0.1..0.6), rng.gen_range(0.1..0.6)];
    let grad: [(f64, f64); 3] = std::array::from_fn(|_| (rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)));
    let cell = rng.gen_range(1..=4);
    let (cx0, cy0) = (rng.gen_range(0..size / 4), rng.gen_range(0..size / 4));
    let (cw, ch) = (rng.gen_range(size / 2..=size), rng.gen_range(size / 2..=size));
    let check: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.3..0.3));
    let blobs: Vec<(f64, f64, f64, [f64; 3])> = (0..rng.gen_range(2..7))
        .map(|_| {
            (
                rng.gen_range(0.0..n),
                rng.gen_range(0.0..n),
                rng.gen_range(n / 32.0..n / 6.0),
                std::array::from_fn(|_| rng.gen_range(-0.4..0.4)),
            )
        })
        .collect();
    for c in 0..3 {
        for i in 0..size {
            for j in 0..size {
                let (y, x) = (i as f64 / n, j as f64 / n);
                let mut v = base[c] + grad[c].0 * y + grad[c].1 * x;
                let inside = (cx0..cx0 + cw).contains(&i) && (cy0..cy0 + ch).contains(&j);
                if inside && ((i - cx0) / cell + (j - cy0) / cell) % 2 == 0 {
                    v += check[c];
                }
                for &(bi, bj, s, amp) in &blobs {
                    let d2 = (i as f64 - bi).powi(2) + (j as f64 - bj).powi(2);
                    v += amp[c] * (-d2 / (2.0 * s * s)).exp();
                }
                data[(c * size + i) * size + j] = v.clamp(0.0, 1.0);
            }
        }
    }
    Image::new(size, size, 3, data).expect("synthetic image in range")
}

/// Writes `count` synthetic PNGs and a manifest to `dir`; every
/// `test_every`-th image is held out for testing.
pub fn write_synthetic_corpus(dir: &Path, count: usize, size: usize, test_every: usize, seed: u64) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for k in 0..count {
        let img = synthetic_image(size, seed.wrapping_mul(1_000_003).wrapping_add(k as u64));
        save_image(&img, &dir.join(format!("synthetic_{k:04}.png")))?;
    }
    let mut m = DatasetManifest::from_directory(dir, size, test_every)?;
    m.save(&dir.join(MANIFEST_FILE))?;
    m.root = dir.to_path_buf();
    Ok(m)
}
