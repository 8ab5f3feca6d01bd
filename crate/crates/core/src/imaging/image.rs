use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use crate::error::{Error, Result};

/// Pixels in `[0, 1]`, channel-major (`c * h * w + i * w + j`).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!("images have 1 or 3 channels, got {channels}")));
        }
        if data.len() != height * width * channels {
            return Err(Error::invalid(format!(
                "{channels}x{height}x{width} image needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("pixel values must lie in [0, 1]"));
        }
        Ok(Image {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, v: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![v; height * width * channels])
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn at(&self, c: usize, i: usize, j: usize) -> f64 {
        self.data[(c * self.height + i) * self.width + j]
    }

    pub fn set(&mut self, c: usize, i: usize, j: usize, v: f64) {
        self.data[(c * self.height + i) * self.width + j] = v;
    }

    /// Single-channel image from one plane.
    pub fn channel(&self, c: usize) -> Image {
        Image {
            height: self.height,
            width: self.width,
            channels: 1,
            data: self.plane(c).to_vec(),
        }
    }

    /// Stacks single-channel planes into one image.
    pub fn from_planes(planes: &[Image]) -> Result<Image> {
        let first = planes.first().ok_or_else(|| Error::invalid("no planes"))?;
        if planes.iter().any(|p| p.channels != 1 || (p.height, p.width) != (first.height, first.width)) {
            return Err(Error::invalid("planes must be single-channel and equally sized"));
        }
        let data = planes.iter().flat_map(|p| p.data.iter().copied()).collect();
        Image::new(first.height, first.width, planes.len(), data)
    }

    /// Replicates a grayscale image into three channels.
    pub fn to_rgb(&self) -> Image {
        if self.channels == 3 {
            return self.clone();
        }
        let data = (0..3).flat_map(|_| self.data.iter().copied()).collect();
        Image {
            height: self.height,
            width: self.width,
            channels: 3,
            data,
        }
    }

    fn quantized(&self, c: usize, i: usize, j: usize) -> u8 {
        (self.at(c, i, j) * 255.0).round() as u8
    }

    fn to_dynamic(&self) -> DynamicImage {
        let (w, h) = (self.width as u32, self.height as u32);
        if self.channels == 1 {
            DynamicImage::ImageLuma8(GrayImage::from_fn(w, h, |x, y| {
                image::Luma([self.quantized(0, y as usize, x as usize)])
            }))
        } else {
            DynamicImage::ImageRgb8(RgbImage::from_fn(w, h, |x, y| {
                let (i, j) = (y as usize, x as usize);
                image::Rgb([self.quantized(0, i, j), self.quantized(1, i, j), self.quantized(2, i, j)])
            }))
        }
    }

    fn from_dynamic(img: DynamicImage) -> Image {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let gray = matches!(img, DynamicImage::ImageLuma8(_) | DynamicImage::ImageLuma16(_));
        if gray {
            let g = img.into_luma8();
            let data = g.pixels().map(|p| p.0[0] as f64 / 255.0).collect();
            return Image {
                height: h,
                width: w,
                channels: 1,
                data,
            };
        }
        let rgb = img.into_rgb8();
        let mut data = vec![0.0; 3 * h * w];
        for (x, y, p) in rgb.enumerate_pixels() {
            for c in 0..3 {
                data[(c * h + y as usize) * w + x as usize] = p.0[c] as f64 / 255.0;
            }
        }
        Image {
            height: h,
            width: w,
            channels: 3,
            data,
        }
    }

    /// Bilinear resize to `height x width` (no-op when the size matches).
    pub fn resized(&self, height: usize, width: usize) -> Result<Image> {
        if (height, width) == (self.height, self.width) {
            return Ok(self.clone());
        }
        if height == 0 || width == 0 {
            return Err(Error::invalid("target size must be positive"));
        }
        let planes = (0..self.channels)
            .map(|c| {
                let buf = image::ImageBuffer::<image::Luma<f32>, Vec<f32>>::from_fn(
                    self.width as u32,
                    self.height as u32,
                    |x, y| image::Luma([self.at(c, y as usize, x as usize) as f32]),
                );
                let r = image::imageops::resize(&buf, width as u32, height as u32, image::imageops::FilterType::Triangle);
                Image {
                    height,
                    width,
                    channels: 1,
                    data: r.pixels().map(|p| (p.0[0] as f64).clamp(0.0, 1.0)).collect(),
                }
            })
            .collect::<Vec<_>>();
        Image::from_planes(&planes)
    }
}

/// Reads a PNG or binary PPM/PGM file.
pub fn load_image(path: &Path) -> Result<Image> {
    let reader = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|e| match e {
        image::ImageError::IoError(e) => Error::io(path, e),
        other => Error::Format(format!("{}: {other}", path.display())),
    })?;
    Ok(Image::from_dynamic(img))
}

/// Writes 8-bit PNG, or binary PPM/PGM for `.ppm`/`.pgm`/`.pnm` paths.
pub fn save_image(img: &Image, path: &Path) -> Result<()> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let format = match ext.as_str() {
        "png" => ImageFormat::Png,
        "ppm" | "pgm" | "pnm" => ImageFormat::Pnm,
        _ => return Err(Error::invalid(format!("unsupported image extension: {}", path.display()))),
    };
    img.to_dynamic().save_with_format(path, format).map_err(|e| match e {
        image::ImageError::IoError(e) => Error::io(path, e),
        other => Error::Format(format!("{}: {other}", path.display())),
    })
}

/// Rec.601 luma.
pub fn to_grayscale(img: &Image) -> Result<Image> {
    if img.channels != 3 {
        return Err(Error::invalid(format!("grayscale conversion needs 3 channels, got {}", img.channels)));
    }
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let data = (0..img.plane_len())
        .map(|k| (0.299 * r[k] + 0.587 * g[k] + 0.114 * b[k]).clamp(0.0, 1.0))
        .collect();
    Image::new(img.height, img.width, 1, data)
}

/// Non-overlapping `grid x grid` tiles in row-major order.
pub fn crop_patches(img: &Image, grid: usize) -> Result<Vec<Image>> {
    if grid == 0 || img.height % grid != 0 || img.width % grid != 0 {
        return Err(Error::invalid(format!(
            "{}x{} image does not split into a {grid}x{grid} grid",
            img.height, img.width
        )));
    }
    let (ph, pw) = (img.height / grid, img.width / grid);
    let mut out = Vec::with_capacity(grid * grid);
    for ti in 0..grid {
        for tj in 0..grid {
            let mut data = Vec::with_capacity(ph * pw * img.channels);
            for c in 0..img.channels {
                for i in 0..ph {
                    let row = (c * img.height + ti * ph + i) * img.width + tj * pw;
                    data.extend_from_slice(&img.data[row..row + pw]);
                }
            }
            out.push(Image {
                height: ph,
                width: pw,
                channels: img.channels,
                data,
            });
        }
    }
    Ok(out)
}

/// Inverse of [`crop_patches`].
pub fn stitch_patches(patches: &[Image], grid: usize) -> Result<Image> {
    if grid == 0 || patches.len() != grid * grid {
        return Err(Error::invalid(format!("expected {} patches, got {}", grid * grid, patches.len())));
    }
    let p0 = &patches[0];
    if patches
        .iter()
        .any(|p| (p.height, p.width, p.channels) != (p0.height, p0.width, p0.channels))
    {
        return Err(Error::invalid("patches differ in shape"));
    }
    let (h, w) = (p0.height * grid, p0.width * grid);
    let mut data = vec![0.0; h * w * p0.channels];
    for (t, p) in patches.iter().enumerate() {
        let (ti, tj) = (t / grid, t % grid);
        for c in 0..p.channels {
            for i in 0..p.height {
                let dst = (c * h + ti * p.height + i) * w + tj * p.width;
                let src = (c * p.height + i) * p.width;
                data[dst..dst + p.width].copy_from_slice(&p.data[src..src + p.width]);
            }
        }
    }
    Image::new(h, w, p0.channels, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(h: usize, w: usize, c: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::new(h, w, c, (0..h * w * c).map(|_| rng.gen()).collect()).unwrap()
    }

    #[test]
    fn ppm_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.ppm");
        let bytes = [b"P6\n2 2\n255\n".as_slice(), &[0, 0, 0, 255, 255, 255, 0, 255, 0, 255, 0, 255]].concat();
        std::fs::write(&p, bytes).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!((img.height, img.width, img.channels), (2, 2, 3));
        assert_eq!(img.plane(0), &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(img.plane(1), &[0.0, 1.0, 1.0, 0.0]);
        assert!(img.data.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn roundtrip_quantization() {
        let dir = tempfile::tempdir().unwrap();
        for (c, name) in [(3, "x.png"), (1, "g.png"), (3, "x.ppm"), (1, "g.pgm")] {
            let img = random(7, 5, c, 11);
            let p = dir.path().join(name);
            save_image(&img, &p).unwrap();
            let back = load_image(&p).unwrap();
            assert_eq!((back.height, back.width, back.channels), (7, 5, c));
            let worst = img.data.iter().zip(&back.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(worst <= 1.0 / 510.0 + 1e-12, "{name}: {worst}");
        }
    }

    #[test]
    fn io_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_image(&dir.path().join("missing.png")), Err(Error::Io { .. })));
        let junk = dir.path().join("junk.png");
        std::fs::write(&junk, b"not an image").unwrap();
        assert!(load_image(&junk).is_err());
        let img = random(2, 2, 1, 0);
        assert!(save_image(&img, &dir.path().join("x.gif")).is_err());
    }

    #[test]
    fn grayscale_examples() {
        let white = Image::filled(2, 2, 3, 1.0).unwrap();
        assert!(to_grayscale(&white).unwrap().data.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let mut red = Image::filled(1, 1, 3, 0.0).unwrap();
        red.set(0, 0, 0, 1.0);
        assert!((to_grayscale(&red).unwrap().data[0] - 0.299).abs() < 1e-15);
        let gray = random(3, 3, 1, 2).to_rgb();
        let back = to_grayscale(&gray).unwrap();
        for (a, b) in back.data.iter().zip(gray.plane(0)) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(to_grayscale(&random(2, 2, 1, 0)).is_err());
    }

    #[test]
    fn crop_examples() {
        let img = random(64, 64, 3, 4);
        let four = crop_patches(&img, 2).unwrap();
        assert_eq!(four.len(), 4);
        assert!(four.iter().all(|p| (p.height, p.width) == (32, 32)));
        assert_eq!(four[1].at(2, 0, 0), img.at(2, 0, 32));
        assert_eq!(four[2].at(0, 5, 3), img.at(0, 37, 3));
        let sixteen = crop_patches(&img, 4).unwrap();
        assert_eq!(sixteen.len(), 16);
        assert!(sixteen.iter().all(|p| (p.height, p.width) == (16, 16)));
        assert!(crop_patches(&random(30, 32, 1, 0), 4).is_err());
    }

    #[test]
    fn resize_keeps_constants() {
        let img = Image::filled(8, 8, 3, 0.25).unwrap();
        let r = img.resized(4, 6).unwrap();
        assert_eq!((r.height, r.width, r.channels), (4, 6, 3));
        assert!(r.data.iter().all(|&v| (v - 0.25).abs() < 1e-6));
    }

    proptest! {
        #[test]
        fn stitch_inverts_crop(tiles in 1usize..5, ph in 1usize..6, pw in 1usize..6, gray in any::<bool>(), seed in any::<u64>()) {
            let c = if gray { 1 } else { 3 };
            let img = random(tiles * ph, tiles * pw, c, seed);
            let patches = crop_patches(&img, tiles).unwrap();
            prop_assert_eq!(stitch_patches(&patches, tiles).unwrap(), img);
        }
    }
}
