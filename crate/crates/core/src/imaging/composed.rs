use num_complex::Complex64;

use super::image::{crop_patches, stitch_patches, Image};
use crate::error::{Error, Result};
use crate::net::{decode_raw, output_grid_index, raw_output_grad, Activations, ButterflyNet2D, Init, NetConfig};
use crate::parallel::map_chunks;
use crate::reference::Direction;
use crate::train::{backward_into, backward_with_input, rel_l2_with_grad, Adam, GradientBuffers};

const CHUNK: usize = 4;

/// A forward-direction network followed by an inverse-direction one. The
/// first network's raw output channels are laid out on its frequency grid
/// and fed to the second unchanged; the prediction is the real part of the
/// second network's decoded output.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedNet {
    pub first: ButterflyNet2D,
    pub second: ButterflyNet2D,
}

#[derive(Debug, Clone)]
pub struct ComposedCache {
    pub first: Activations,
    pub second: Activations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposedGrads {
    pub first: GradientBuffers,
    pub second: GradientBuffers,
}

impl ComposedGrads {
    pub fn zeros_like(net: &ComposedNet) -> Self {
        ComposedGrads {
            first: GradientBuffers::zeros_like(&net.first),
            second: GradientBuffers::zeros_like(&net.second),
        }
    }

    pub fn add(&mut self, other: &ComposedGrads) {
        self.first.add(&other.first);
        self.second.add(&other.second);
    }
}

impl ComposedNet {
    /// Zero networks for `size x size` real inputs.
    pub fn build(size: usize, layers: u32, r: usize) -> Result<Self> {
        let first = ButterflyNet2D::build(NetConfig::square(size, layers, r, Direction::Forward)?)?;
        let second = ButterflyNet2D::build(NetConfig::square(size, layers, r, Direction::Inverse)?)?;
        Ok(ComposedNet { first, second })
    }

    pub fn size(&self) -> usize {
        self.first.config.input_size().0
    }

    /// Fourier initialization of both halves, or independent random draws.
    /// At Fourier init the halves are rescaled to unitary normalization
    /// (`1/N` each instead of `1` and `1/N^2`); the composition is unchanged.
    pub fn initialize(&mut self, init: Init, seed: u64) -> Result<()> {
        self.first.initialize(init, seed)?;
        self.second.initialize(init, seed.wrapping_add(1))?;
        if init == Init::Fourier {
            let (nx, ny) = self.first.config.input_size();
            let root = ((nx * ny) as f64).sqrt();
            self.first.rescale(1.0 / root)?;
            self.second.rescale(root)?;
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.first.num_params() + self.second.num_params()
    }

    fn second_input(&self, first_out: &[f64]) -> Vec<f64> {
        let c = &self.first.config;
        let mut x = vec![0.0; first_out.len()];
        for ch in 0..first_out.len() / 4 {
            let q = output_grid_index(c, ch);
            x[4 * q..4 * q + 4].copy_from_slice(&first_out[4 * ch..4 * ch + 4]);
        }
        x
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        let (nx, ny) = self.first.config.input_size();
        if x.len() != nx * ny {
            return Err(Error::invalid(format!("expected {} pixels, got {}", nx * ny, x.len())));
        }
        Ok(())
    }

    /// Forward pass on a row-major real grid, keeping both caches.
    pub fn forward_cached(&self, x: &[f64]) -> Result<(Vec<f64>, ComposedCache)> {
        self.check_len(x)?;
        let enc: Vec<f64> = x.iter().flat_map(|&v| [v.max(0.0), 0.0, (-v).max(0.0), 0.0]).collect();
        let first = self.first.forward_pm(enc);
        let second = self.second.forward_pm(self.second_input(first.acts.last().unwrap()));
        let out = decode_raw(&self.second.config, second.acts.last().unwrap())
            .iter()
            .map(|z| z.re)
            .collect();
        Ok((out, ComposedCache { first, second }))
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(x)?.0)
    }

    /// Accumulates the gradient of `<upstream, output>`.
    pub fn backward_into(&self, cache: &ComposedCache, upstream: &[f64], grads: &mut ComposedGrads) -> Result<()> {
        let g: Vec<Complex64> = upstream.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let raw2 = raw_output_grad(&self.second.config, &g);
        let gx2 = backward_with_input(&self.second, &cache.second, &raw2, &mut grads.second)?;
        let c = &self.first.config;
        let mut raw1 = vec![0.0; gx2.len()];
        for ch in 0..raw1.len() / 4 {
            let q = output_grid_index(c, ch);
            raw1[4 * ch..4 * ch + 4].copy_from_slice(&gx2[4 * q..4 * q + 4]);
        }
        backward_into(&self.first, &cache.first, &raw1, &mut grads.first)
    }

    /// Summed relative-l2 loss and gradients over a batch of real grids.
    pub fn batch_gradient(&self, inputs: &[&[f64]], targets: &[&[f64]]) -> Result<(f64, ComposedGrads)> {
        if inputs.len() != targets.len() {
            return Err(Error::invalid("batch sizes differ"));
        }
        let parts = map_chunks(inputs.len(), CHUNK, |range| -> Result<(f64, ComposedGrads)> {
            let mut grads = ComposedGrads::zeros_like(self);
            let mut loss = 0.0;
            for k in range {
                let (out, cache) = self.forward_cached(inputs[k])?;
                let pred: Vec<Complex64> = out.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                let target: Vec<Complex64> = targets[k].iter().map(|&v| Complex64::new(v, 0.0)).collect();
                let (l, g) = rel_l2_with_grad(&pred, &target)?;
                loss += l;
                let up: Vec<f64> = g.iter().map(|z| z.re).collect();
                self.backward_into(&cache, &up, &mut grads)?;
            }
            Ok((loss, grads))
        });
        let mut total = ComposedGrads::zeros_like(self);
        let mut loss = 0.0;
        for part in parts {
            let (l, g) = part?;
            loss += l;
            total.add(&g);
        }
        Ok((loss, total))
    }

    /// Restores every channel of `img` independently, patch by patch, and
    /// clamps the result to `[0, 1]`.
    pub fn apply_image(&self, img: &Image) -> Result<Image> {
        let s = self.size();
        if img.height != img.width || img.height % s != 0 {
            return Err(Error::invalid(format!(
                "image of {}x{} does not tile into {s}x{s} patches",
                img.height, img.width
            )));
        }
        let grid = img.height / s;
        let mut planes = Vec::with_capacity(img.channels);
        for c in 0..img.channels {
            let patches = crop_patches(&img.channel(c), grid)?;
            let restored = map_chunks(patches.len(), 1, |r| -> Result<Image> {
                let p = &patches[r.start];
                let y: Vec<f64> = self.apply(&p.data)?.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
                Image::new(s, s, 1, y)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            planes.push(stitch_patches(&restored, grid)?);
        }
        Image::from_planes(&planes)
    }
}

/// Fourier-initialized composition approximating the identity on
/// `size x size` grids.
pub fn compose_identity(size: usize, layers: u32, r: usize) -> Result<ComposedNet> {
    let mut net = ComposedNet::build(size, layers, r)?;
    net.initialize(Init::Fourier, 0)?;
    Ok(net)
}

/// One Adam step on each half.
pub struct ComposedAdam {
    first: Adam,
    second: Adam,
}

impl ComposedAdam {
    pub fn new(net: &ComposedNet, lr: f64) -> Result<Self> {
        Ok(ComposedAdam {
            first: Adam::new(&net.first, lr)?,
            second: Adam::new(&net.second, lr)?,
        })
    }

    pub fn lr(&self) -> f64 {
        self.first.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.first.lr = lr;
        self.second.lr = lr;
    }

    pub fn update(&mut self, net: &mut ComposedNet, grads: &ComposedGrads) {
        self.first.update(&mut net.first, &grads.first);
        self.second.update(&mut net.second, &grads.second);
    }
}

/// `||net(x) - x|| / ||x||` on one grid.
pub fn identity_error(net: &ComposedNet, x: &[f64]) -> Result<f64> {
    let y = net.apply(x)?;
    let num: f64 = y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = x.iter().map(|v| v * v).sum();
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::RandomInit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen()).collect()
    }

    #[test]
    fn identity_at_init() {
        let net = compose_identity(16, 4, 4).unwrap();
        let x = random(256, 1);
        let e = identity_error(&net, &x).unwrap();
        assert!(e < 0.06, "{e}");
        assert!(net.apply(&vec![0.0; 256]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn error_falls_with_r() {
        let x = random(256, 2);
        let e: Vec<f64> = (2..5)
            .map(|r| identity_error(&compose_identity(16, 4, r).unwrap(), &x).unwrap())
            .collect();
        assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
    }

    #[test]
    fn gradient_matches_differences() {
        let mut net = ComposedNet::build(8, 3, 2).unwrap();
        net.initialize(Init::Random(RandomInit::KaimingNormal), 3).unwrap();
        let x = random(64, 4);
        let t = random(64, 5);
        let (_, g) = net.batch_gradient(&[&x], &[&t]).unwrap();
        let loss = |n: &ComposedNet| n.batch_gradient(&[&x], &[&t]).unwrap().0;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut checked = 0;
        for _ in 0..40 {
            let second = rng.gen_bool(0.5);
            let (net_half, g_half) = if second { (&net.second, &g.second) } else { (&net.first, &g.first) };
            let l = rng.gen_range(0..net_half.layers.len());
            let k = rng.gen_range(0..net_half.layers[l].weights.len());
            let an = g_half.layers[l].weights[k];
            let h = 1e-6;
            let mut p = net.clone();
            let mut m = net.clone();
            let (hp, hm) = if second { (&mut p.second, &mut m.second) } else { (&mut p.first, &mut m.first) };
            hp.layers[l].weights[k] += h;
            hm.layers[l].weights[k] -= h;
            let fd = (loss(&p) - loss(&m)) / (2.0 * h);
            if (fd - an).abs() > 1e-5 * an.abs().max(1e-2) {
                // A ReLU kink between the two evaluations; skip.
                continue;
            }
            checked += 1;
        }
        assert!(checked >= 36, "{checked}");
    }

    #[test]
    fn per_channel_matches_gray() {
        let net = compose_identity(8, 3, 2).unwrap();
        let g = Image::new(16, 16, 1, random(256, 7)).unwrap();
        let gray = net.apply_image(&g).unwrap();
        let rgb = net.apply_image(&g.to_rgb()).unwrap();
        for c in 0..3 {
            assert_eq!(rgb.plane(c), gray.plane(0));
        }
        assert!(net.apply_image(&Image::filled(12, 12, 1, 0.5).unwrap()).is_err());
    }
}
