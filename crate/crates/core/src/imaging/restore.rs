use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::composed::{ComposedAdam, ComposedNet};
use super::dataset::{DatasetManifest, Split};
use super::distort::Task;
use super::image::{crop_patches, to_grayscale, Image};
use super::psnr::psnr_batch;
use crate::error::{Error, Result};
use crate::net::Init;
use crate::train::{LossHistory, Plateau, StepRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct RestorationConfig {
    pub task: Task,
    pub init: Init,
    /// Network input size; images are cut into patches of this size.
    pub patch: usize,
    /// Layers per network; `None` uses `log2(patch)`.
    pub layers: Option<u32>,
    pub r: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl RestorationConfig {
    pub fn new(task: Task, init: Init, patch: usize) -> Self {
        RestorationConfig {
            task,
            init,
            patch,
            layers: None,
            r: 2,
            epochs: 12,
            batch_size: 20,
            lr: 2e-3,
            seed: 0,
        }
    }

    pub fn layer_count(&self) -> Result<u32> {
        match self.layers {
            Some(l) => Ok(l),
            None if self.patch.is_power_of_two() && self.patch >= 2 => Ok(self.patch.trailing_zeros()),
            None => Err(Error::invalid(format!("patch size {} is not a power of two", self.patch))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RestorationOutcome {
    pub net: ComposedNet,
    pub history: LossHistory,
    /// Mean PSNR of restored test images against the clean ones.
    pub test_psnr: f64,
    /// Mean PSNR of the distorted test images against the clean ones.
    pub baseline_psnr: f64,
    /// First test image: clean, distorted, restored.
    pub sample: Option<[Image; 3]>,
}

fn distortion_seed(base: u64, split: Split, k: usize) -> u64 {
    let tag = match split {
        Split::Train => 0x7a11,
        Split::Test => 0x7e57,
    };
    base.wrapping_mul(0x9e37_79b9).wrapping_add(tag << 32).wrapping_add(k as u64)
}

/// Grayscale (distorted patch, clean patch) training pairs.
pub fn training_pairs(images: &[Image], cfg: &RestorationConfig) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (k, img) in images.iter().enumerate() {
        let gray = if img.channels == 3 { to_grayscale(img)? } else { img.clone() };
        let distorted = cfg.task.distort(&gray, distortion_seed(cfg.seed, Split::Train, k))?;
        if gray.height != gray.width || gray.height % cfg.patch != 0 {
            return Err(Error::invalid(format!(
                "{}x{} image does not tile into {}x{} patches",
                gray.height, gray.width, cfg.patch, cfg.patch
            )));
        }
        let grid = gray.height / cfg.patch;
        for (d, c) in crop_patches(&distorted, grid)?.into_iter().zip(crop_patches(&gray, grid)?) {
            // All-black targets have no relative error.
            if c.data.iter().any(|&v| v != 0.0) {
                xs.push(d.data);
                ys.push(c.data);
            }
        }
    }
    Ok((xs, ys))
}

/// Trains a composed network to undo `cfg.task` on grayscale training
/// patches, then restores each color channel of the test images.
pub fn run_restoration_task(dataset: &DatasetManifest, cfg: &RestorationConfig) -> Result<RestorationOutcome> {
    let train = dataset.load_split(Split::Train)?;
    let test = dataset.load_split(Split::Test)?;
    run_restoration_on(&train, &test, cfg)
}

pub fn run_restoration_on(train: &[Image], test: &[Image], cfg: &RestorationConfig) -> Result<RestorationOutcome> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid("restoration needs non-empty train and test sets"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let mut net = ComposedNet::build(cfg.patch, cfg.layer_count()?, cfg.r)?;
    net.initialize(cfg.init, cfg.seed)?;

    let (xs, ys) = training_pairs(train, cfg)?;
    if xs.is_empty() {
        return Err(Error::invalid("no usable training patches"));
    }
    let mut adam = ComposedAdam::new(&net, cfg.lr)?;
    let mut plateau = Plateau::default();
    let mut history = LossHistory::default();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0b5e_55ed);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&k| xs[k].as_slice()).collect();
            let by: Vec<&[f64]> = batch.iter().map(|&k| ys[k].as_slice()).collect();
            let (loss, grads) = net.batch_gradient(&bx, &by)?;
            let lr = adam.lr();
            adam.update(&mut net, &grads);
            history.records.push(StepRecord {
                step: history.records.len(),
                loss,
                lr,
            });
            adam.set_lr(plateau.step(loss, lr));
        }
    }

    let mut restored = Vec::with_capacity(test.len());
    let mut distorted = Vec::with_capacity(test.len());
    for (k, img) in test.iter().enumerate() {
        let d = cfg.task.distort(img, distortion_seed(cfg.seed, Split::Test, k))?;
        restored.push(net.apply_image(&d)?);
        distorted.push(d);
    }
    let test_psnr = psnr_batch(&restored, test)?;
    let baseline_psnr = psnr_batch(&distorted, test)?;
    let sample = Some([test[0].clone(), distorted[0].clone(), restored[0].clone()]);
    Ok(RestorationOutcome {
        net,
        history,
        test_psnr,
        baseline_psnr,
        sample,
    })
}
