use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adam::Adam;
use super::backward::{backward_into, GradientBuffers};
use super::loss::rel_l2_with_grad;
use super::schedule::Plateau;
use crate::error::{Error, Result};
use crate::net::{decode_raw, encode_input, raw_output_grad, ButterflyNet2D, InputKind};
use crate::parallel::map_chunks;
use crate::reference::{exact_transform, Signal2D};

/// Samples per gradient chunk; fixed so the summation order never depends
/// on the worker count.
const CHUNK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossHistory {
    pub records: Vec<StepRecord>,
}

impl LossHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Mean loss of each consecutive group of `steps_per_epoch` records.
    pub fn epoch_means(&self, steps_per_epoch: usize) -> Vec<f64> {
        self.records
            .chunks(steps_per_epoch.max(1))
            .map(|c| c.iter().map(|r| r.loss).sum::<f64>() / c.len() as f64)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,loss,lr")?;
        for r in &self.records {
            writeln!(w, "{},{:e},{:e}", r.step, r.loss, r.lr)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }
}

/// Sums the loss and parameter gradients of a batch of (encoded input,
/// decoded target) pairs.
pub fn batch_gradient(
    net: &ButterflyNet2D,
    inputs: &[&[f64]],
    targets: &[&[Complex64]],
) -> Result<(f64, GradientBuffers)> {
    if inputs.len() != targets.len() {
        return Err(Error::invalid("batch sizes differ"));
    }
    let parts = map_chunks(inputs.len(), CHUNK, |range| -> Result<(f64, GradientBuffers)> {
        let mut grads = GradientBuffers::zeros_like(net);
        let mut loss = 0.0;
        for k in range {
            let cache = net.forward_pm(inputs[k].to_vec());
            let pred = decode_raw(&net.config, cache.acts.last().unwrap());
            let (l, g) = rel_l2_with_grad(&pred, targets[k])?;
            loss += l;
            backward_into(net, &cache, &raw_output_grad(&net.config, &g), &mut grads)?;
        }
        Ok((loss, grads))
    });
    let mut total = GradientBuffers::zeros_like(net);
    let mut loss = 0.0;
    for part in parts {
        let (l, g) = part?;
        loss += l;
        total.add(&g);
    }
    Ok((loss, total))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformTraining {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Training samples per epoch.
    pub pool_size: usize,
    /// Apply plateau decay to the learning rate after every update.
    pub plateau: bool,
    /// Update biases too. Off by default: with zero biases the network stays
    /// positively homogeneous, so its basis-vector matrix describes how it
    /// acts on inputs of any scale.
    pub train_biases: bool,
}

impl Default for TransformTraining {
    fn default() -> Self {
        TransformTraining {
            epochs: 200,
            batch_size: 20,
            lr: 1e-3,
            seed: 0,
            pool_size: 400,
            plateau: false,
            train_biases: false,
        }
    }
}

impl TransformTraining {
    pub fn steps_per_epoch(&self) -> usize {
        self.pool_size.div_ceil(self.batch_size.max(1))
    }
}

/// Random inputs of the network's kind with their exact transforms.
pub fn transform_pool(net: &ButterflyNet2D, n: usize, seed: u64) -> (Vec<Signal2D>, Vec<Signal2D>) {
    let c = &net.config;
    let (nx, ny) = c.input_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let values: Vec<Complex64> = (0..nx * ny)
            .map(|_| match c.input_kind {
                InputKind::Real => Complex64::new(rng.gen(), 0.0),
                InputKind::Complex => Complex64::new(rng.gen(), rng.gen()),
            })
            .collect();
        let x = Signal2D { nx, ny, values };
        ys.push(exact_transform(&x, c.output_size(), c.direction));
        xs.push(x);
    }
    (xs, ys)
}

/// Fits `net` to the exact transform of its configured direction with Adam
/// on a pool of uniform random inputs, shuffled every epoch. Returns the
/// batch loss of every update.
pub fn train_transform(net: &mut ButterflyNet2D, opts: &TransformTraining) -> Result<LossHistory> {
    if opts.batch_size == 0 || opts.pool_size == 0 {
        return Err(Error::invalid("batch size and pool size must be positive"));
    }
    let mut adam = Adam::new(net, opts.lr)?;
    let mut history = LossHistory::default();
    if opts.epochs == 0 {
        return Ok(history);
    }
    let (xs, ys) = transform_pool(net, opts.pool_size, opts.seed);
    let inputs: Vec<Vec<f64>> = xs.iter().map(|x| encode_input(&x.values)).collect();
    let mut order: Vec<usize> = (0..opts.pool_size).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_0f_0a7a);
    let mut plateau = Plateau::default();
    for _ in 0..opts.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(opts.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&k| inputs[k].as_slice()).collect();
            let by: Vec<&[Complex64]> = batch.iter().map(|&k| ys[k].values.as_slice()).collect();
            let (loss, mut grads) = batch_gradient(net, &bx, &by)?;
            if !opts.train_biases {
                grads.layers.iter_mut().for_each(|g| g.bias.iter_mut().for_each(|b| *b = 0.0));
            }
            let lr = adam.lr;
            adam.update(net, &grads);
            history.records.push(StepRecord {
                step: history.records.len(),
                loss,
                lr,
            });
            if opts.plateau {
                adam.lr = plateau.step(loss, adam.lr);
            }
        }
    }
    Ok(history)
}
