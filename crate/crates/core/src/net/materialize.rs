//! Dense matrix of a network: column `p` is the decoded output for the
//! `p`-th unit input (row-major input index).
//!
//! Running one forward pass per column is wasteful: under a unit input only
//! one position per layer differs from the zero-input background, and the
//! background is the same at every position of a layer. Each column is
//! therefore propagated as a single active vector per layer,
//! `act' = relu(C[o] + W[o] act)`, where `o` is the kernel offset of the
//! active position inside its parent and `C[o]` collects the bias and the
//! background contributions of the other offsets. Columns sharing an offset
//! are batched into one matrix product. The result equals the plain forward
//! pass up to summation order, for any weights and biases.

use num_complex::Complex64;

use super::{decode_raw, ButterflyNet2D, SparseConvLayer};
use crate::encoding::relu_in_place;
use crate::linalg::gemm;
use crate::metrics::CMatrix;
use crate::parallel::num_threads;

const BATCH: usize = 32;

/// `b + sum over offsets != skip of W[offset] * bg` (all groups), where `bg`
/// is one position's input vector.
fn context(layer: &SparseConvLayer, bg: &[f64], skip: Option<(usize, usize)>) -> Vec<f64> {
    let (ci, co) = (layer.in_per_group, layer.out_per_group);
    let mut out = layer.bias.clone();
    for g in 0..layer.groups {
        for dx in 0..layer.kernel.0 {
            for dy in 0..layer.kernel.1 {
                if skip == Some((dx, dy)) {
                    continue;
                }
                gemm(co, ci, 1, layer.block(g, dx, dy), ci, 1, &bg[g * ci..], 1, 1, 1.0, &mut out[g * co..], 1, 1);
            }
        }
    }
    out
}

struct Plan {
    /// `ctx[layer][dx * kw + dy]`
    ctx: Vec<Vec<Vec<f64>>>,
}

impl Plan {
    fn new(net: &ButterflyNet2D) -> Self {
        let mut bg = vec![0.0; 4];
        let mut ctx = Vec::with_capacity(net.layers.len());
        for layer in &net.layers {
            let (kh, kw) = layer.kernel;
            let mut per = Vec::with_capacity(kh * kw);
            for dx in 0..kh {
                for dy in 0..kw {
                    per.push(context(layer, &bg, Some((dx, dy))));
                }
            }
            let mut next = context(layer, &bg, None);
            relu_in_place(&mut next);
            bg = next;
            ctx.push(per);
        }
        Plan { ctx }
    }
}

/// Propagates a batch of unit inputs at `positions` and returns the raw
/// output activations, one `Vec` per column.
fn run_batch(net: &ButterflyNet2D, plan: &Plan, positions: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let n = positions.len();
    let mut pos = positions.to_vec();
    let mut width = 4;
    let mut act = vec![0.0; n * width];
    for c in 0..n {
        act[c * width] = 1.0;
    }
    let mut xbuf = Vec::new();
    let mut ybuf = Vec::new();
    for (idx, layer) in net.layers.iter().enumerate() {
        let (kh, kw) = layer.kernel;
        let (ci, co) = (layer.in_per_group, layer.out_per_group);
        let cout = layer.out_channels();
        let mut next = vec![0.0; n * cout];
        for off in 0..kh * kw {
            let (dx, dy) = (off / kw, off % kw);
            let cols: Vec<usize> = (0..n).filter(|&c| pos[c].0 % kh == dx && pos[c].1 % kw == dy).collect();
            if cols.is_empty() {
                continue;
            }
            let nb = cols.len();
            xbuf.clear();
            for &c in &cols {
                xbuf.extend_from_slice(&act[c * width..(c + 1) * width]);
            }
            ybuf.clear();
            for _ in 0..nb {
                ybuf.extend_from_slice(&plan.ctx[idx][off]);
            }
            for g in 0..layer.groups {
                gemm(
                    co,
                    ci,
                    nb,
                    layer.block(g, dx, dy),
                    ci,
                    1,
                    &xbuf[g * ci..],
                    1,
                    width,
                    1.0,
                    &mut ybuf[g * co..],
                    1,
                    cout,
                );
            }
            relu_in_place(&mut ybuf);
            for (k, &c) in cols.iter().enumerate() {
                next[c * cout..(c + 1) * cout].copy_from_slice(&ybuf[k * cout..(k + 1) * cout]);
            }
        }
        for p in pos.iter_mut() {
            *p = (p.0 / kh, p.1 / kw);
        }
        act = next;
        width = cout;
    }
    act.chunks(width).map(|c| c.to_vec()).collect()
}

/// Input positions ordered so that consecutive columns share ancestors.
fn column_order(net: &ButterflyNet2D) -> Vec<(usize, usize)> {
    let c = &net.config;
    let side = 1usize << (c.layers - 1);
    let mut order = Vec::with_capacity(side * side * c.omega.0 * c.omega.1);
    for code in 0..side * side {
        let (bx, by) = super::demorton(code, c.layers - 1);
        for sx in 0..c.omega.0 {
            for sy in 0..c.omega.1 {
                order.push((bx * c.omega.0 + sx, by * c.omega.1 + sy));
            }
        }
    }
    order
}

/// Dense `(Mx My) x (nx ny)` matrix of the network acting on real unit inputs.
pub fn materialize_matrix(net: &ButterflyNet2D) -> CMatrix {
    let (nx, ny) = net.config.input_size();
    let (mx, my) = net.config.output_size();
    let plan = Plan::new(net);
    let order = column_order(net);
    let batches: Vec<&[(usize, usize)]> = order.chunks(BATCH).collect();
    let threads = num_threads().clamp(1, batches.len().max(1));
    let mut m = CMatrix::zeros(mx * my, nx * ny);
    let write = |m: &mut CMatrix, batch: &[(usize, usize)], raws: Vec<Vec<f64>>| {
        for (&(i, j), raw) in batch.iter().zip(raws) {
            let col: Vec<Complex64> = decode_raw(&net.config, &raw);
            m.set_column(i * ny + j, &col);
        }
    };
    if threads == 1 {
        for batch in batches {
            let raws = run_batch(net, &plan, batch);
            write(&mut m, batch, raws);
        }
    } else {
        let (tx, rx) = std::sync::mpsc::sync_channel(threads);
        std::thread::scope(|s| {
            for t in 0..threads {
                let tx = tx.clone();
                let (plan, batches) = (&plan, &batches);
                s.spawn(move || {
                    for b in (t..batches.len()).step_by(threads) {
                        tx.send((b, run_batch(net, plan, batches[b]))).unwrap();
                    }
                });
            }
            drop(tx);
            for (b, raws) in rx {
                write(&mut m, batches[b], raws);
            }
        });
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::EncodedTensor;
    use crate::net::{NetConfig, RandomInit};
    use crate::reference::Direction;
    use rand::{Rng, SeedableRng};

    fn brute(net: &ButterflyNet2D) -> CMatrix {
        let (nx, ny) = net.config.input_size();
        let (mx, my) = net.config.output_size();
        let mut m = CMatrix::zeros(mx * my, nx * ny);
        for p in 0..nx * ny {
            let mut x = vec![0.0; nx * ny];
            x[p] = 1.0;
            let y = net.forward(&EncodedTensor::from_real(nx, ny, &x).unwrap()).unwrap();
            m.set_column(p, &y.decode_channel(0));
        }
        m
    }

    #[test]
    fn matches_forward_on_nonlinear_net() {
        let c = NetConfig::for_sizes(3, 2, (12, 8), (8, 16), Direction::Forward).unwrap();
        let mut net = ButterflyNet2D::build(c).unwrap();
        net.init_random(RandomInit::KaimingNormal, 5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for layer in &mut net.layers {
            for b in &mut layer.bias {
                *b = rng.gen_range(-0.2..0.2);
            }
        }
        let got = materialize_matrix(&net);
        let want = brute(&net);
        let scale = want.norm_fro();
        assert!(scale > 0.0);
        let diff = got.sub(&want).unwrap().norm_fro();
        assert!(diff <= 1e-12 * scale, "{diff}");
    }

    #[test]
    fn zero_net_gives_zero_matrix() {
        let c = NetConfig::square(8, 3, 2, Direction::Inverse).unwrap();
        let net = ButterflyNet2D::build(c).unwrap();
        assert!(materialize_matrix(&net).data.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn threaded_equals_serial() {
        let c = NetConfig::square(16, 4, 2, Direction::Forward).unwrap();
        let mut net = ButterflyNet2D::build(c).unwrap();
        net.init_fourier().unwrap();
        let serial = crate::parallel::with_threads(1, || materialize_matrix(&net));
        let threaded = crate::parallel::with_threads(3, || materialize_matrix(&net));
        assert_eq!(serial, threaded);
    }
}
