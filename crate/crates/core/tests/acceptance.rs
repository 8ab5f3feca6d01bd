//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs sequentially and prints measured values next to each verdict. The
//! process exits non-zero on a failed criterion only when
//! `BFNET_ACCEPTANCE_STRICT=1`; otherwise failures are reported and the run
//! still completes so that every criterion gets measured.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use bfnet_core::encoding::{decode, encode, relu, weight_matrix, EncodedTensor, Encoded4};
use bfnet_core::imaging::{
    compose_identity, crop_patches, distort_blur, identity_error, psnr_batch, run_restoration_task, stitch_patches,
    write_synthetic_corpus, Image, RestorationConfig, Task,
};
use bfnet_core::kernel_math::{cheb_points, DomainIndex, Side};
use bfnet_core::metrics::{epsilon_metrics, exact_matrix, EpsilonMetrics};
use bfnet_core::net::{materialize_matrix, param_count, Init, RandomInit};
use bfnet_core::parallel::{set_num_threads, with_threads};
use bfnet_core::reference::ButterflyPlan;
use bfnet_core::train::{backward, train_transform, TransformTraining};
use bfnet_core::{ButterflyNet2D, Direction, NetConfig, Signal2D};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Reference accuracy of the Fourier-initialized network at 64x64, L=6, r=6.
const TARGET_FORWARD: [f64; 3] = [1.72e-3, 1.84e-3, 1.12e-3];
const FORWARD_FACTOR: f64 = 2.0;
const TARGET_INVERSE_EPS2: f64 = 3.10e-3;
const INVERSE_FACTOR: f64 = 3.0;
const FORWARD_BUDGET: Duration = Duration::from_secs(10 * 60);
const TREND_R_FACTOR: f64 = 4.0;
const ORACLE_TOL: f64 = 1e-12;
const ORACLE_INPUTS: usize = 100;
const GRAD_H: f64 = 1e-5;
const GRAD_PARAMS: usize = 200;
const GRAD_TOL: f64 = 1e-5;
const TRAIN_RATIO: f64 = 2.0;
const TRAIN_BUDGET: Duration = Duration::from_secs(30 * 60);
const DENSE_RATIO_SPREAD: f64 = 2.0;
const RESTORE_GAP_DB: f64 = 3.0;
const RESTORE_BUDGET: Duration = Duration::from_secs(60 * 60);
const MAC_CHECKS: usize = 1000;
const MAC_TOL: f64 = 1e-12;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within_factor(got: f64, want: f64, f: f64) -> bool {
    got <= want * f && got >= want / f
}

fn fourier(n: usize, l: u32, r: usize, d: Direction) -> ButterflyNet2D {
    let mut net = ButterflyNet2D::build(NetConfig::square(n, l, r, d).expect("config")).expect("build");
    net.init_fourier().expect("fourier init");
    net
}

/// Errors of a freshly Fourier-initialized network; the network is dropped
/// before the dense matrices are compared.
fn fourier_eps(n: usize, l: u32, r: usize, d: Direction) -> EpsilonMetrics {
    let b = materialize_matrix(&fourier(n, l, r, d));
    epsilon_metrics(&b, &exact_matrix((n, n), (n, n), d)).expect("metrics")
}

fn fmt_eps(e: &EpsilonMetrics) -> String {
    format!("eps_1 {:.3e}, eps_2 {:.3e}, eps_inf {:.3e}", e.eps_1, e.eps_2, e.eps_inf)
}

struct Shared {
    forward_l6_r6: Option<EpsilonMetrics>,
}

fn c1_forward_accuracy(s: &mut Shared) -> Verdict {
    let t0 = Instant::now();
    let e = with_threads(1, || fourier_eps(64, 6, 6, Direction::Forward));
    let took = t0.elapsed();
    s.forward_l6_r6 = Some(e);
    let got = [e.eps_1, e.eps_2, e.eps_inf];
    let ok = got.iter().zip(TARGET_FORWARD).all(|(&g, w)| within_factor(g, w, FORWARD_FACTOR));
    verdict(
        ok && took <= FORWARD_BUDGET,
        format!(
            "{} vs targets {:.2e}/{:.2e}/{:.2e} (x{FORWARD_FACTOR}); {:.0?} single-threaded, budget {:?}",
            fmt_eps(&e),
            TARGET_FORWARD[0],
            TARGET_FORWARD[1],
            TARGET_FORWARD[2],
            took,
            FORWARD_BUDGET
        ),
    )
}

fn c2_trends(s: &mut Shared) -> Verdict {
    let l6r6 = s.forward_l6_r6.unwrap_or_else(|| fourier_eps(64, 6, 6, Direction::Forward)).eps_2;
    let r4 = fourier_eps(64, 6, 4, Direction::Forward).eps_2;
    let r5 = fourier_eps(64, 6, 5, Direction::Forward).eps_2;
    let l4 = fourier_eps(64, 4, 6, Direction::Forward).eps_2;
    let l5 = fourier_eps(64, 5, 6, Direction::Forward).eps_2;
    let (q45, q56) = (r4 / r5, r5 / l6r6);
    let by_r = q45 >= TREND_R_FACTOR && q56 >= TREND_R_FACTOR;
    let by_l = l6r6 < l5 && l5 < l4;
    verdict(
        by_r && by_l,
        format!(
            "L=6 eps_2 over r=4,5,6: {r4:.3e}, {r5:.3e}, {l6r6:.3e} (ratios {q45:.2}, {q56:.2}, need >= {TREND_R_FACTOR}); \
             r=6 eps_2 over L=4,5,6: {l4:.3e}, {l5:.3e}, {l6r6:.3e}"
        ),
    )
}

fn c3_inverse_accuracy(_: &mut Shared) -> Verdict {
    let e = fourier_eps(64, 6, 6, Direction::Inverse);
    verdict(
        within_factor(e.eps_2, TARGET_INVERSE_EPS2, INVERSE_FACTOR),
        format!("{} vs eps_2 target {TARGET_INVERSE_EPS2:.2e} (x{INVERSE_FACTOR})", fmt_eps(&e)),
    )
}

fn c4_oracle(_: &mut Shared) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (l, r) in [(4u32, 2usize), (5, 4), (6, 6)] {
        let n = 1usize << l;
        for d in [Direction::Forward, Direction::Inverse] {
            let plan = ButterflyPlan::new(l, r, (n, n), (n, n), d).expect("plan");
            let net = fourier(n, l, r, d);
            let mut w = 0.0f64;
            for _ in 0..ORACLE_INPUTS {
                let values = (0..n * n)
                    .map(|_| {
                        let im = if d == Direction::Inverse { rng.gen_range(-1.0..1.0) } else { 0.0 };
                        Complex64::new(rng.gen_range(-1.0..1.0), im)
                    })
                    .collect();
                let x = Signal2D::new(n, n, values).expect("signal");
                let a = net.apply(&x).expect("network");
                let b = plan.apply(&x).expect("butterfly");
                w = w.max(a.rel_l2(&b));
            }
            parts.push(format!("L={l} r={r} {d:?} {w:.1e}"));
            worst = worst.max(w);
        }
    }
    verdict(
        worst <= ORACLE_TOL,
        format!("max relative l2 gap over {ORACLE_INPUTS} inputs: {} (tol {ORACLE_TOL:.0e})", parts.join(", ")),
    )
}

fn c5_gradients(_: &mut Shared) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut net = fourier(8, 3, 2, Direction::Forward);
    for layer in &mut net.layers {
        layer.weights.iter_mut().for_each(|w| *w += rng.gen_range(-0.05..0.05));
        layer.bias.iter_mut().for_each(|b| *b += rng.gen_range(-0.05..0.05));
    }
    let xs: Vec<f64> = (0..64).map(|_| rng.gen()).collect();
    let x = EncodedTensor::from_real(8, 8, &xs).expect("input");
    let objective = |n: &ButterflyNet2D, u: &[f64]| {
        let cache = n.forward_cached(&x).expect("forward");
        let mask: Vec<bool> = cache.acts[1..].iter().flatten().map(|&v| v > 0.0).collect();
        let f: f64 = cache.acts.last().unwrap().iter().zip(u).map(|(a, b)| a * b).sum();
        (f, mask)
    };
    let cache = net.forward_cached(&x).expect("forward");
    let u: Vec<f64> = (0..cache.acts.last().unwrap().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let grads = backward(&net, &cache, &u).expect("backward");
    let (_, mask0) = objective(&net, &u);
    let (mut checked, mut kinks, mut worst) = (0usize, 0usize, 0.0f64);
    for _ in 0..GRAD_PARAMS {
        let l = rng.gen_range(0..net.layers.len());
        let bias = rng.gen_bool(0.2);
        let len = if bias { net.layers[l].bias.len() } else { net.layers[l].weights.len() };
        let k = rng.gen_range(0..len);
        let analytic = if bias { grads.layers[l].bias[k] } else { grads.layers[l].weights[k] };
        let eval = |d: f64| {
            let mut p = net.clone();
            let slot = if bias { &mut p.layers[l].bias[k] } else { &mut p.layers[l].weights[k] };
            *slot += d;
            objective(&p, &u)
        };
        let ((fp, mp), (fm, mm)) = (eval(GRAD_H), eval(-GRAD_H));
        if mp != mask0 || mm != mask0 {
            kinks += 1;
            continue;
        }
        let fd = (fp - fm) / (2.0 * GRAD_H);
        worst = worst.max((fd - analytic).abs() / analytic.abs().max(fd.abs()).max(1e-3));
        checked += 1;
    }
    verdict(
        worst <= GRAD_TOL && checked > 0,
        format!(
            "{checked} of {GRAD_PARAMS} parameters checked ({kinks} crossed a ReLU kink), max relative error {worst:.2e} (tol {GRAD_TOL:.0e})"
        ),
    )
}

fn c6_training(_: &mut Shared) -> Verdict {
    let config = NetConfig::square(16, 4, 2, Direction::Forward).expect("config");
    let f = exact_matrix((16, 16), (16, 16), Direction::Forward);
    let eps2 = |n: &ButterflyNet2D| epsilon_metrics(&materialize_matrix(n), &f).expect("metrics").eps_2;
    let opts = TransformTraining::default();
    let t0 = Instant::now();
    let run = |init: Init| {
        let mut net = ButterflyNet2D::build(config.clone()).expect("build");
        net.initialize(init, 1).expect("init");
        let before = eps2(&net);
        train_transform(&mut net, &opts).expect("training");
        (before, eps2(&net))
    };
    let (f0, f1) = run(Init::Fourier);
    let (k0, k1) = run(Init::Random(RandomInit::KaimingNormal));
    let took = t0.elapsed();
    let improved = f1 < f0;
    let ratio = k1 / f1;
    verdict(
        improved && ratio >= TRAIN_RATIO && took <= TRAIN_BUDGET,
        format!(
            "{} epochs, lr {:.0e}, batch {}: fourier eps_2 {f0:.3e} -> {f1:.3e}; kaiming_normal {k0:.3e} -> {k1:.3e}; \
             ratio {ratio:.2} (need >= {TRAIN_RATIO}); {took:.0?}",
            opts.epochs, opts.lr, opts.batch_size
        ),
    )
}

fn c7_param_counts(_: &mut Shared) -> Verdict {
    let mut exact = true;
    let mut ratios = Vec::new();
    let mut kernel_notes = Vec::new();
    for l in 3..=6u32 {
        let n = 1usize << l;
        for r in [2usize, 4, 6] {
            let p = param_count(&NetConfig::square(n, l, r, Direction::Forward).expect("config"));
            let last = p.layers.len() - 1;
            for x in &p.layers[..last] {
                exact &= x.weights == x.formula_weights && x.biases == x.formula_biases;
            }
            let k = &p.layers[last];
            if k.weights != k.formula_weights || k.biases != k.formula_biases {
                kernel_notes.push(format!("L={l} r={r}: {} vs {}", k.weights, k.formula_weights));
            }
            if r == 2 {
                ratios.push(p.dense_ratio() / (n * n) as f64);
            }
        }
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let kernel = if kernel_notes.is_empty() {
        "final layer agrees with its closed form".to_string()
    } else {
        format!("final layer differs: {}", kernel_notes.join("; "))
    };
    verdict(
        exact && hi / lo <= DENSE_RATIO_SPREAD,
        format!(
            "interpolation/recursion counts exact: {exact}; dense/sparse per input pixel over L=3..6: {} (spread {:.2}, need <= {DENSE_RATIO_SPREAD}); {kernel}",
            ratios.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", "),
            hi / lo
        ),
    )
}

fn c8_identity(_: &mut Shared) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x: Vec<f64> = (0..32 * 32).map(|_| rng.gen()).collect();
    let e2 = identity_error(&compose_identity(32, 5, 2).expect("compose"), &x).expect("apply");
    let e4 = identity_error(&compose_identity(32, 5, 4).expect("compose"), &x).expect("apply");
    verdict(
        e2.is_finite() && e4 < e2,
        format!("32x32, L=5: relative identity error r=2 {e2:.4e}, r=4 {e4:.4e}"),
    )
}

fn c9_restoration(_: &mut Shared) -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let m = write_synthetic_corpus(dir.path(), 64, 32, 4, 0).expect("corpus");
    let t0 = Instant::now();
    let inits = [
        Init::Fourier,
        Init::Random(RandomInit::KaimingNormal),
        Init::Random(RandomInit::KaimingUniform),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for task in [Task::Deblur, Task::Denoise] {
        let mut psnr = Vec::new();
        let mut baseline = 0.0;
        for init in inits {
            let cfg = RestorationConfig::new(task, init, 32);
            let out = run_restoration_task(&m, &cfg).expect("restoration");
            psnr.push(out.test_psnr);
            baseline = out.baseline_psnr;
        }
        let gap_n = psnr[0] - psnr[1];
        let gap_u = psnr[0] - psnr[2];
        let beats_baseline = psnr[0] > baseline;
        let task_ok = gap_n >= RESTORE_GAP_DB && gap_u >= RESTORE_GAP_DB && beats_baseline;
        ok &= task_ok;
        parts.push(format!(
            "{task}: fourier {:.2} dB, kaiming_normal {:.2} dB (gap {gap_n:.2}), kaiming_uniform {:.2} dB (gap {gap_u:.2}), \
             distorted {baseline:.2} dB, beats distorted: {beats_baseline}",
            psnr[0], psnr[1], psnr[2]
        ));
    }
    let took = t0.elapsed();
    verdict(
        ok && took <= RESTORE_BUDGET,
        format!("64 images at 32x32, 12 epochs, batch 20, r=2: {}; {took:.0?}", parts.join("; ")),
    )
}

fn c10_properties(_: &mut Shared) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let c = |rng: &mut ChaCha8Rng| Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let mut failures = Vec::new();

    let mut mac_worst = 0.0f64;
    for _ in 0..MAC_CHECKS {
        let terms = rng.gen_range(1..=16);
        let mut pre = [0.0; 4];
        let (mut want, mut scale) = (Complex64::new(0.0, 0.0), 0.0);
        for _ in 0..terms {
            let (a, x) = (c(&mut rng), c(&mut rng));
            let m = weight_matrix(a);
            let e = encode(x);
            for (o, row) in pre.iter_mut().zip(&m) {
                *o += row.iter().zip(&e.0).map(|(p, q)| p * q).sum::<f64>();
            }
            want += a * x;
            scale += a.norm() * x.norm();
        }
        let got = decode(Encoded4(pre.map(relu)));
        mac_worst = mac_worst.max((got - want).norm() / scale.max(1.0));
    }
    if mac_worst > MAC_TOL {
        failures.push(format!("encoding MAC error {mac_worst:.1e}"));
    }

    for r in [2, 4, 6] {
        let g = cheb_points(r).expect("grid");
        for k in 0..r {
            for p in 0..r {
                let want = if k == p { 1.0 } else { 0.0 };
                if (g.lagrange(k, g.point(p)) - want).abs() > 1e-12 {
                    failures.push(format!("Lagrange cardinality r={r} k={k} p={p}"));
                }
            }
        }
        for _ in 0..50 {
            let x = rng.gen_range(-0.5..0.5);
            let s: f64 = (0..r).map(|k| g.lagrange(k, x)).sum();
            if (s - 1.0).abs() > 1e-12 {
                failures.push(format!("partition of unity r={r} at {x}"));
            }
        }
    }

    for side in [Side::A, Side::B] {
        let extent = if side == Side::A { (16.0, 16.0) } else { (1.0, 1.0) };
        for depth in 0..4u32 {
            let per = 1usize << depth;
            let mut area = 0.0;
            for ix in 0..per {
                for iy in 0..per {
                    let d = DomainIndex::new(side, depth, ix, iy).expect("index");
                    let b = d.to_box(extent);
                    area += b.side.0 * b.side.1;
                    let kids: f64 = d.children().iter().map(|k| k.to_box(extent)).map(|kb| kb.side.0 * kb.side.1).sum();
                    let inside = d.children().iter().all(|k| k.within(&d) && b.contains(k.to_box(extent).center()));
                    if (kids - b.side.0 * b.side.1).abs() > 1e-12 || !inside {
                        failures.push(format!("children of {d:?} do not tile it"));
                    }
                }
            }
            if (area - extent.0 * extent.1).abs() > 1e-9 {
                failures.push(format!("depth {depth} boxes cover area {area}"));
            }
            for _ in 0..20 {
                let p = (rng.gen_range(0.0..extent.0), rng.gen_range(0.0..extent.1));
                let hits = (0..per * per)
                    .filter(|&q| DomainIndex::new(side, depth, q / per, q % per).unwrap().to_box(extent).contains(p))
                    .count();
                if hits != 1 {
                    failures.push(format!("point {p:?} lies in {hits} boxes at depth {depth}"));
                }
            }
        }
    }

    for k in 0..20u64 {
        let size = 32;
        let data: Vec<f64> = (0..3 * size * size).map(|_| rng.gen()).collect();
        let img = Image::new(size, size, 3, data).expect("image");
        for t in [Task::Inpaint, Task::Deblur, Task::Denoise, Task::Watermark] {
            let a = t.distort(&img, k).expect("distort");
            let b = t.distort(&img, k).expect("distort");
            if a != b || !a.data.iter().all(|v| (0.0..=1.0).contains(v)) {
                failures.push(format!("{t} not deterministic or out of range"));
            }
        }
        let (lo, hi) = img.data.iter().fold((1.0f64, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        if !distort_blur(&img).data.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12) {
            failures.push("blur leaves the input range".into());
        }
        for grid in [1, 2, 4, 8] {
            let back = stitch_patches(&crop_patches(&img, grid).expect("crop"), grid).expect("stitch");
            if back != img {
                failures.push(format!("crop/stitch grid {grid} not inverse"));
            }
        }
    }

    let t = Image::filled(16, 16, 3, 0.5).expect("image");
    let p = Image::filled(16, 16, 3, 0.6).expect("image");
    let db = psnr_batch(&[p], &[t]).expect("psnr");
    if (db - 20.0).abs() > 1e-9 {
        failures.push(format!("uniform 0.1 offset gives {db} dB"));
    }

    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{MAC_CHECKS} MAC checks (max error {mac_worst:.1e}), Lagrange cardinality and partition of unity, \
                 box tiling, distortion determinism and range, crop/stitch inverse, 0.1 offset = {db:.6} dB"
            )
        } else {
            failures.join("; ")
        },
    )
}

type Criterion = fn(&mut Shared) -> Verdict;

fn main() {
    let strict = std::env::var("BFNET_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    set_num_threads(threads);

    let criteria: [(&str, Criterion); 10] = [
        ("forward accuracy, 64x64 L=6 r=6", c1_forward_accuracy),
        ("forward error trends in r and L", c2_trends),
        ("inverse accuracy, 64x64 L=6 r=6", c3_inverse_accuracy),
        ("network equals butterfly reference", c4_oracle),
        ("gradient check", c5_gradients),
        ("training improves Fourier start", c6_training),
        ("parameter counts", c7_param_counts),
        ("identity composition", c8_identity),
        ("restoration PSNR gap", c9_restoration),
        ("property suites", c10_properties),
    ];

    println!("acceptance: {} criteria, worker threads: {threads}", criteria.len());
    let mut shared = Shared { forward_l6_r6: None };
    let mut passed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(|| run(&mut shared))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        passed += v.pass as usize;
        println!(
            "criterion {:>2} {} {name}: {} [{:.1?}]",
            k + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t0.elapsed()
        );
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if strict && passed != criteria.len() {
        std::process::exit(1);
    }
}
