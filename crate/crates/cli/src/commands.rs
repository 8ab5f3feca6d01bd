use std::path::{Path, PathBuf};
use std::time::Instant;

use bfnet_core::imaging::{
    run_restoration_task, save_image, write_synthetic_corpus, DatasetManifest, Image, RestorationConfig, Split,
};
use bfnet_core::metrics::{epsilon_metrics, exact_matrix, CMatrix, EpsilonMetrics};
use bfnet_core::net::{materialize_matrix, param_count, Init};
use bfnet_core::train::{train_transform, TransformTraining};
use bfnet_core::{ButterflyNet2D, Direction, NetConfig};
use log::info;

use crate::args::{BenchArgs, CountArgs, ImageArgs, OutputArgs, TrainArgs};
use crate::error::{CliError, CliResult};
use crate::plot::{line_plot_svg, Series};
use crate::report::{sci, Format, Table};

/// Largest grid side whose dense matrix is built.
pub const MAX_MATERIALIZE: usize = 64;

fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::Forward => "forward",
        Direction::Inverse => "inverse",
    }
}

fn grid_name(n: usize) -> String {
    format!("{n}x{n}")
}

fn ensure_materializable(size: usize) -> CliResult<()> {
    if size > MAX_MATERIALIZE {
        return Err(CliError::Resource(format!(
            "a {size}x{size} transform needs a {n}x{n} dense matrix; sizes above {MAX_MATERIALIZE}x{MAX_MATERIALIZE} are not materialized",
            n = size * size
        )));
    }
    Ok(())
}

fn prepare_out(out: &OutputArgs) -> CliResult<PathBuf> {
    std::fs::create_dir_all(&out.out).map_err(|e| CliError::io(&out.out, e))?;
    Ok(out.out.clone())
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn eps_cells(e: &EpsilonMetrics) -> [String; 3] {
    [sci(e.eps_1), sci(e.eps_2), sci(e.eps_inf)]
}

/// Errors of a network against the exact transform matrix `f`.
pub fn network_epsilon(net: &ButterflyNet2D, f: &CMatrix) -> CliResult<EpsilonMetrics> {
    Ok(epsilon_metrics(&materialize_matrix(net), f)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub layers: u32,
    pub r: usize,
    pub eps: EpsilonMetrics,
}

/// Rows of metrics, one column per `(L, r)`.
fn bench_pivot(rows: &[BenchRow]) -> Table {
    let mut t = Table::new(std::iter::once("metric".to_string()).chain(rows.iter().map(|b| format!("L={} r={}", b.layers, b.r))));
    let metrics: [(&str, fn(&EpsilonMetrics) -> f64); 3] =
        [("eps_1", |e| e.eps_1), ("eps_2", |e| e.eps_2), ("eps_inf", |e| e.eps_inf)];
    for (name, get) in metrics {
        t.push(std::iter::once(name.to_string()).chain(rows.iter().map(|b| sci(get(&b.eps)))).collect());
    }
    t
}

pub fn approx_bench(args: &BenchArgs) -> CliResult<(Table, Vec<BenchRow>)> {
    ensure_materializable(args.size)?;
    if args.layers.is_empty() || args.cheb.is_empty() {
        return Err(CliError::Invalid("need at least one layer count and one Chebyshev order".into()));
    }
    let dir: Direction = args.direction.into();
    let n = args.size;
    let configs = args
        .layers
        .iter()
        .flat_map(|&l| args.cheb.iter().map(move |&r| (l, r)))
        .map(|(l, r)| NetConfig::square(n, l, r, dir))
        .collect::<bfnet_core::Result<Vec<_>>>()?;
    let f = exact_matrix((n, n), (n, n), dir);
    let mut rows = Vec::new();
    for c in configs {
        let t0 = Instant::now();
        let mut net = ButterflyNet2D::build(c.clone())?;
        net.init_fourier()?;
        let eps = network_epsilon(&net, &f)?;
        drop(net);
        info!(
            "{} N={n} L={} r={}: eps_2 {:.3e} ({:.1?})",
            direction_name(dir),
            c.layers,
            c.r,
            eps.eps_2,
            t0.elapsed()
        );
        rows.push(BenchRow {
            layers: c.layers,
            r: c.r,
            eps,
        });
    }
    let mut table = Table::new(["direction", "N", "L", "r", "eps_1", "eps_2", "eps_inf"]);
    for b in &rows {
        let [e1, e2, ei] = eps_cells(&b.eps);
        table.push(vec![direction_name(dir).into(), grid_name(n), b.layers.to_string(), b.r.to_string(), e1, e2, ei]);
    }
    let out = prepare_out(&args.output)?;
    let stem = format!("approx_{}", direction_name(dir));
    let shown = match args.output.format {
        Format::Csv => table.clone(),
        Format::Markdown => bench_pivot(&rows),
    };
    shown.save(&out, &stem, args.output.format)?;
    Ok((shown, rows))
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub init: Init,
    pub before: EpsilonMetrics,
    pub after: EpsilonMetrics,
    pub epoch_losses: Vec<f64>,
}

pub fn train_transform_cmd(args: &TrainArgs) -> CliResult<(Table, Vec<TrainRun>)> {
    ensure_materializable(args.size)?;
    if args.init.is_empty() {
        return Err(CliError::Invalid("need at least one initialization".into()));
    }
    let dir: Direction = args.direction.into();
    let config = NetConfig::square(args.size, args.layers, args.cheb, dir)?;
    let opts = TransformTraining {
        epochs: args.epochs,
        batch_size: args.batch,
        lr: args.lr,
        seed: args.seed,
        pool_size: args.pool,
        plateau: args.plateau,
        train_biases: args.train_biases,
    };
    let out = prepare_out(&args.output)?;
    let f = exact_matrix(config.input_size(), config.output_size(), dir);
    let mut runs = Vec::new();
    for &init in &args.init {
        let mut net = ButterflyNet2D::build(config.clone())?;
        net.initialize(init, args.seed)?;
        let before = network_epsilon(&net, &f)?;
        let t0 = Instant::now();
        let history = train_transform(&mut net, &opts)?;
        let after = network_epsilon(&net, &f)?;
        info!(
            "{init}: eps_2 {:.3e} -> {:.3e} after {} epochs ({:.1?})",
            before.eps_2,
            after.eps_2,
            args.epochs,
            t0.elapsed()
        );
        history.save_csv(&out.join(format!("loss_{init}.csv")))?;
        net.save(out.join(format!("checkpoint_{init}.bfn")))?;
        runs.push(TrainRun {
            init,
            before,
            after,
            epoch_losses: history.epoch_means(opts.steps_per_epoch()),
        });
    }

    let mut table = Table::new(["init", "direction", "N", "L", "r", "epochs", "stage", "eps_1", "eps_2", "eps_inf"]);
    for run in &runs {
        for (stage, e) in [("before", &run.before), ("after", &run.after)] {
            let [e1, e2, ei] = eps_cells(e);
            table.push(vec![
                run.init.to_string(),
                direction_name(dir).into(),
                grid_name(args.size),
                args.layers.to_string(),
                args.cheb.to_string(),
                args.epochs.to_string(),
                stage.into(),
                e1,
                e2,
                ei,
            ]);
        }
    }
    table.save(&out, "train_eps", args.output.format)?;
    let series: Vec<Series> = runs.iter().map(|r| Series::new(r.init.name(), &r.epoch_losses)).collect();
    let title = format!("{} N={} L={} r={}: mean loss per epoch", direction_name(dir), args.size, args.layers, args.cheb);
    write_text(&out.join("loss.svg"), &line_plot_svg(&title, "epoch", &series))?;
    Ok((table, runs))
}

pub fn param_count_cmd(args: &CountArgs) -> CliResult<(Table, Table)> {
    let dir: Direction = args.direction.into();
    let mut layers = Table::new([
        "N",
        "L",
        "r",
        "layer",
        "weights",
        "formula_weights",
        "biases",
        "formula_biases",
        "dense_weights",
    ]);
    let mut totals = Table::new([
        "N",
        "L",
        "r",
        "total",
        "formula_total",
        "dense_total",
        "formula_dense_total",
        "dense_over_sparse",
        "dense_over_sparse_per_pixel",
    ]);
    for &l in &args.layers {
        for &r in &args.cheb {
            let c = NetConfig::square(args.size, l, r, dir)?;
            let p = param_count(&c);
            let (n, ls, rs) = (grid_name(args.size), l.to_string(), r.to_string());
            for x in &p.layers {
                layers.push(vec![
                    n.clone(),
                    ls.clone(),
                    rs.clone(),
                    x.name.clone(),
                    x.weights.to_string(),
                    x.formula_weights.to_string(),
                    x.biases.to_string(),
                    x.formula_biases.to_string(),
                    x.dense_weights.to_string(),
                ]);
            }
            totals.push(vec![
                n,
                ls,
                rs,
                p.total.to_string(),
                p.formula_total.to_string(),
                p.dense_total.to_string(),
                p.formula_dense_total.to_string(),
                format!("{:.4}", p.dense_ratio()),
                format!("{:.4}", p.dense_ratio() / (args.size * args.size) as f64),
            ]);
        }
    }
    let out = prepare_out(&args.output)?;
    layers.save(&out, "param_layers", args.output.format)?;
    totals.save(&out, "param_totals", args.output.format)?;
    Ok((layers, totals))
}

/// Clean, distorted and restored images side by side with white gutters.
pub fn triptych(images: &[Image; 3]) -> CliResult<Image> {
    const GAP: usize = 2;
    let (h, w, ch) = (images[0].height, images[0].width, images[0].channels);
    if images.iter().any(|i| (i.height, i.width, i.channels) != (h, w, ch)) {
        return Err(CliError::Invalid("triptych images differ in shape".into()));
    }
    let tw = 3 * w + 2 * GAP;
    let mut out = Image::filled(h, tw, ch, 1.0)?;
    for (k, img) in images.iter().enumerate() {
        for c in 0..ch {
            for i in 0..h {
                for j in 0..w {
                    out.set(c, i, k * (w + GAP) + j, img.at(c, i, j));
                }
            }
        }
    }
    Ok(out)
}

fn open_dataset(args: &ImageArgs, out: &Path) -> CliResult<DatasetManifest> {
    match &args.dataset {
        Some(p) => {
            let mut m = DatasetManifest::open(p, args.size)?;
            m.size = args.size;
            Ok(m)
        }
        None => {
            if args.synthetic < 2 {
                return Err(CliError::Invalid("the synthetic corpus needs at least 2 images".into()));
            }
            Ok(write_synthetic_corpus(&out.join("corpus"), args.synthetic, args.size, 4, args.seed)?)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImageRun {
    pub task: bfnet_core::imaging::Task,
    pub init: Init,
    pub test_psnr: f64,
    pub baseline_psnr: f64,
}

pub fn image_task(args: &ImageArgs) -> CliResult<(Table, Vec<ImageRun>)> {
    if args.task.is_empty() || args.init.is_empty() {
        return Err(CliError::Invalid("need at least one task and one initialization".into()));
    }
    let out = prepare_out(&args.output)?;
    let dataset = open_dataset(args, &out)?;
    if dataset.count(Split::Train) == 0 || dataset.count(Split::Test) == 0 {
        return Err(CliError::Invalid("the dataset needs both train and test images".into()));
    }
    let patch = args.patch.unwrap_or(args.size);
    let mut table = Table::new([
        "task",
        "init",
        "size",
        "patch",
        "L",
        "r",
        "epochs",
        "batch",
        "psnr_restored",
        "psnr_distorted",
    ]);
    let mut runs = Vec::new();
    for &task in &args.task {
        let mut series = Vec::new();
        for &init in &args.init {
            let cfg = RestorationConfig {
                layers: args.layers,
                r: args.cheb,
                epochs: args.epochs,
                batch_size: args.batch,
                lr: args.lr,
                seed: args.seed,
                ..RestorationConfig::new(task, init, patch)
            };
            let layers = cfg.layer_count()?;
            let t0 = Instant::now();
            let outcome = run_restoration_task(&dataset, &cfg)?;
            info!(
                "{task} {init}: PSNR {:.2} dB (distorted {:.2} dB, {:.1?})",
                outcome.test_psnr,
                outcome.baseline_psnr,
                t0.elapsed()
            );
            let stem = format!("{task}_{init}");
            outcome.history.save_csv(&out.join(format!("loss_{stem}.csv")))?;
            if let Some(sample) = &outcome.sample {
                save_image(&triptych(sample)?, &out.join(format!("sample_{stem}.png")))?;
            }
            outcome.net.first.save(out.join(format!("checkpoint_{stem}_first.bfn")))?;
            outcome.net.second.save(out.join(format!("checkpoint_{stem}_second.bfn")))?;
            let losses: Vec<f64> = outcome.history.records.iter().map(|r| r.loss).collect();
            series.push(Series::new(init.name(), &losses));
            table.push(vec![
                task.to_string(),
                init.to_string(),
                args.size.to_string(),
                patch.to_string(),
                layers.to_string(),
                args.cheb.to_string(),
                args.epochs.to_string(),
                args.batch.to_string(),
                format!("{:.2}", outcome.test_psnr),
                format!("{:.2}", outcome.baseline_psnr),
            ]);
            runs.push(ImageRun {
                task,
                init,
                test_psnr: outcome.test_psnr,
                baseline_psnr: outcome.baseline_psnr,
            });
        }
        let title = format!("{task}: batch loss per update");
        write_text(&out.join(format!("loss_{task}.svg")), &line_plot_svg(&title, "update", &series))?;
    }
    table.save(&out, "psnr", args.output.format)?;
    Ok((table, runs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_large_materialization() {
        assert_eq!(ensure_materializable(128).unwrap_err().exit_code(), 3);
        assert!(ensure_materializable(64).is_ok());
    }

    #[test]
    fn triptych_layout() {
        let a = Image::filled(4, 5, 3, 0.0).unwrap();
        let b = Image::filled(4, 5, 3, 0.5).unwrap();
        let c = Image::filled(4, 5, 3, 0.25).unwrap();
        let t = triptych(&[a, b, c]).unwrap();
        assert_eq!((t.height, t.width, t.channels), (4, 19, 3));
        assert_eq!(t.at(1, 2, 4), 0.0);
        assert_eq!(t.at(1, 2, 5), 1.0);
        assert_eq!(t.at(1, 2, 7), 0.5);
        assert_eq!(t.at(2, 3, 18), 0.25);
        let odd = Image::filled(4, 4, 3, 0.0).unwrap();
        let again = Image::filled(4, 5, 3, 0.0).unwrap();
        assert!(triptych(&[odd, again.clone(), again]).is_err());
    }

    #[test]
    fn pivot_has_one_column_per_config() {
        let e = EpsilonMetrics {
            eps_1: 1.0,
            eps_2: 2.0,
            eps_inf: 3.0,
        };
        let rows = vec![
            BenchRow { layers: 4, r: 6, eps: e },
            BenchRow { layers: 5, r: 6, eps: e },
        ];
        let t = bench_pivot(&rows);
        assert_eq!(t.headers, vec!["metric", "L=4 r=6", "L=5 r=6"]);
        assert_eq!(t.rows[1], vec!["eps_2", "2.000e0", "2.000e0"]);
    }
}
