use std::path::PathBuf;

use bfnet_core::imaging::Task;
use bfnet_core::net::Init;
use bfnet_core::Direction;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::report::Format;

#[derive(Debug, Parser)]
#[command(name = "bfnet", version, about = "Butterfly networks for the 2D DFT: accuracy benchmarks, training and image restoration")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "BFNET_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Relative matrix-norm errors of Fourier-initialized networks.
    ApproxBench(BenchArgs),
    /// Train networks to fit the DFT and compare errors before and after.
    TrainTransform(TrainArgs),
    /// Per-layer and total parameter counts against closed forms.
    ParamCount(CountArgs),
    /// Train composed networks for image restoration and report PSNR.
    ImageTask(ImageArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Inverse,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Forward => Direction::Forward,
            DirectionArg::Inverse => Direction::Inverse,
        }
    }
}

fn parse_init(s: &str) -> Result<Init, String> {
    s.parse().map_err(|e: bfnet_core::Error| e.to_string())
}

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse().map_err(|e: bfnet_core::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Directory for reports and artifacts.
    #[arg(long, default_value = "bfnet_out")]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Grid side N (the transform is N x N -> N x N).
    #[arg(long, default_value_t = 64)]
    pub size: usize,

    #[arg(long, value_delimiter = ',', default_value = "4,5,6")]
    pub layers: Vec<u32>,

    /// Chebyshev points per dimension.
    #[arg(long, value_delimiter = ',', default_value = "6")]
    pub cheb: Vec<usize>,

    #[arg(long, value_enum, default_value_t = DirectionArg::Forward)]
    pub direction: DirectionArg,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 16)]
    pub size: usize,

    #[arg(long, default_value_t = 4)]
    pub layers: u32,

    #[arg(long, default_value_t = 2)]
    pub cheb: usize,

    #[arg(long, value_enum, default_value_t = DirectionArg::Forward)]
    pub direction: DirectionArg,

    /// Initializations to train, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_init, default_value = "fourier")]
    pub init: Vec<Init>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 200)]
    pub epochs: usize,

    #[arg(long, default_value_t = 20)]
    pub batch: usize,

    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,

    /// Training inputs drawn once and reshuffled every epoch.
    #[arg(long, default_value_t = 400)]
    pub pool: usize,

    /// Decay the learning rate when the loss stops improving.
    #[arg(long)]
    pub plateau: bool,

    /// Update biases as well as weights.
    #[arg(long)]
    pub train_biases: bool,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CountArgs {
    #[arg(long, default_value_t = 64)]
    pub size: usize,

    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6")]
    pub layers: Vec<u32>,

    #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
    pub cheb: Vec<usize>,

    #[arg(long, value_enum, default_value_t = DirectionArg::Forward)]
    pub direction: DirectionArg,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ImageArgs {
    /// Image directory or manifest file; omitted means a generated
    /// synthetic corpus under `<out>/corpus`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,

    /// Number of synthetic images when no dataset is given.
    #[arg(long, default_value_t = 64)]
    pub synthetic: usize,

    /// Images are resized to `size x size`.
    #[arg(long, default_value_t = 32)]
    pub size: usize,

    /// Network patch size (default: the image size).
    #[arg(long)]
    pub patch: Option<usize>,

    /// Layers per network (default: log2 of the patch size).
    #[arg(long)]
    pub layers: Option<u32>,

    #[arg(long, default_value_t = 2)]
    pub cheb: usize,

    #[arg(long, value_delimiter = ',', value_parser = parse_task, default_value = "deblur")]
    pub task: Vec<Task>,

    #[arg(long, value_delimiter = ',', value_parser = parse_init, default_value = "fourier,kaiming_normal,kaiming_uniform")]
    pub init: Vec<Init>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 12)]
    pub epochs: usize,

    #[arg(long, default_value_t = 20)]
    pub batch: usize,

    #[arg(long, default_value_t = 2e-3)]
    pub lr: f64,

    #[command(flatten)]
    pub output: OutputArgs,
}
