//! Command-line front end: accuracy benchmarks, transform training,
//! parameter counts and image restoration, written as CSV/Markdown reports
//! plus SVG loss plots, PNG samples and network checkpoints.

pub mod args;
pub mod commands;
pub mod error;
pub mod plot;
pub mod report;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

/// Runs one parsed command and returns the table to print.
pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::ApproxBench(a) => Ok(commands::approx_bench(a)?.0.render(a.output.format)),
        Command::TrainTransform(a) => Ok(commands::train_transform_cmd(a)?.0.render(a.output.format)),
        Command::ParamCount(a) => Ok(commands::param_count_cmd(a)?.1.render(a.output.format)),
        Command::ImageTask(a) => Ok(commands::image_task(a)?.0.render(a.output.format)),
    }
}
