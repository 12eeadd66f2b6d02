mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::UsageError;

/// Cardiac MRI phantom generation, preprocessing, scar augmentation,
/// dataset assembly and evaluation.
#[derive(Parser, Debug)]
#[command(name = "cmr-forge", version)]
struct Cli {
    /// JSON file with option values; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config_file: Option<PathBuf>,

    /// Worker threads (default: $CMR_FORGE_THREADS, else all logical CPUs).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic cohort with labels and scar masks.
    Phantom(commands::PhantomArgs),
    /// Bias-correct, histogram-match, resample and normalize a cohort.
    Preprocess(commands::PreprocessArgs),
    /// Scar rotations and contour landmarks for labeled LGE volumes.
    Augment(commands::AugmentArgs),
    /// Slice a cohort into the manifest of one training configuration.
    BuildDataset(commands::BuildDatasetArgs),
    /// Overlap and surface metrics between prediction and ground truth.
    Evaluate(commands::EvaluateArgs),
    /// Describe a NIfTI file, cohort or dataset manifest.
    Inspect(commands::InspectArgs),
}

fn threads(flag: Option<usize>, file: Option<usize>) -> anyhow::Result<usize> {
    let n = match flag.or(file) {
        Some(n) => n,
        None => match std::env::var("CMR_FORGE_THREADS") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| config::usage(format!("CMR_FORGE_THREADS='{s}' is not a thread count")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        return Err(config::usage("--threads must be at least 1"));
    }
    Ok(n)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = cli.config_file.as_deref().map(config::load_config_file).transpose()?;
    let n = threads(cli.threads, file.as_ref().and_then(|f| f.threads))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    let file = file.as_ref();
    match cli.command {
        Command::Phantom(a) => commands::phantom(config::merge(file, &a)?, n),
        Command::Preprocess(a) => commands::preprocess(config::merge(file, &a)?, n),
        Command::Augment(a) => commands::augment(config::merge(file, &a)?, n),
        Command::BuildDataset(a) => commands::build_dataset(config::merge(file, &a)?, n),
        Command::Evaluate(a) => commands::evaluate(config::merge(file, &a)?, n),
        Command::Inspect(a) => commands::inspect(config::merge(file, &a)?, n),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
