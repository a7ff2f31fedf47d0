//! `colorlearn`: train per-category matching weights, colorize, evaluate, ablate.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use colorlearn::Config;
use error::CliError;

#[derive(Parser)]
#[command(name = "colorlearn", version, about = "Exemplar-based colorization with learned feature weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every command. Flags override the config file.
#[derive(Args)]
struct Common {
    /// TOML config file; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0: one per core).
    #[arg(long)]
    threads: Option<usize>,
    /// Target superpixel size in pixels.
    #[arg(long)]
    superpixel_size: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a model from a manifest of (ground truth, reference) pairs.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-category table as CSV.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Colorize one grayscale image from a color reference.
    Colorize {
        #[arg(long)]
        gray: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the transferred seeds splatted over superpixels.
        #[arg(long)]
        dump_seeds: bool,
        /// Write superpixel boundaries over the gray input.
        #[arg(long)]
        dump_superpixels: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Error curve, per-pair seed metrics and the random-weight baseline.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Win ratio of the learned weights against each single-weight perturbation.
    Ablate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<Config, CliError> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p).map_err(error::stage("config"))?,
        None => Config::default(),
    };
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.threads {
        cfg.threads = v;
    }
    if let Some(v) = common.superpixel_size {
        cfg.superpixel_size = v;
    }
    cfg.validate().map_err(error::stage("config"))?;
    Ok(cfg)
}

fn run_in_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::runtime("thread-pool", e.to_string()))?;
    pool.install(f)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { manifest, out, report, common } => {
            let cfg = load_config(&common)?;
            let trained = run_in_pool(cfg.threads, || commands::train(&manifest, &out, report.as_deref(), &cfg))?;
            log::info!("wrote {} with {} clusters", out.display(), trained.model.clusters.len());
        }
        Command::Colorize {
            gray,
            reference,
            model,
            out,
            dump_seeds,
            dump_superpixels,
            common,
        } => {
            let mut cfg = load_config(&common)?;
            cfg.dump_seeds |= dump_seeds;
            cfg.dump_superpixels |= dump_superpixels;
            let args = commands::ColorizeArgs {
                gray: &gray,
                reference: &reference,
                model: &model,
                out: &out,
            };
            let cluster = run_in_pool(cfg.threads, || commands::colorize(&args, &cfg))?;
            log::info!("wrote {} (cluster {cluster})", out.display());
        }
        Command::Evaluate { manifest, model, out_dir, common } => {
            let cfg = load_config(&common)?;
            let s = run_in_pool(cfg.threads, || commands::evaluate(&manifest, &model, &out_dir, &cfg))?;
            println!("evaluated {} pairs, {} failed; results in {}", s.evaluated, s.failed, out_dir.display());
        }
        Command::Ablate { manifest, model, out, common } => {
            let cfg = load_config(&common)?;
            let n = run_in_pool(cfg.threads, || commands::ablate(&manifest, &model, &out, &cfg))?;
            println!("ablation over {n} pairs written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
