use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use fcpipe_cli::config::PipelineConfig;
use fcpipe_cli::{cmd_compare, cmd_features, cmd_generate, cmd_pfi, cmd_search, cmd_train};

#[derive(Parser)]
#[command(name = "fcpipe", version, about = "Functional-connectivity classification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every pipeline stage. Precedence: flag > config file >
/// built-in default.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// JSON config file with a single `pipeline` object.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every randomized stage derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for this run.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads for search and PFI (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct GenerateArgs {
    /// Atlas granularity (number of regions).
    #[arg(long)]
    regions: Option<usize>,
    #[arg(long)]
    n_control: Option<usize>,
    #[arg(long)]
    n_case: Option<usize>,
    #[arg(long)]
    timepoints: Option<usize>,
    #[arg(long)]
    noise_scale: Option<f64>,
    /// Planted effect `i:j:delta`; repeatable. Overrides the config list.
    #[arg(long = "effect", value_parser = parse_effect)]
    effects: Vec<fcpipe_cli::EffectConfig>,
}

#[derive(Args, Debug, Default)]
struct SearchArgs {
    #[arg(long)]
    n_trials: Option<usize>,
    #[arg(long)]
    k_folds: Option<usize>,
    #[arg(long)]
    quantile: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct PfiArgs {
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Brodmann table CSV (defaults to the bundled table).
    #[arg(long)]
    brodmann: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize an atlas and a cohort with optional planted effects.
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        args: GenerateArgs,
    },
    /// Embed the cohort into tangent-space connectivity features.
    Features {
        #[command(flatten)]
        common: CommonArgs,
        /// Held-out test fraction.
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Randomized architecture search with cross-validated scoring.
    Search {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        args: SearchArgs,
    },
    /// Retrain the best configuration and evaluate on the held-out test set.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Permutation feature importance with Brodmann labeling.
    Pfi {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        args: PfiArgs,
    },
    /// Overlap report across two or more importance tables.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// importance.csv files, one per granularity (at least 2).
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn parse_effect(raw: &str) -> Result<fcpipe_cli::EffectConfig, String> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected i:j:delta, got `{raw}`"));
    }
    Ok(fcpipe_cli::EffectConfig {
        i: parts[0].parse().map_err(|e| format!("i: {e}"))?,
        j: parts[1].parse().map_err(|e| format!("j: {e}"))?,
        delta: parts[2].parse().map_err(|e| format!("delta: {e}"))?,
    })
}

fn resolve_config(common: &CommonArgs) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out_dir) = &common.out_dir {
        cfg.out_dir = out_dir.clone();
    }
    if let Some(workers) = common.workers {
        cfg.workers = workers;
    }
    Ok(cfg)
}

fn init_thread_pool(workers: usize) {
    if workers > 0 {
        // Ignore the error if a pool already exists (e.g. under tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { common, args } => {
            let mut cfg = resolve_config(&common)?;
            if let Some(v) = args.regions {
                cfg.regions = v;
            }
            if let Some(v) = args.n_control {
                cfg.n_control = v;
            }
            if let Some(v) = args.n_case {
                cfg.n_case = v;
            }
            if let Some(v) = args.timepoints {
                cfg.timepoints = v;
            }
            if let Some(v) = args.noise_scale {
                cfg.noise_scale = v;
            }
            if !args.effects.is_empty() {
                cfg.effects = args.effects;
            }
            init_thread_pool(cfg.workers);
            cmd_generate(&cfg)
        }
        Command::Features { common, test_fraction } => {
            let mut cfg = resolve_config(&common)?;
            if let Some(v) = test_fraction {
                cfg.test_fraction = v;
            }
            init_thread_pool(cfg.workers);
            cmd_features(&cfg)
        }
        Command::Search { common, args } => {
            let mut cfg = resolve_config(&common)?;
            if let Some(v) = args.n_trials {
                cfg.n_trials = v;
            }
            if let Some(v) = args.k_folds {
                cfg.k_folds = v;
            }
            if let Some(v) = args.quantile {
                cfg.quantile = v;
            }
            if let Some(v) = args.max_epochs {
                cfg.max_epochs = v;
            }
            init_thread_pool(cfg.workers);
            cmd_search(&cfg)
        }
        Command::Train { common } => {
            let cfg = resolve_config(&common)?;
            init_thread_pool(cfg.workers);
            cmd_train(&cfg)
        }
        Command::Pfi { common, args } => {
            let mut cfg = resolve_config(&common)?;
            if let Some(v) = args.repeats {
                cfg.pfi_repeats = v;
            }
            if let Some(v) = args.tau {
                cfg.tau = v;
            }
            if let Some(v) = args.top_k {
                cfg.top_k = v;
            }
            if args.brodmann.is_some() {
                cfg.brodmann = args.brodmann;
            }
            init_thread_pool(cfg.workers);
            cmd_pfi(&cfg)
        }
        Command::Compare { common, inputs } => {
            let cfg = resolve_config(&common)?;
            cmd_compare(&cfg, &inputs)
        }
    }
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
