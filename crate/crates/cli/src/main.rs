//! `fishtank`: rear artificial fish, run the choice and self-segregation
//! tests on their checkpoints, and turn the results into reports and plots.

mod evaluate;
mod output;
mod plot;
mod replay;
mod report;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fishtank::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "fishtank", version, about = "Rear pixels-to-actions fish with PPO and curiosity, then test their social preferences")]
struct Cli {
    /// Worker threads; defaults to all cores. FISHTANK_THREADS takes precedence.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML with [ppo], [curiosity], [world], [protocol]); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `protocol.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Rear both pigment groups and write checkpoints and training metrics.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from the latest checkpoints in the output directory.
        #[arg(long)]
        resume: bool,
        /// Print the resolved configuration and exit.
        #[arg(long)]
        dry_run: bool,
    },
    /// Two-alternative choice test of each checkpointed fish.
    #[command(name = "test-2afc")]
    TestAfc {
        #[command(flatten)]
        common: Common,
        /// Checkpoint files, or directories whose final checkpoints are used.
        #[arg(required = true)]
        checkpoints: Vec<PathBuf>,
        /// Overrides `protocol.afc_trials`.
        #[arg(long)]
        trials: Option<usize>,
        /// Write the focal fish's first N frames of trial 0 as PNG.
        #[arg(long, value_name = "N")]
        dump_frames: Option<usize>,
    },
    /// Self-segregation test of all checkpointed fish together.
    #[command(name = "test-seg")]
    TestSeg {
        #[command(flatten)]
        common: Common,
        #[arg(required = true)]
        checkpoints: Vec<PathBuf>,
        /// Overrides `protocol.seg_trials`.
        #[arg(long)]
        trials: Option<usize>,
        /// Write every fish's first N frames of trial 0 as PNG.
        #[arg(long, value_name = "N")]
        dump_frames: Option<usize>,
    },
    /// Draw an overhead image per step of a trajectory CSV.
    Replay {
        trajectory: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild reports and plots from the trial CSVs in a test output directory.
    Report {
        dir: PathBuf,
    },
}

/// Resolves the configuration and applies command-line overrides.
fn load_config(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.protocol.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use fishtank::Error;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Checkpoint(_) => 3,
                Error::Config(_) | Error::Csv(_) | Error::Data(_) => 2,
                _ => 1,
            };
        }
        if cause.downcast_ref::<csv::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn configure_threads(jobs: Option<usize>) -> anyhow::Result<()> {
    let from_env = std::env::var("FISHTANK_THREADS").ok().map(|v| v.parse::<usize>()).transpose();
    let from_env = from_env.map_err(|e| fishtank::Error::Config(format!("FISHTANK_THREADS: {e}")))?;
    if let Some(n) = from_env.or(jobs) {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads(cli.jobs)?;
    match cli.command {
        Command::Train { common, resume, dry_run } => {
            let cfg = load_config(&common)?;
            if dry_run {
                print!("{}", cfg.to_toml());
                return Ok(());
            }
            train::train(&cfg, &common.out, resume)
        }
        Command::TestAfc { common, checkpoints, trials, dump_frames } => {
            let mut cfg = load_config(&common)?;
            if let Some(t) = trials {
                cfg.protocol.afc_trials = t;
            }
            cfg.validate()?;
            evaluate::test_2afc(&cfg, &checkpoints, &common.out, dump_frames)
        }
        Command::TestSeg { common, checkpoints, trials, dump_frames } => {
            let mut cfg = load_config(&common)?;
            if let Some(t) = trials {
                cfg.protocol.seg_trials = t;
            }
            cfg.validate()?;
            evaluate::test_segregation(&cfg, &checkpoints, &common.out, dump_frames)
        }
        Command::Replay { trajectory, out } => replay::replay(&trajectory, &out),
        Command::Report { dir } => report::report(&dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
