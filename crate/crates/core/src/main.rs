use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use densefp::cli::{cmd_enroll, cmd_eval, cmd_extract, cmd_search, cmd_synth, Outcome, RunConfig};
use densefp::Result;

/// Dense fixed-length fingerprint descriptors: synthesis, extraction,
/// enrollment, search and evaluation.
#[derive(Parser, Debug)]
#[command(name = "densefp", version)]
struct Cli {
    /// Line-based `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic prints, ground-truth poses and a manifest.
    Synth,
    /// Extract descriptor files from the images in `input_dir`.
    Extract,
    /// Build the gallery store from descriptor files.
    Enroll,
    /// Search query descriptors against the gallery store.
    Search,
    /// Score a protocol and write det.csv, cmc.csv and summary.csv.
    Eval,
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::defaults(Path::new(".")),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| densefp::Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim(), Path::new("."))?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = config(cli)?;
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| densefp::Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Synth => cmd_synth(&cfg),
        Command::Extract => cmd_extract(&cfg),
        Command::Enroll => cmd_enroll(&cfg),
        Command::Search => cmd_search(&cfg),
        Command::Eval => cmd_eval(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for (item, e) in &outcome.failures {
                eprintln!("error: {item}: {e}");
            }
            if outcome.ok() {
                ExitCode::SUCCESS
            } else {
                eprintln!("{} item(s) failed", outcome.failures.len());
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
