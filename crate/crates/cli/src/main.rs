use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use topocl::{ErrorKind, Result, RunConfig};
use topocl_cli::*;

#[derive(Parser)]
#[command(name = "topocl", version, about = "Topology-aware contrastive learning for time series")]
struct Cli {
    /// JSON run configuration; missing keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Diagram cache file.
    #[arg(long, global = true)]
    ph_cache: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute and cache persistence diagrams for every instance.
    PhDump,
    /// Train and write a checkpoint plus the loss curve.
    Train,
    /// Write instance representations from a checkpoint.
    Encode {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Linear-probe accuracy of a trained (or freshly trained) model.
    Probe {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train and probe once per distortion of the second view.
    Robustness,
    /// Train and probe on fractions of the training set.
    Limited,
    /// Train and probe every ablation variant.
    Ablate,
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(cache) = &cli.ph_cache {
        cfg.ph_cache = Some(cache.clone());
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = config(cli)?;
    match &cli.command {
        Command::PhDump => print_json(&cmd_ph_dump(&cfg)?),
        Command::Train => print_json(&cmd_train(&cfg)?),
        Command::Encode { checkpoint } => print_json(&cmd_encode(&cfg, checkpoint)?),
        Command::Probe { checkpoint } => print_json(&cmd_probe(&cfg, checkpoint.as_deref())?),
        Command::Robustness => print_json(&cmd_robustness(&cfg)?),
        Command::Limited => print_json(&cmd_limited(&cfg)?),
        Command::Ablate => print_json(&cmd_ablate(&cfg)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numeric => 4,
            })
        }
    }
}
