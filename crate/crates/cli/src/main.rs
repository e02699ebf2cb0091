mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use sasv_core::data::Split;
use sasv_core::metrics::MetricsError;
use sasv_core::train::TrainError;

use commands::EvalArgs;
use config::RunConfig;

/// Synthetic spoofing-aware speaker verification pipelines.
#[derive(Debug, Parser)]
#[command(name = "sasv", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with protocol and trial files.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and write a checkpoint plus `<out>.log`.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Score a trial list and write the metrics as JSON.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        trials: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        fusion_weight: f64,
        /// Also write per-trial asv, cm and sasv score files here.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Cluster embeddings of one split into K groups.
    Cluster {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "eval", value_parser = parse_split)]
        split: Split,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Project embeddings of one split onto two principal axes.
    Project {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "eval", value_parser = parse_split)]
        split: Split,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Sum two aligned score files.
    Fuse {
        #[arg(long)]
        asv_scores: PathBuf,
        #[arg(long)]
        cm_scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render metrics files as a markdown table.
    Report {
        #[arg(long, value_delimiter = ',', required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        names: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_split(s: &str) -> Result<Split, String> {
    s.parse()
}

fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply_env()?;
    Ok(cfg)
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenData { config, out } => commands::gen_data(&load_config(&config)?, &out),
        Command::Train {
            config,
            data,
            out,
            threads,
        } => {
            let mut cfg = load_config(&config)?.train;
            if let Some(t) = threads {
                cfg.threads = t;
            }
            commands::train(&cfg, &data, &out)
        }
        Command::Eval {
            ckpt,
            data,
            trials,
            out,
            fusion_weight,
            scores,
            threads,
        } => commands::eval(&EvalArgs {
            ckpt: &ckpt,
            data: &data,
            trials: &trials,
            out: &out,
            fusion_weight,
            scores: scores.as_deref(),
            threads,
        }),
        Command::Cluster {
            ckpt,
            data,
            k,
            out,
            split,
            threads,
        } => commands::cluster(&ckpt, &data, split, k, threads, &out),
        Command::Project {
            ckpt,
            data,
            out,
            split,
            threads,
        } => commands::project(&ckpt, &data, split, threads, &out),
        Command::Fuse {
            asv_scores,
            cm_scores,
            out,
        } => commands::fuse(&asv_scores, &cm_scores, &out),
        Command::Report {
            metrics,
            names,
            out,
        } => commands::report(&metrics, &names, &out),
    }
}

/// 2 for numeric failures, 1 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    let numeric = e.chain().any(|c| {
        matches!(
            c.downcast_ref::<TrainError>(),
            Some(TrainError::NonFinite { .. } | TrainError::Decomposition { .. })
        ) || matches!(
            c.downcast_ref::<MetricsError>(),
            Some(MetricsError::NonFinite(_))
        )
    });
    if numeric {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
