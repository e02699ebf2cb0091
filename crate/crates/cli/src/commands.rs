//! Pipeline steps behind each subcommand.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use sasv_core::data::{
    build_trials, generate_synthetic_dataset, parse_trials, protocol_records, read_dataset,
    relabel, write_dataset, write_protocol, write_trials, Dataset, Split, TrialPlan,
};
use sasv_core::io::atomic_write_bytes;
use sasv_core::metrics::{
    agglomerative_cluster, cluster_csv, compute_metric_suite, embed_utterances, parse_scores,
    project_2d, projection_csv, purity, report_table, score_sum_baseline, score_trials,
    write_scores, MetricSuite,
};
use sasv_core::model::{ModelParams, Utterance};
use sasv_core::train::{load_checkpoint, save_checkpoint, train_with, TrainConfig};

use crate::config::RunConfig;

fn write_text(path: &Path, text: &str) -> Result<()> {
    atomic_write_bytes(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn load_data(dir: &Path) -> Result<Dataset> {
    read_dataset(dir).with_context(|| format!("reading dataset {}", dir.display()))
}

fn load_model(path: &Path) -> Result<ModelParams> {
    load_checkpoint(path).with_context(|| format!("reading checkpoint {}", path.display()))
}

fn check_dims(params: &ModelParams, ds: &Dataset) -> Result<()> {
    if (params.asv_dim(), params.raw_dim()) != (ds.asv_dim(), ds.raw_dim()) {
        bail!(
            "dimension mismatch: checkpoint expects asv_dim {} and raw_dim {}, data has {} and {}",
            params.asv_dim(),
            params.raw_dim(),
            ds.asv_dim(),
            ds.raw_dim()
        );
    }
    Ok(())
}

/// Writes the dataset, one protocol file per split, and dev and eval trial
/// lists.
pub fn gen_data(cfg: &RunConfig, out: &Path) -> Result<()> {
    let ds = generate_synthetic_dataset(&cfg.data).context("gen-data")?;
    write_dataset(&ds, out).context("gen-data")?;
    for split in Split::ALL {
        let p = out.join(format!("protocol_{split}.txt"));
        write_text(&p, &write_protocol(&protocol_records(ds.split(split))))?;
    }
    for split in [Split::Dev, Split::Eval] {
        let trials = build_trials(ds.split(split), TrialPlan::default(), cfg.data.seed)
            .with_context(|| format!("gen-data: {split} trials"))?;
        write_text(
            &out.join(format!("trials_{split}.txt")),
            &write_trials(&trials),
        )?;
    }
    Ok(())
}

/// Trains, then writes the checkpoint and a `<ckpt>.log` step log.
pub fn train(cfg: &TrainConfig, data: &Path, out: &Path) -> Result<()> {
    let ds = load_data(data)?;
    let (params, history) = train_with(&ds, cfg, |_| {}).context("train")?;
    save_checkpoint(&params, out).with_context(|| format!("writing {}", out.display()))?;
    let mut log = out.as_os_str().to_owned();
    log.push(".log");
    write_text(Path::new(&log), &history.log())?;
    if let Some(last) = history.dev.last() {
        println!(
            "dev: sasv_eer {:.4} sv_eer {:.4} spf_eer {:.4}",
            last.sasv_eer, last.sv_eer, last.spf_eer
        );
    }
    Ok(())
}

pub struct EvalArgs<'a> {
    pub ckpt: &'a Path,
    pub data: &'a Path,
    pub trials: &'a Path,
    pub out: &'a Path,
    pub fusion_weight: f64,
    pub scores: Option<&'a Path>,
    pub threads: usize,
}

/// Scores a trial list and writes the metric suite as JSON. With a scores
/// directory it also writes `asv.txt`, `cm.txt` and `sasv.txt`.
pub fn eval(a: &EvalArgs) -> Result<()> {
    let params = load_model(a.ckpt)?;
    let ds = load_data(a.data)?;
    check_dims(&params, &ds)?;
    let trials =
        parse_trials(a.trials).with_context(|| format!("reading trials {}", a.trials.display()))?;
    let all: HashMap<&str, &Utterance> = ds.iter().map(|(_, u)| (u.id.as_str(), u)).collect();
    for (i, t) in trials.iter().enumerate() {
        let label = relabel(&all, t).with_context(|| format!("trial {}", i + 1))?;
        if label != t.label {
            bail!(
                "trial {}: labelled {} but the data make it {}",
                i + 1,
                t.label.as_str(),
                label.as_str()
            );
        }
    }
    let wanted: HashSet<&str> = trials
        .iter()
        .flat_map(|t| t.enroll.iter().chain(Some(&t.test)))
        .map(String::as_str)
        .collect();
    let utts: Vec<Utterance> = ds
        .iter()
        .filter(|(_, u)| wanted.contains(u.id.as_str()))
        .map(|(_, u)| u.clone())
        .collect();
    let scores = embed_utterances(&params, &utts, a.threads).context("eval")?;
    let scored = score_trials(&trials, &utts, &scores, a.fusion_weight).context("eval")?;
    let suite = compute_metric_suite(&scored.sasv).context("eval")?;
    let json = serde_json::to_string_pretty(&suite)? + "\n";
    if let Some(dir) = a.scores {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let indexed = |v: &[f64]| v.iter().copied().enumerate().collect::<Vec<_>>();
        let sasv: Vec<f64> = scored.sasv.iter().map(|t| t.score).collect();
        write_text(&dir.join("asv.txt"), &write_scores(&indexed(&scored.asv)))?;
        write_text(&dir.join("cm.txt"), &write_scores(&indexed(&scored.cm)))?;
        write_text(&dir.join("sasv.txt"), &write_scores(&indexed(&sasv)))?;
    }
    write_text(a.out, &json)?;
    println!(
        "sasv_eer {:.4} sv_eer {:.4} spf_eer {:.4}",
        suite.sasv_eer, suite.sv_eer, suite.spf_eer
    );
    Ok(())
}

fn embed_split(
    ckpt: &Path,
    data: &Path,
    split: Split,
    threads: usize,
) -> Result<(Vec<Utterance>, Vec<Vec<f64>>)> {
    let params = load_model(ckpt)?;
    let ds = load_data(data)?;
    check_dims(&params, &ds)?;
    let utts = ds.split(split).to_vec();
    if utts.is_empty() {
        bail!("{split} split is empty");
    }
    let emb = embed_utterances(&params, &utts, threads)?
        .into_iter()
        .map(|s| s.embedding)
        .collect();
    Ok((utts, emb))
}

pub fn cluster(
    ckpt: &Path,
    data: &Path,
    split: Split,
    k: usize,
    threads: usize,
    out: &Path,
) -> Result<()> {
    let (utts, emb) = embed_split(ckpt, data, split, threads).context("cluster")?;
    let labels = agglomerative_cluster(&emb, k).context("cluster")?;
    let families: Vec<_> = utts.iter().map(|u| u.source.family()).collect();
    let p = purity(&labels, &families).context("cluster")?;
    write_text(out, &cluster_csv(&utts, &labels))?;
    println!("purity against bonafide/TTS/VC: {p:.4}");
    Ok(())
}

pub fn project(ckpt: &Path, data: &Path, split: Split, threads: usize, out: &Path) -> Result<()> {
    let (utts, emb) = embed_split(ckpt, data, split, threads).context("project")?;
    let proj = project_2d(&emb).context("project")?;
    if proj.rank_deficient {
        eprintln!("warning: embeddings span fewer than two dimensions; y is 0");
    }
    write_text(out, &projection_csv(&utts, &proj.coords))
}

pub fn fuse(asv: &Path, cm: &Path, out: &Path) -> Result<()> {
    let read = |p: &Path| -> Result<Vec<(usize, f64)>> {
        let text =
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        parse_scores(&text).with_context(|| format!("scores {}", p.display()))
    };
    let fused = score_sum_baseline(&read(asv)?, &read(cm)?).context("fuse")?;
    write_text(out, &write_scores(&fused))
}

pub fn report(metrics: &[std::path::PathBuf], names: &[String], out: &Path) -> Result<()> {
    if metrics.len() != names.len() {
        bail!("{} metrics files but {} names", metrics.len(), names.len());
    }
    let mut rows = Vec::with_capacity(names.len());
    for (p, name) in metrics.iter().zip(names) {
        let text =
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let suite: MetricSuite =
            serde_json::from_str(&text).with_context(|| format!("metrics {}", p.display()))?;
        rows.push((name.clone(), suite));
    }
    let table = report_table(&rows).context("report")?;
    write_text(out, &table)?;
    std::io::stdout().write_all(table.as_bytes())?;
    Ok(())
}
