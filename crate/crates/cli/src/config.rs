//! `key = value` run configuration covering every dataset and training key.

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use sasv_core::data::DatasetConfig;
use sasv_core::train::{MiningMode, TrainConfig};

pub const SEED_ENV: &str = "SASV_SEED";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub data: DatasetConfig,
    pub train: TrainConfig,
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| anyhow!("bad value {v:?} for {key}"))
}

fn mining(v: &str) -> Result<MiningMode> {
    match v {
        "hardest" => Ok(MiningMode::Hardest),
        "random" => Ok(MiningMode::Random),
        _ => bail!("bad value {v:?} for mining (expected hardest or random)"),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, v) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            if !seen.insert(key.to_string()) {
                bail!("line {}: duplicate key {key}", i + 1);
            }
            c.set(key, v).with_context(|| format!("line {}", i + 1))?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("config {}", path.display()))
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let (d, t) = (&mut self.data, &mut self.train);
        match key {
            "seed" => {
                d.seed = value(key, v)?;
                t.seed = d.seed;
            }
            "n_speakers" => d.n_speakers = value(key, v)?,
            "n_dev_speakers" => d.n_dev_speakers = value(key, v)?,
            "n_eval_speakers" => d.n_eval_speakers = value(key, v)?,
            "utts_per_speaker_bonafide" => d.utts_per_speaker_bonafide = value(key, v)?,
            "utts_per_attack_per_speaker" => d.utts_per_attack_per_speaker = value(key, v)?,
            "asv_dim" => d.asv_dim = value(key, v)?,
            "raw_dim" => d.raw_dim = value(key, v)?,
            "class_sep" => d.class_sep = value(key, v)?,
            "speaker_rank" => d.speaker_rank = value(key, v)?,
            "epochs" => t.epochs = value(key, v)?,
            "batch_size" => t.batch_size = value(key, v)?,
            "learning_rate" => t.learning_rate = value(key, v)?,
            "beta1" => t.beta1 = value(key, v)?,
            "beta2" => t.beta2 = value(key, v)?,
            "epsilon" => t.epsilon = value(key, v)?,
            "lambda_asv" => t.weights.asv = value(key, v)?,
            "lambda_tts" => t.weights.tts = value(key, v)?,
            "lambda_vc" => t.weights.vc = value(key, v)?,
            "lambda_triplet" => t.weights.triplet = value(key, v)?,
            "margin" => t.margin = value(key, v)?,
            "grl_lambda" => t.grl_lambda = value(key, v)?,
            "grl_ramp" => t.grl_ramp = value(key, v)?,
            "normalize" => t.normalize = value(key, v)?,
            "aam_scale" => t.aam_scale = value(key, v)?,
            "aam_margin" => t.aam_margin = value(key, v)?,
            "fusion_weight" => t.fusion_weight = value(key, v)?,
            "mining" => t.mining = mining(v)?,
            "asv_out" => t.asv_out = value(key, v)?,
            "raw_hidden" => t.raw_hidden = value(key, v)?,
            "raw_out" => t.raw_out = value(key, v)?,
            "emb_dim" => t.emb_dim = value(key, v)?,
            "threads" => t.threads = value(key, v)?,
            _ => bail!("unknown key {key:?}"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        self.train.validate()?;
        Ok(())
    }

    /// Applies `SASV_SEED` when it is set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            let seed = v
                .trim()
                .parse()
                .map_err(|_| anyhow!("{SEED_ENV}={v:?} is not an unsigned integer"))?;
            self.data.seed = seed;
            self.train.seed = seed;
        }
        Ok(())
    }
}
