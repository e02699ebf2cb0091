//! Gaussian-mixture stand-in for a logical-access spoofing corpus.
//!
//! Speaker centres live in a low-rank subspace of the ASV branch. Attack
//! identity shifts mostly the raw branch: the TTS family centre and the VC
//! family centre are each offset from the bonafide centre, and every attack
//! sits tightly around its family centre. A spoof keeps the speaker
//! component of the speaker it imitates, so speaker features alone cannot
//! reject it.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::DataError;
use crate::autograd::Tensor;
use crate::model::{Family, Source, Utterance};

/// Attacks that appear only in the evaluation split.
pub const HELD_OUT_ATTACKS: [Source; 2] = [Source::A03, Source::A04];

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetConfig {
    /// Training speakers.
    pub n_speakers: usize,
    pub n_dev_speakers: usize,
    pub n_eval_speakers: usize,
    pub utts_per_speaker_bonafide: usize,
    pub utts_per_attack_per_speaker: usize,
    pub asv_dim: usize,
    pub raw_dim: usize,
    pub seed: u64,
    /// Spread of speaker and attack centres relative to unit noise.
    pub class_sep: f64,
    /// Dimension of the subspace speaker centres are drawn from, capped at
    /// `asv_dim`.
    pub speaker_rank: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_speakers: 8,
            n_dev_speakers: 4,
            n_eval_speakers: 8,
            utts_per_speaker_bonafide: 20,
            utts_per_attack_per_speaker: 4,
            asv_dim: 32,
            raw_dim: 32,
            seed: 2022,
            class_sep: 1.0,
            speaker_rank: 8,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let counts = [
            ("n_dev_speakers", self.n_dev_speakers),
            ("n_eval_speakers", self.n_eval_speakers),
            ("utts_per_speaker_bonafide", self.utts_per_speaker_bonafide),
            (
                "utts_per_attack_per_speaker",
                self.utts_per_attack_per_speaker,
            ),
            ("asv_dim", self.asv_dim),
            ("raw_dim", self.raw_dim),
            ("speaker_rank", self.speaker_rank),
        ];
        if self.n_speakers < 2 {
            return Err(DataError::InvalidConfig(format!(
                "n_speakers must be >= 2, got {}",
                self.n_speakers
            )));
        }
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v < 1) {
            return Err(DataError::InvalidConfig(format!("{name} must be >= 1")));
        }
        if !(self.class_sep.is_finite() && self.class_sep > 0.0) {
            return Err(DataError::InvalidConfig(format!(
                "class_sep must be positive, got {}",
                self.class_sep
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Dev,
    Eval,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Eval];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Eval => "eval",
        }
    }

    fn id_prefix(self) -> char {
        match self {
            Split::Train => 'T',
            Split::Dev => 'D',
            Split::Eval => 'E',
        }
    }

    /// Attacks generated for this split.
    pub fn attacks(self) -> Vec<Source> {
        match self {
            Split::Eval => Source::ATTACKS.to_vec(),
            _ => Source::ATTACKS
                .into_iter()
                .filter(|a| !HELD_OUT_ATTACKS.contains(a))
                .collect(),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "eval" => Ok(Split::Eval),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Immutable train/dev/eval utterance lists. Speaker indices are global and
/// the three splits use disjoint speakers; training speakers are `0..n`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Dataset {
    pub train: Vec<Utterance>,
    pub dev: Vec<Utterance>,
    pub eval: Vec<Utterance>,
}

impl Dataset {
    pub fn split(&self, s: Split) -> &[Utterance] {
        match s {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Eval => &self.eval,
        }
    }

    pub fn split_mut(&mut self, s: Split) -> &mut Vec<Utterance> {
        match s {
            Split::Train => &mut self.train,
            Split::Dev => &mut self.dev,
            Split::Eval => &mut self.eval,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Split, &Utterance)> {
        Split::ALL
            .into_iter()
            .flat_map(move |s| self.split(s).iter().map(move |u| (s, u)))
    }

    /// Number of distinct training speakers.
    pub fn n_train_speakers(&self) -> usize {
        self.train.iter().map(|u| u.speaker + 1).max().unwrap_or(0)
    }

    pub fn asv_dim(&self) -> usize {
        self.iter()
            .next()
            .map_or(0, |(_, u)| u.asv_features.numel())
    }

    pub fn raw_dim(&self) -> usize {
        self.iter()
            .next()
            .map_or(0, |(_, u)| u.raw_features.numel())
    }
}

struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    fn vector(&mut self, dim: usize, std: f64) -> Vec<f64> {
        (0..dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                z * std
            })
            .collect()
    }

    /// `center + N(0, I)`, rounded to single precision so the on-disk form
    /// reproduces it exactly.
    fn around(&mut self, center: &[f64]) -> Tensor {
        let noise = self.vector(center.len(), 1.0);
        let v: Vec<f64> = center
            .iter()
            .zip(noise)
            .map(|(c, z)| (c + z) as f32 as f64)
            .collect();
        Tensor::row(&v)
    }
}

// Multiples of `class_sep`.
const BONAFIDE_SPREAD: f64 = 1.5;
const FAMILY_OFFSET: f64 = 2.0;
const ATTACK_SPREAD: f64 = 0.15;
const ATTACK_ASV_SHIFT: f64 = 0.3;
const RAW_SPEAKER_SPREAD: f64 = 0.5;

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn generate_synthetic_dataset(cfg: &DatasetConfig) -> Result<Dataset, DataError> {
    cfg.validate()?;
    let mut s = Sampler {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };
    let sep = cfg.class_sep;

    let bonafide_raw = s.vector(cfg.raw_dim, BONAFIDE_SPREAD * sep);
    let tts_raw = add(&bonafide_raw, &s.vector(cfg.raw_dim, FAMILY_OFFSET * sep));
    let vc_raw = add(&bonafide_raw, &s.vector(cfg.raw_dim, FAMILY_OFFSET * sep));
    let mut attack_raw = Vec::new();
    let mut attack_asv = Vec::new();
    for a in Source::ATTACKS {
        let family = match a.family() {
            Some(Family::Tts) => &tts_raw,
            _ => &vc_raw,
        };
        attack_raw.push(add(family, &s.vector(cfg.raw_dim, ATTACK_SPREAD * sep)));
        attack_asv.push(s.vector(cfg.asv_dim, ATTACK_ASV_SHIFT * sep));
    }

    let total_speakers = cfg.n_speakers + cfg.n_dev_speakers + cfg.n_eval_speakers;
    let rank = cfg.speaker_rank.min(cfg.asv_dim);
    let basis: Vec<Vec<f64>> = (0..rank).map(|_| s.vector(cfg.asv_dim, 1.0)).collect();
    let speakers: Vec<(Vec<f64>, Vec<f64>)> = (0..total_speakers)
        .map(|_| {
            let z = s.vector(rank, sep);
            let asv = (0..cfg.asv_dim)
                .map(|d| basis.iter().zip(&z).map(|(b, zi)| b[d] * zi).sum())
                .collect();
            (asv, s.vector(cfg.raw_dim, RAW_SPEAKER_SPREAD * sep))
        })
        .collect();

    let mut ds = Dataset::default();
    let ranges = [
        (Split::Train, 0..cfg.n_speakers),
        (
            Split::Dev,
            cfg.n_speakers..cfg.n_speakers + cfg.n_dev_speakers,
        ),
        (
            Split::Eval,
            cfg.n_speakers + cfg.n_dev_speakers..total_speakers,
        ),
    ];
    for (split, range) in ranges {
        let attacks = split.attacks();
        let mut out = Vec::new();
        let next_id = |out: &Vec<Utterance>| format!("{}_{:07}", split.id_prefix(), out.len() + 1);
        for spk in range {
            let (spk_asv, spk_raw) = &speakers[spk];
            let bona_raw = add(&bonafide_raw, spk_raw);
            for _ in 0..cfg.utts_per_speaker_bonafide {
                let id = next_id(&out);
                out.push(Utterance {
                    id,
                    speaker: spk,
                    source: Source::Bonafide,
                    asv_features: s.around(spk_asv),
                    raw_features: s.around(&bona_raw),
                });
            }
            for &attack in &attacks {
                let ai = Source::ATTACKS
                    .iter()
                    .position(|&a| a == attack)
                    .expect("attack");
                let asv_center = add(spk_asv, &attack_asv[ai]);
                let raw_center = add(&attack_raw[ai], spk_raw);
                for _ in 0..cfg.utts_per_attack_per_speaker {
                    let id = next_id(&out);
                    out.push(Utterance {
                        id,
                        speaker: spk,
                        source: attack,
                        asv_features: s.around(&asv_center),
                        raw_features: s.around(&raw_center),
                    });
                }
            }
        }
        *ds.split_mut(split) = out;
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn bonafide_count_is_speakers_times_utterances() {
        let cfg = DatasetConfig {
            n_speakers: 4,
            utts_per_speaker_bonafide: 10,
            ..DatasetConfig::default()
        };
        let ds = generate_synthetic_dataset(&cfg).unwrap();
        assert_eq!(
            ds.train.iter().filter(|u| u.source.is_bonafide()).count(),
            40
        );
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = DatasetConfig::default();
        assert_eq!(
            generate_synthetic_dataset(&cfg).unwrap(),
            generate_synthetic_dataset(&cfg).unwrap()
        );
        let other = DatasetConfig {
            seed: 1,
            ..cfg.clone()
        };
        assert_ne!(
            generate_synthetic_dataset(&cfg).unwrap(),
            generate_synthetic_dataset(&other).unwrap()
        );
    }

    #[test]
    fn splits_use_disjoint_speakers() {
        let ds = generate_synthetic_dataset(&DatasetConfig::default()).unwrap();
        let spk = |s: Split| {
            ds.split(s)
                .iter()
                .map(|u| u.speaker)
                .collect::<HashSet<_>>()
        };
        assert!(spk(Split::Train).is_disjoint(&spk(Split::Eval)));
        assert!(spk(Split::Train).is_disjoint(&spk(Split::Dev)));
        assert!(spk(Split::Dev).is_disjoint(&spk(Split::Eval)));
        assert_eq!(ds.n_train_speakers(), 8);
    }

    #[test]
    fn held_out_attacks_only_in_eval() {
        let ds = generate_synthetic_dataset(&DatasetConfig::default()).unwrap();
        for a in HELD_OUT_ATTACKS {
            assert!(!ds.train.iter().any(|u| u.source == a));
            assert!(!ds.dev.iter().any(|u| u.source == a));
            assert!(ds.eval.iter().any(|u| u.source == a));
        }
    }

    #[test]
    fn split_sizes() {
        let ds = generate_synthetic_dataset(&DatasetConfig::default()).unwrap();
        assert_eq!(ds.train.len(), 8 * 20 + 8 * 4 * 4);
        assert_eq!(ds.dev.len(), 4 * 20 + 4 * 4 * 4);
        assert_eq!(ds.eval.len(), 8 * 20 + 8 * 6 * 4);
        let ids: HashSet<_> = ds.iter().map(|(_, u)| u.id.clone()).collect();
        assert_eq!(ids.len(), ds.train.len() + ds.dev.len() + ds.eval.len());
    }

    #[test]
    fn tts_attacks_cluster_apart_from_vc() {
        // family structure in the raw branch: mean within-family centre
        // distance below the cross-family one
        let ds = generate_synthetic_dataset(&DatasetConfig::default()).unwrap();
        let centre = |a: Source| {
            let rows: Vec<&[f64]> = ds
                .eval
                .iter()
                .filter(|u| u.source == a)
                .map(|u| u.raw_features.data())
                .collect();
            let d = rows[0].len();
            (0..d)
                .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
                .collect::<Vec<_>>()
        };
        let c: Vec<Vec<f64>> = Source::ATTACKS.iter().map(|&a| centre(a)).collect();
        let d = |i: usize, j: usize| {
            c[i].iter()
                .zip(&c[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let within = (d(0, 1) + d(0, 2) + d(0, 3) + d(1, 2) + d(1, 3) + d(2, 3) + d(4, 5)) / 7.0;
        let across = (0..4).flat_map(|i| [d(i, 4), d(i, 5)]).sum::<f64>() / 8.0;
        assert!(within < across, "{within} vs {across}");
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = DatasetConfig {
            n_speakers: 1,
            ..DatasetConfig::default()
        };
        assert!(generate_synthetic_dataset(&bad).is_err());
        let bad = DatasetConfig {
            utts_per_attack_per_speaker: 0,
            ..DatasetConfig::default()
        };
        assert!(generate_synthetic_dataset(&bad).is_err());
    }
}
