//! Mini-batch sampling that guarantees the categories every loss needs.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DataError;
use crate::model::{Family, Utterance};

pub const MIN_BATCH_SIZE: usize = 8;

/// What a sampled batch is guaranteed to contain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Composition {
    /// Speakers contributing at least two bonafide utterances.
    pub speakers_with_pairs: usize,
    pub bonafide: usize,
    pub tts: usize,
    pub vc: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    /// Indices into the sampled utterance list.
    pub indices: Vec<usize>,
    pub composition: Composition,
}

/// Draws a batch of `batch_size` utterances: about half bonafide, spread
/// over several speakers with at least two utterances each, and the rest
/// spoofed with at least one TTS and one VC sample.
pub fn sample_batch(utts: &[Utterance], batch_size: usize, seed: u64) -> Result<Batch, DataError> {
    if batch_size < MIN_BATCH_SIZE {
        return Err(DataError::InvalidConfig(format!(
            "batch_size must be >= {MIN_BATCH_SIZE}, got {batch_size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_speaker: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut tts = Vec::new();
    let mut vc = Vec::new();
    for (i, u) in utts.iter().enumerate() {
        match u.source.family() {
            None => by_speaker.entry(u.speaker).or_default().push(i),
            Some(Family::Tts) => tts.push(i),
            Some(Family::Vc) => vc.push(i),
        }
    }
    let mut eligible: Vec<Vec<usize>> = by_speaker.into_values().filter(|v| v.len() >= 2).collect();
    if eligible.len() < 2 {
        return Err(DataError::Insufficient(
            "need two speakers with at least two bonafide utterances".into(),
        ));
    }
    if tts.is_empty() || vc.is_empty() {
        return Err(DataError::Insufficient(
            "need at least one TTS and one VC utterance".into(),
        ));
    }

    let quota = batch_size / 2;
    let k = eligible.len().min((quota / 4).max(2));
    eligible.shuffle(&mut rng);
    let mut chosen: Vec<Vec<usize>> = eligible.into_iter().take(k).collect();
    for list in &mut chosen {
        list.shuffle(&mut rng);
    }
    let mut counts = vec![2usize; k];
    let mut filled = 2 * k;
    while filled < quota {
        let before = filled;
        for (c, list) in counts.iter_mut().zip(&chosen) {
            if filled < quota && *c < list.len() {
                *c += 1;
                filled += 1;
            }
        }
        if filled == before {
            break;
        }
    }
    let mut indices: Vec<usize> = chosen
        .iter()
        .zip(&counts)
        .flat_map(|(list, &c)| list[..c].iter().copied())
        .collect();
    let bonafide = indices.len();

    let first_tts = *tts.choose(&mut rng).expect("non-empty");
    let first_vc = *vc.choose(&mut rng).expect("non-empty");
    indices.push(first_tts);
    indices.push(first_vc);
    let mut rest: Vec<usize> = tts
        .iter()
        .chain(&vc)
        .copied()
        .filter(|&i| i != first_tts && i != first_vc)
        .collect();
    rest.shuffle(&mut rng);
    let remaining = batch_size.saturating_sub(indices.len());
    indices.extend(rest.into_iter().take(remaining));
    indices.sort_unstable();

    let count = |f: Family| {
        indices
            .iter()
            .filter(|&&i| utts[i].source.family() == Some(f))
            .count()
    };
    let composition = Composition {
        speakers_with_pairs: k,
        bonafide,
        tts: count(Family::Tts),
        vc: count(Family::Vc),
    };
    Ok(Batch {
        indices,
        composition,
    })
}
