//! Triplet losses on the shared embedding.
//!
//! The spoof-source variant labels every row as one of `TTS`, `VC` or
//! `SPK_i`. Each bonafide anchor is pulled toward another utterance of its
//! speaker and pushed away from a TTS row, a VC row, and one row of every
//! other speaker in the batch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Family, ModelError, Source};
use crate::autograd::{Graph, Tensor, Var};

/// How positives and negatives are chosen for each anchor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mining {
    /// Farthest positive, nearest negative of each category; ties go to the
    /// lowest row index.
    #[default]
    Hardest,
    /// Uniform choice within each category.
    Random { seed: u64 },
}

/// Flattened `(anchor, positive, negative)` row triples, grouped per anchor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripletPlan {
    pub anchors: Vec<usize>,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
    pub n_anchors: usize,
}

/// Hinge triplet loss `max(0, ‖a−p‖ − ‖a−n‖ + m)`.
pub fn triplet_loss(a: &[f64], p: &[f64], n: &[f64], margin: f64) -> Result<f64, ModelError> {
    if a.len() != p.len() || a.len() != n.len() {
        return Err(ModelError::Dimension(format!(
            "triplet dims {}, {}, {}",
            a.len(),
            p.len(),
            n.len()
        )));
    }
    if !(margin >= 0.0) {
        return Err(ModelError::InvalidArgument(format!("margin {margin} < 0")));
    }
    Ok((dist(a, p) - dist(a, n) + margin).max(0.0))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Row-wise hinge terms for stacked anchors, positives and negatives.
pub fn triplet_hinge(g: &mut Graph, a: Var, p: Var, n: Var, margin: f64) -> Var {
    let ap = g.sub(a, p);
    let d_ap = g.row_norm(ap);
    let an = g.sub(a, n);
    let d_an = g.row_norm(an);
    let gap = g.sub(d_ap, d_an);
    let gap = g.add_scalar(gap, margin);
    g.relu(gap)
}

fn pick(
    candidates: &[usize],
    anchor: &[f64],
    emb: &Tensor,
    farthest: bool,
    rng: Option<&mut ChaCha8Rng>,
) -> usize {
    if let Some(rng) = rng {
        return candidates[rng.random_range(0..candidates.len())];
    }
    let mut best = candidates[0];
    let mut best_d = dist(anchor, emb.row_slice(best));
    for &c in &candidates[1..] {
        let d = dist(anchor, emb.row_slice(c));
        if (farthest && d > best_d) || (!farthest && d < best_d) {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Chooses the triplets that make up the spoof-source loss for a batch.
pub fn mine_triplets(
    emb: &Tensor,
    speakers: &[usize],
    sources: &[Source],
    mining: Mining,
) -> Result<TripletPlan, ModelError> {
    let n = emb.rows();
    if speakers.len() != n || sources.len() != n {
        return Err(ModelError::Dimension(format!(
            "{n} embeddings vs {} speakers / {} sources",
            speakers.len(),
            sources.len()
        )));
    }
    let tts: Vec<usize> = (0..n)
        .filter(|&i| sources[i].family() == Some(Family::Tts))
        .collect();
    let vc: Vec<usize> = (0..n)
        .filter(|&i| sources[i].family() == Some(Family::Vc))
        .collect();
    let bonafide: Vec<usize> = (0..n).filter(|&i| sources[i].is_bonafide()).collect();

    let mut by_speaker: Vec<(usize, Vec<usize>)> = Vec::new();
    for &i in &bonafide {
        match by_speaker.iter_mut().find(|(s, _)| *s == speakers[i]) {
            Some((_, rows)) => rows.push(i),
            None => by_speaker.push((speakers[i], vec![i])),
        }
    }
    by_speaker.sort_by_key(|(s, _)| *s);

    let anchors: Vec<usize> = bonafide
        .iter()
        .copied()
        .filter(|&i| {
            by_speaker
                .iter()
                .any(|(s, rows)| *s == speakers[i] && rows.len() >= 2)
        })
        .collect();
    if anchors.is_empty() {
        return Err(ModelError::MissingCategory(
            "a speaker with at least two bonafide utterances",
        ));
    }
    if tts.is_empty() {
        return Err(ModelError::MissingCategory("a TTS spoof negative"));
    }
    if vc.is_empty() {
        return Err(ModelError::MissingCategory("a VC spoof negative"));
    }

    let mut rng = match mining {
        Mining::Hardest => None,
        Mining::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut plan = TripletPlan {
        anchors: Vec::new(),
        positives: Vec::new(),
        negatives: Vec::new(),
        n_anchors: anchors.len(),
    };
    for &a in &anchors {
        let row = emb.row_slice(a);
        let same: Vec<usize> = by_speaker
            .iter()
            .find(|(s, _)| *s == speakers[a])
            .map(|(_, rows)| rows.iter().copied().filter(|&j| j != a).collect())
            .unwrap_or_default();
        let pos = pick(&same, row, emb, true, rng.as_mut());
        let mut negs = vec![
            pick(&tts, row, emb, false, rng.as_mut()),
            pick(&vc, row, emb, false, rng.as_mut()),
        ];
        for (s, rows) in &by_speaker {
            if *s != speakers[a] {
                negs.push(pick(rows, row, emb, false, rng.as_mut()));
            }
        }
        for neg in negs {
            plan.anchors.push(a);
            plan.positives.push(pos);
            plan.negatives.push(neg);
        }
    }
    Ok(plan)
}

/// Spoof-source triplet loss: per-anchor sum of hinge terms, averaged over
/// anchors.
pub fn spoof_source_triplet_loss(
    g: &mut Graph,
    emb: Var,
    speakers: &[usize],
    sources: &[Source],
    margin: f64,
    mining: Mining,
) -> Result<Var, ModelError> {
    if !(margin >= 0.0) {
        return Err(ModelError::InvalidArgument(format!("margin {margin} < 0")));
    }
    let plan = mine_triplets(g.value(emb), speakers, sources, mining)?;
    let a = g.gather_rows(emb, &plan.anchors);
    let p = g.gather_rows(emb, &plan.positives);
    let n = g.gather_rows(emb, &plan.negatives);
    let hinge = triplet_hinge(g, a, p, n, margin);
    let total = g.sum(hinge);
    Ok(g.scale(total, 1.0 / plan.n_anchors as f64))
}
