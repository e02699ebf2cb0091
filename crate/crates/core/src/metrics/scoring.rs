use std::collections::HashMap;

use super::{MetricsError, ScoredTrial};
use crate::autograd::Graph;
use crate::data::TrialRecord;
use crate::model::{cm_outputs, encode_batch, BatchInputs, ModelParams, Utterance};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn cosine_score(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::InvalidArgument(format!(
            "embedding sizes differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(MetricsError::InvalidArgument("zero-norm embedding".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// `cos(mean(enroll), test) + w * (2 * p_bonafide - 1)`.
pub fn sasv_score(
    enroll: &[&[f64]],
    test: &[f64],
    p_bonafide: f64,
    w: f64,
) -> Result<f64, MetricsError> {
    if enroll.is_empty() {
        return Err(MetricsError::InvalidArgument("empty enrolment".into()));
    }
    if !(0.0..=1.0).contains(&p_bonafide) {
        return Err(MetricsError::InvalidArgument(format!(
            "p_bonafide must lie in [0, 1], got {p_bonafide}"
        )));
    }
    if !(w >= 0.0 && w.is_finite()) {
        return Err(MetricsError::InvalidArgument(format!(
            "fusion weight must be finite and >= 0, got {w}"
        )));
    }
    let dim = enroll[0].len();
    let mut mean = vec![0.0; dim];
    for e in enroll {
        if e.len() != dim {
            return Err(MetricsError::InvalidArgument("ragged enrolment".into()));
        }
        for (m, v) in mean.iter_mut().zip(*e) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= enroll.len() as f64;
    }
    Ok(cosine_score(&mean, test)? + w * (2.0 * p_bonafide - 1.0))
}

/// Model outputs for one utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct UttScores {
    pub embedding: Vec<f64>,
    pub p_bonafide: f64,
    /// Bonafide minus spoof CM logit.
    pub cm_score: f64,
}

fn embed_chunk(params: &ModelParams, utts: &[Utterance]) -> Result<Vec<UttScores>, MetricsError> {
    let batch = BatchInputs::from_utterances(utts)?;
    let mut g = Graph::new();
    let bound = params.bind(&mut g);
    let emb = encode_batch(&mut g, &bound, params, &batch.asv, &batch.raw)?;
    let cm = cm_outputs(&mut g, &bound, emb);
    let (e, logits, lp) = (g.value(emb), g.value(cm.logits), g.value(cm.log_probs));
    Ok((0..utts.len())
        .map(|r| UttScores {
            embedding: e.row_slice(r).to_vec(),
            p_bonafide: lp.get(r, 1).exp(),
            cm_score: logits.get(r, 1) - logits.get(r, 0),
        })
        .collect())
}

/// Embeds every utterance. Each row is computed independently of the
/// others, so the result does not depend on `threads`.
pub fn embed_utterances(
    params: &ModelParams,
    utts: &[Utterance],
    threads: usize,
) -> Result<Vec<UttScores>, MetricsError> {
    if utts.is_empty() {
        return Ok(Vec::new());
    }
    let threads = threads.clamp(1, utts.len());
    if threads == 1 {
        return embed_chunk(params, utts);
    }
    let chunk = utts.len().div_ceil(threads);
    let parts: Vec<Result<Vec<UttScores>, MetricsError>> = std::thread::scope(|s| {
        let handles: Vec<_> = utts
            .chunks(chunk)
            .map(|c| s.spawn(move || embed_chunk(params, c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scoring thread panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(utts.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Per-trial ASV (cosine), CM and fused scores.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialScores {
    pub asv: Vec<f64>,
    pub cm: Vec<f64>,
    pub sasv: Vec<ScoredTrial>,
}

pub fn score_trials(
    trials: &[TrialRecord],
    utts: &[Utterance],
    scores: &[UttScores],
    w: f64,
) -> Result<TrialScores, MetricsError> {
    let index: HashMap<&str, usize> = utts
        .iter()
        .enumerate()
        .map(|(i, u)| (u.id.as_str(), i))
        .collect();
    let look = |id: &str| {
        index
            .get(id)
            .map(|&i| &scores[i])
            .ok_or_else(|| MetricsError::UnknownUtterance(id.to_string()))
    };
    let mut out = TrialScores {
        asv: Vec::with_capacity(trials.len()),
        cm: Vec::with_capacity(trials.len()),
        sasv: Vec::with_capacity(trials.len()),
    };
    for (i, t) in trials.iter().enumerate() {
        let enroll = t
            .enroll
            .iter()
            .map(|id| look(id).map(|s| s.embedding.as_slice()))
            .collect::<Result<Vec<_>, _>>()?;
        let test = look(&t.test)?;
        let asv = sasv_score(&enroll, &test.embedding, 0.5, 0.0)?;
        let score = sasv_score(&enroll, &test.embedding, test.p_bonafide, w)?;
        if !score.is_finite() {
            return Err(MetricsError::NonFinite(i));
        }
        out.asv.push(asv);
        out.cm.push(test.cm_score);
        out.sasv.push(ScoredTrial {
            trial: i,
            score,
            label: t.label,
        });
    }
    Ok(out)
}
