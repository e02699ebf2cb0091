use super::MetricsError;
use crate::data::TrialLabel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredTrial {
    /// Position in the trial list.
    pub trial: usize,
    pub score: f64,
    pub label: TrialLabel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eer {
    pub eer: f64,
    pub threshold: f64,
}

/// Equal error rate of `positives` against `negatives`.
///
/// A trial is accepted when `score >= threshold`. The ROC vertices are the
/// distinct scores plus `+inf`; the EER is where the false-rejection and
/// false-acceptance curves cross, interpolated linearly between the two
/// vertices that bracket the crossing.
pub fn compute_eer(positives: &[f64], negatives: &[f64]) -> Result<Eer, MetricsError> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(MetricsError::SingleClass {
            positives: positives.len(),
            negatives: negatives.len(),
        });
    }
    let mut all: Vec<(f64, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    if let Some(i) = all.iter().position(|(s, _)| !s.is_finite()) {
        return Err(MetricsError::NonFinite(i));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let np = positives.len() as f64;
    let nn = negatives.len() as f64;

    // At threshold t: rejected positives are those scoring below t, accepted
    // negatives those scoring at or above it.
    let mut rejected_pos = 0usize;
    let mut rejected_neg = 0usize;
    let mut prev: Option<(f64, f64, f64)> = None;
    let mut i = 0;
    loop {
        let t = if i < all.len() {
            all[i].0
        } else {
            f64::INFINITY
        };
        let frr = rejected_pos as f64 / np;
        let far = (negatives.len() - rejected_neg) as f64 / nn;
        if frr >= far {
            return Ok(match prev {
                Some((t0, frr0, far0)) if frr > far => {
                    let d0 = far0 - frr0;
                    let d1 = far - frr;
                    let a = d0 / (d0 - d1);
                    let threshold = if t.is_finite() { t0 + a * (t - t0) } else { t0 };
                    Eer {
                        eer: frr0 + a * (frr - frr0),
                        threshold,
                    }
                }
                _ => Eer {
                    eer: frr,
                    threshold: t,
                },
            });
        }
        prev = Some((t, frr, far));
        let j = i;
        while i < all.len() && all[i].0 == all[j].0 {
            if all[i].1 {
                rejected_pos += 1;
            } else {
                rejected_neg += 1;
            }
            i += 1;
        }
    }
}

/// EER with trials labelled `positive` as positives and every other trial
/// as a negative.
pub fn eer_of(scored: &[ScoredTrial], positive: TrialLabel) -> Result<Eer, MetricsError> {
    let (pos, neg): (Vec<&ScoredTrial>, Vec<&ScoredTrial>) =
        scored.iter().partition(|t| t.label == positive);
    let pos: Vec<f64> = pos.iter().map(|t| t.score).collect();
    let neg: Vec<f64> = neg.iter().map(|t| t.score).collect();
    compute_eer(&pos, &neg)
}
