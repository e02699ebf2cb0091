//! Classifier heads on the shared embedding.

use super::{BoundParams, ModelError, ParamId, Source};
use crate::autograd::{Graph, GrlConfig, Tensor, Var};

/// Bound on `|cos θ|` before `acos`, keeping the margin path differentiable.
const COS_CLAMP: f64 = 1.0 - 1e-7;

/// AAM-softmax scale and additive angular margin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AamConfig {
    pub scale: f64,
    pub margin: f64,
}

impl Default for AamConfig {
    fn default() -> Self {
        Self {
            scale: 30.0,
            margin: 0.2,
        }
    }
}

fn mean_cross_entropy(g: &mut Graph, logits: Var, targets: &[usize]) -> Var {
    let ls = g.log_softmax(logits);
    let picked = g.pick(ls, targets);
    let m = g.mean(picked);
    g.scale(m, -1.0)
}

fn zero_loss(g: &mut Graph) -> Var {
    g.constant(Tensor::scalar(0.0))
}

fn linear(g: &mut Graph, x: Var, w: Var, b: Var) -> Var {
    let h = g.matmul(x, w);
    g.add_row(h, b)
}

/// Countermeasure log-probabilities `[ln P(spoof), ln P(bonafide)]` per row.
#[derive(Clone, Copy, Debug)]
pub struct CmOutputs {
    pub logits: Var,
    pub log_probs: Var,
}

pub fn cm_outputs(g: &mut Graph, p: &BoundParams, emb: Var) -> CmOutputs {
    let logits = linear(g, emb, p.var(ParamId::CmW), p.var(ParamId::CmB));
    let log_probs = g.log_softmax(logits);
    CmOutputs { logits, log_probs }
}

#[derive(Clone, Debug)]
pub struct CmLoss {
    pub loss: Var,
    pub p_bonafide: Vec<f64>,
}

/// Binary cross-entropy of the countermeasure head, averaged over the batch.
///
/// The head emits two logits; `P(bonafide)` is their softmax, which equals
/// the sigmoid of the logit difference.
pub fn cm_loss(
    g: &mut Graph,
    p: &BoundParams,
    emb: Var,
    is_bonafide: &[bool],
) -> Result<CmLoss, ModelError> {
    if is_bonafide.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    if g.value(emb).rows() != is_bonafide.len() {
        return Err(ModelError::Dimension(format!(
            "{} embeddings vs {} labels",
            g.value(emb).rows(),
            is_bonafide.len()
        )));
    }
    let out = cm_outputs(g, p, emb);
    let targets: Vec<usize> = is_bonafide.iter().map(|&b| usize::from(b)).collect();
    let picked = g.pick(out.log_probs, &targets);
    let m = g.mean(picked);
    let loss = g.scale(m, -1.0);
    let lp = g.value(out.log_probs);
    let p_bonafide = (0..lp.rows()).map(|r| lp.get(r, 1).exp()).collect();
    Ok(CmLoss { loss, p_bonafide })
}

#[derive(Clone, Copy, Debug)]
pub struct AsvLoss {
    pub loss: Var,
    /// No bonafide sample in the batch; the loss is the constant 0.
    pub empty_mask: bool,
}

/// AAM-softmax speaker loss over the bonafide rows only.
///
/// Spoofed rows are dropped before the head, so they contribute neither to
/// the value nor to any gradient.
pub fn asv_loss_masked(
    g: &mut Graph,
    p: &BoundParams,
    emb: Var,
    speakers: &[usize],
    is_bonafide: &[bool],
    aam: AamConfig,
) -> Result<AsvLoss, ModelError> {
    let n = g.value(emb).rows();
    if speakers.len() != n || is_bonafide.len() != n {
        return Err(ModelError::Dimension(format!(
            "{n} embeddings vs {} speakers / {} flags",
            speakers.len(),
            is_bonafide.len()
        )));
    }
    let rows: Vec<usize> = (0..n).filter(|&i| is_bonafide[i]).collect();
    if rows.is_empty() {
        return Ok(AsvLoss {
            loss: zero_loss(g),
            empty_mask: true,
        });
    }
    let classes = p.var(ParamId::AsvClasses);
    let n_classes = g.value(classes).rows();
    let targets: Vec<usize> = rows.iter().map(|&i| speakers[i]).collect();
    if let Some(&bad) = targets.iter().find(|&&s| s >= n_classes) {
        return Err(ModelError::InvalidArgument(format!(
            "speaker label {bad} outside the {n_classes} training speakers"
        )));
    }

    let e = g.gather_rows(emb, &rows);
    let en = g.row_norm(e);
    let e = g.div_col(e, en);
    let wn = g.row_norm(classes);
    let w = g.div_col(classes, wn);
    let wt = g.transpose(w);
    let cosine = g.matmul(e, wt);

    let logits = if aam.margin == 0.0 {
        g.scale(cosine, aam.scale)
    } else {
        let k = rows.len();
        let mut onehot = Tensor::zeros(k, n_classes);
        for (r, &t) in targets.iter().enumerate() {
            onehot.data_mut()[r * n_classes + t] = 1.0;
        }
        let others = onehot.map(|v| 1.0 - v);
        let onehot = g.constant(onehot);
        let others = g.constant(others);

        let cos_y = g.pick(cosine, &targets);
        let cos_y = g.clamp(cos_y, -COS_CLAMP, COS_CLAMP);
        let theta = g.acos(cos_y);
        let shifted = g.add_scalar(theta, aam.margin);
        let phi = g.cos(shifted);

        let off_target = g.mul(cosine, others);
        let on_target = g.mul_col(onehot, phi);
        let mixed = g.add(off_target, on_target);
        g.scale(mixed, aam.scale)
    };
    Ok(AsvLoss {
        loss: mean_cross_entropy(g, logits, &targets),
        empty_mask: false,
    })
}

/// Adversarial spoof-type losses `(l_tts, l_vc)`.
///
/// Each family's rows pass through gradient reversal before their head, so
/// the head learns to tell attacks apart while the encoder is pushed to
/// make them indistinguishable. A family absent from the batch yields 0.
pub fn spoof_aggregator_loss(
    g: &mut Graph,
    p: &BoundParams,
    emb: Var,
    sources: &[Source],
    grl: GrlConfig,
) -> Result<(Var, Var), ModelError> {
    if sources.len() != g.value(emb).rows() {
        return Err(ModelError::Dimension(format!(
            "{} embeddings vs {} sources",
            g.value(emb).rows(),
            sources.len()
        )));
    }
    let mut family_loss = |family, w: ParamId, b: ParamId| {
        let (rows, targets): (Vec<usize>, Vec<usize>) = sources
            .iter()
            .enumerate()
            .filter(|(_, s)| s.family() == Some(family))
            .map(|(i, s)| (i, s.family_index().expect("spoofed source")))
            .unzip();
        if rows.is_empty() {
            return zero_loss(g);
        }
        let x = g.gather_rows(emb, &rows);
        let r = g.grl(x, grl);
        let logits = linear(g, r, p.var(w), p.var(b));
        mean_cross_entropy(g, logits, &targets)
    };
    let l_tts = family_loss(super::Family::Tts, ParamId::TtsW, ParamId::TtsB);
    let l_vc = family_loss(super::Family::Vc, ParamId::VcW, ParamId::VcB);
    Ok((l_tts, l_vc))
}
