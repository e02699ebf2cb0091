//! Composition of the five training losses.

use serde::{Deserialize, Serialize};

use super::{
    asv_loss_masked, cm_loss, encode_batch, spoof_aggregator_loss, spoof_source_triplet_loss,
    AamConfig, BatchInputs, BoundParams, Mining, ModelError, ModelParams,
};
use crate::autograd::{Graph, GrlConfig, Var};

/// Weights of the ASV, TTS, VC and triplet terms relative to the CM loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub asv: f64,
    pub tts: f64,
    pub vc: f64,
    pub triplet: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            asv: 1.0,
            tts: 0.1,
            vc: 0.1,
            triplet: 0.2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub l_cm: f64,
    pub l_asv: f64,
    pub l_tts: f64,
    pub l_vc: f64,
    pub l_st: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_cm: f64,
    pub l_asv: f64,
    pub l_tts: f64,
    pub l_vc: f64,
    pub l_st: f64,
    pub total: f64,
    pub lambdas: LossWeights,
}

impl LossBreakdown {
    /// The component that is not finite, if any.
    pub fn non_finite_component(&self) -> Option<&'static str> {
        [
            ("l_cm", self.l_cm),
            ("l_asv", self.l_asv),
            ("l_tts", self.l_tts),
            ("l_vc", self.l_vc),
            ("l_st", self.l_st),
            ("total", self.total),
        ]
        .into_iter()
        .find(|(_, v)| !v.is_finite())
        .map(|(name, _)| name)
    }

    pub fn components(&self) -> LossComponents {
        LossComponents {
            l_cm: self.l_cm,
            l_asv: self.l_asv,
            l_tts: self.l_tts,
            l_vc: self.l_vc,
            l_st: self.l_st,
        }
    }
}

/// `l_cm + λ1·l_asv + λ2·l_tts + λ3·l_vc + λ4·l_st`, evaluated left to right.
pub fn total_loss(c: LossComponents, w: LossWeights) -> LossBreakdown {
    let total = c.l_cm + w.asv * c.l_asv + w.tts * c.l_tts + w.vc * c.l_vc + w.triplet * c.l_st;
    LossBreakdown {
        l_cm: c.l_cm,
        l_asv: c.l_asv,
        l_tts: c.l_tts,
        l_vc: c.l_vc,
        l_st: c.l_st,
        total,
        lambdas: w,
    }
}

/// Graph form of [`total_loss`] with the same operation order, so the node
/// value matches the scalar formula bit for bit.
pub fn weighted_total(g: &mut Graph, v: &LossVars, w: LossWeights) -> Var {
    let asv = g.scale(v.l_asv, w.asv);
    let t = g.add(v.l_cm, asv);
    let tts = g.scale(v.l_tts, w.tts);
    let t = g.add(t, tts);
    let vc = g.scale(v.l_vc, w.vc);
    let t = g.add(t, vc);
    let st = g.scale(v.l_st, w.triplet);
    g.add(t, st)
}

/// Everything needed to turn a batch into the training objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossOptions {
    pub weights: LossWeights,
    pub margin: f64,
    pub grl: GrlConfig,
    pub aam: AamConfig,
    pub mining: Mining,
}

impl Default for LossOptions {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            margin: 0.5,
            grl: GrlConfig::default(),
            aam: AamConfig::default(),
            mining: Mining::Hardest,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub embeddings: Var,
    pub l_cm: Var,
    pub l_asv: Var,
    pub l_tts: Var,
    pub l_vc: Var,
    pub l_st: Var,
    pub total: Var,
    pub asv_empty_mask: bool,
}

impl LossVars {
    pub fn breakdown(&self, g: &Graph, w: LossWeights) -> LossBreakdown {
        total_loss(
            LossComponents {
                l_cm: g.scalar(self.l_cm),
                l_asv: g.scalar(self.l_asv),
                l_tts: g.scalar(self.l_tts),
                l_vc: g.scalar(self.l_vc),
                l_st: g.scalar(self.l_st),
            },
            w,
        )
    }
}

/// Encodes a batch and builds all five losses plus their weighted total.
pub fn build_losses(
    g: &mut Graph,
    bound: &BoundParams,
    params: &ModelParams,
    batch: &BatchInputs,
    opts: &LossOptions,
) -> Result<LossVars, ModelError> {
    let emb = encode_batch(g, bound, params, &batch.asv, &batch.raw)?;
    let bona = batch.is_bonafide();
    let cm = cm_loss(g, bound, emb, &bona)?;
    let asv = asv_loss_masked(g, bound, emb, &batch.speakers, &bona, opts.aam)?;
    let (l_tts, l_vc) = spoof_aggregator_loss(g, bound, emb, &batch.sources, opts.grl)?;
    let l_st = spoof_source_triplet_loss(
        g,
        emb,
        &batch.speakers,
        &batch.sources,
        opts.margin,
        opts.mining,
    )?;
    let mut vars = LossVars {
        embeddings: emb,
        l_cm: cm.loss,
        l_asv: asv.loss,
        l_tts,
        l_vc,
        l_st,
        total: cm.loss,
        asv_empty_mask: asv.empty_mask,
    };
    vars.total = weighted_total(g, &vars, opts.weights);
    Ok(vars)
}
