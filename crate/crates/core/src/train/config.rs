use super::{AdamConfig, TrainError};
use crate::autograd::GrlConfig;
use crate::model::{AamConfig, LossWeights, ModelConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MiningMode {
    #[default]
    Hardest,
    /// Uniform within each category, reseeded every step.
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weights: LossWeights,
    /// Triplet margin.
    pub margin: f64,
    pub grl_lambda: f64,
    /// Ramp the reversal scale linearly from 0 over the first 20% of steps.
    pub grl_ramp: bool,
    pub seed: u64,
    pub normalize: bool,
    pub aam_scale: f64,
    pub aam_margin: f64,
    /// CM weight of the fused score used for dev metrics.
    pub fusion_weight: f64,
    pub mining: MiningMode,
    pub asv_out: usize,
    pub raw_hidden: usize,
    pub raw_out: usize,
    pub emb_dim: usize,
    /// Worker threads for dev scoring; results do not depend on it.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        let aam = AamConfig::default();
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weights: LossWeights::default(),
            margin: 0.5,
            grl_lambda: 1.0,
            grl_ramp: false,
            seed: 2022,
            normalize: true,
            aam_scale: aam.scale,
            aam_margin: aam.margin,
            fusion_weight: 1.0,
            mining: MiningMode::Hardest,
            asv_out: m.asv_out,
            raw_hidden: m.raw_hidden,
            raw_out: m.raw_out,
            emb_dim: m.emb_dim,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::InvalidConfig(msg));
        if self.epochs < 1 {
            return bad("epochs must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        let w = self.weights;
        for (name, v) in [
            ("lambda_asv", w.asv),
            ("lambda_tts", w.tts),
            ("lambda_vc", w.vc),
            ("lambda_triplet", w.triplet),
            ("margin", self.margin),
            ("aam_margin", self.aam_margin),
            ("fusion_weight", self.fusion_weight),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.aam_scale > 0.0 && self.aam_scale.is_finite()) {
            return bad(format!("aam_scale must be > 0, got {}", self.aam_scale));
        }
        GrlConfig::new(self.grl_lambda).map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
        for (name, v) in [
            ("asv_out", self.asv_out),
            ("raw_hidden", self.raw_hidden),
            ("raw_out", self.raw_out),
            ("emb_dim", self.emb_dim),
            ("threads", self.threads),
        ] {
            if v < 1 {
                return bad(format!("{name} must be >= 1"));
            }
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn aam(&self) -> AamConfig {
        AamConfig {
            scale: self.aam_scale,
            margin: self.aam_margin,
        }
    }

    pub fn model_config(&self, asv_dim: usize, raw_dim: usize, n_speakers: usize) -> ModelConfig {
        ModelConfig {
            asv_dim,
            raw_dim,
            asv_out: self.asv_out,
            raw_hidden: self.raw_hidden,
            raw_out: self.raw_out,
            emb_dim: self.emb_dim,
            n_speakers,
            normalize: self.normalize,
        }
    }
}
