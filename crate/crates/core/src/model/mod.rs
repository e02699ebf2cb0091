//! The spoof-aggregated SASV network: a fused two-branch encoder feeding a countermeasure
//! head, a bonafide-masked AAM-softmax speaker head, two adversarial
//! spoof-type heads behind gradient reversal, and a spoof-source triplet
//! loss on the shared embedding.

mod encoder;
mod heads;
mod loss;
mod params;
mod triplet;
mod utterance;

pub use encoder::{encode, encode_batch, BatchInputs};
pub use heads::{
    asv_loss_masked, cm_loss, cm_outputs, spoof_aggregator_loss, AamConfig, AsvLoss, CmLoss,
    CmOutputs,
};
pub use loss::{
    build_losses, total_loss, weighted_total, LossBreakdown, LossComponents, LossOptions, LossVars,
    LossWeights,
};
pub use params::{BoundParams, ModelConfig, ModelParams, ParamId, TTS_CLASSES, VC_CLASSES};
pub use triplet::{
    mine_triplets, spoof_source_triplet_loss, triplet_hinge, triplet_loss, Mining, TripletPlan,
};
pub use utterance::{Family, Source, Utterance};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch lacks {0}")]
    MissingCategory(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown source label {0:?}")]
    UnknownSource(String),
}
