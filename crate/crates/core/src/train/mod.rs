//! Training loop, optimizer and checkpoints.

mod checkpoint;
mod config;
mod optim;
mod run;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use config::{MiningMode, TrainConfig};
pub use optim::{optimizer_step, AdamConfig, AdamState};
pub use run::{format_log_line, steps_per_epoch, train, train_with, StepRecord, TrainHistory};

use thiserror::Error;

use crate::data::DataError;
use crate::metrics::MetricsError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("non-finite {component} at step {step}")]
    NonFinite { step: usize, component: String },
    #[error("loss decomposition mismatch at step {step}: recorded {recorded}, graph {graph}")]
    Decomposition {
        step: usize,
        recorded: f64,
        graph: f64,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("optimizer: {0}")]
    Optimizer(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
