//! Synthetic ASVspoof-LA-shaped data, protocol and trial files, and batch
//! sampling.

mod batch;
mod protocol;
mod store;
mod synth;
mod trials;

pub use batch::{sample_batch, Batch, Composition};
pub use protocol::{
    parse_protocol, parse_protocol_str, protocol_records, write_protocol, ProtocolKey,
    ProtocolRecord,
};
pub use store::{
    read_dataset, read_features, write_dataset, write_features, FEATURE_MAGIC, FEATURE_VERSION,
};
pub use synth::{generate_synthetic_dataset, Dataset, DatasetConfig, Split, HELD_OUT_ATTACKS};
pub use trials::{
    build_trials, parse_trials, parse_trials_str, relabel, write_trials, TrialLabel, TrialPlan,
    TrialRecord, ENROLL_PER_SPEAKER,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid dataset config: {0}")]
    InvalidConfig(String),
    #[error("protocol line {line}: {message}")]
    Protocol { line: usize, message: String },
    #[error("trial line {line}: {message}")]
    Trials { line: usize, message: String },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("feature file: {0}")]
    Format(String),
    #[error("not enough utterances: {0}")]
    Insufficient(String),
    #[error("unknown utterance id {0:?}")]
    UnknownUtterance(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
