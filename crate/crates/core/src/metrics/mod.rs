//! Trial scoring, equal error rates, score fusion, clustering, projection
//! and result tables.

mod cluster;
mod eer;
mod export;
mod fusion;
mod project;
mod report;
mod scoring;
mod suite;

pub use cluster::{
    agglomerative_cluster, cosine_distance, mean_cross_distance, mean_within_distance, purity,
};
pub use eer::{compute_eer, eer_of, Eer, ScoredTrial};
pub use export::{cluster_csv, projection_csv};
pub use fusion::{parse_scores, score_sum_baseline, write_scores};
pub use project::{project_2d, Projection};
pub use report::report_table;
pub use scoring::{
    cosine_score, embed_utterances, sasv_score, score_trials, TrialScores, UttScores,
};
pub use suite::{compute_metric_suite, MetricSuite};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("EER needs at least one positive and one negative trial ({positives} positive, {negatives} negative)")]
    SingleClass { positives: usize, negatives: usize },
    #[error("{0} subset is empty")]
    EmptySubset(&'static str),
    #[error("non-finite score at trial {0}")]
    NonFinite(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("score files disagree at line {line}: trial {left} vs {right}")]
    Misaligned {
        line: usize,
        left: usize,
        right: usize,
    },
    #[error("score line {line}: {message}")]
    ScoreFile { line: usize, message: String },
    #[error("unknown utterance id {0:?}")]
    UnknownUtterance(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}
