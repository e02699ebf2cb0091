//! Spoofing-aware speaker verification with spoof aggregation.
//!
//! The crate bundles a small reverse-mode autograd engine, the multi-task
//! SASV network and its losses, a synthetic dataset generator shaped like
//! a logical-access spoofing corpus, a deterministic training loop, and the SASV
//! evaluation metrics.

pub mod autograd;
pub mod data;
pub mod fmt;
pub mod io;
pub mod metrics;
pub mod model;
pub mod train;
