//! Federated matrix-factorization simulator with per-group,
//! privacy-preserving aggregation.
//!
//! The crate implements three aggregation modes over the same local
//! training loop: plain federated MF, fairness-constrained MF with noisy
//! group statistics, and orthogonal aggregation under one-time-pad
//! masking (quantized into a 2^64 field). It also ships the gender
//! inference attack that motivates the masked protocol.

pub mod dataset;
pub mod model;
pub mod orthoagg;
pub mod quantizer;
pub mod scalar;
pub mod secagg;
pub mod seeding;
pub mod stats;

pub use scalar::{DefaultReal, Real};
