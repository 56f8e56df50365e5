//! Multi-hypothesis 3D human pose lifting.
//!
//! A conditional variational autoencoder samples many plausible 3D poses for a
//! single 2D pose. Candidates are then scored against a pairwise joint-depth
//! (ordinal) relation matrix and aggregated with a temperature softmax, or
//! reduced by an oracle that knows the ground truth.
//!
//! Module map:
//!
//! - [`pose`]: skeleton table, pose containers, normalization, camera projection
//! - [`nn`]: a small dense network engine with manual backpropagation and Adam
//! - [`lifter`]: the CVAE, its hybrid training objective, and the deterministic baseline
//! - [`ordinal`]: ordinal matrices, scoring, softmax aggregation, oracle selection
//! - [`eval`]: MPJPE, Procrustes-aligned MPJPE, ablation curves, diversity
//! - [`datagen`]: synthetic motion-capture poses, virtual cameras, dataset files
//! - [`cli`]: the `multipose` command-line front end

pub mod cli;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod lifter;
pub mod nn;
pub mod ordinal;
pub mod pose;

pub use error::{Error, Result};
