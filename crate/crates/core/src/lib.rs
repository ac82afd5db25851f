//! Unsupervised video anomaly detection at desk scale.
//!
//! The pipeline scores pre-cropped patch sequences through two streams:
//! appearance (the current patch) and motion (a dynamic image computed by
//! approximate rank pooling over the window). Each stream feeds a denoising
//! autoencoder whose bottleneck codes are density-modeled by an EM-fitted
//! Gaussian mixture; reconstruction PSNR and latent log-likelihood from both
//! streams fuse into a per-frame anomaly score, min-max normalized per scene
//! and evaluated by frame-level AUROC.
//!
//! Data-parallel stages (rank pooling, encoding, E-steps, corpus scoring)
//! run on rayon under the default `parallel` feature and fall back to
//! sequential execution without it; reductions use fixed-shape pairwise
//! trees, so results are bit-identical either way.

pub mod adam;
pub mod corpus;
pub mod dae;
pub mod error;
pub mod eval;
pub mod gmm;
pub mod kmeans;
mod linalg;
pub mod par;
pub mod rankpool;
pub mod rng;
pub mod scoring;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
