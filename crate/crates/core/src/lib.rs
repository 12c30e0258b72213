//! Boundary-ambiguity diagnostics and boundary-aware data generation on
//! synthetic long-tailed Gaussian mixtures.
//!
//! The crate is organized around five building blocks:
//!
//! - [`data`]: seeded long-tailed mixture datasets, head/med/tail grouping,
//!   and the JSON-lines dataset format.
//! - [`classifier`]: a small deterministic MLP with logit-adjusted training,
//!   providing the feature map, logits, confidence and credibility scores.
//! - [`diffusion`]: forward noising, the exact Gaussian-mixture noise
//!   predictor, classifier-free guidance (standard and modified), and the
//!   deterministic reverse process.
//! - [`metrics`]: the three boundary-ambiguity metrics — pairwise inter-class
//!   overlap (vMF + Bhattacharyya), outlier sample rate, and generation
//!   confidence.
//! - [`dbg`]: the boundary-aware generator plus the bifurcated cleaning
//!   pipeline (prototype-distance and confidence-credibility filters) that
//!   produces the augmented dataset.
//!
//! Everything is seeded and single-threaded by construction: equal seeds give
//! bit-identical outputs.

pub mod classifier;
pub mod data;
pub mod dbg;
pub mod diffusion;
pub mod error;
pub mod math;
pub mod metrics;
pub mod rng;

pub use error::{Error, Result};
