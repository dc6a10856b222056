//! Weak supervision over structured label spaces: learn the accuracies of
//! noisy labeling functions from their outputs alone, then aggregate their
//! outputs into pseudolabels.
//!
//! Label spaces covered are rankings (Kendall tau, Mallows noise), real values
//! (squared Euclidean, Gaussian noise) and finite metric spaces (for example
//! shortest-hop distances on a graph).

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod formats;
pub mod inference;
pub mod label_model;
pub mod mallows;
pub mod metric_spaces;
pub mod perm;
pub mod rng;
pub mod synthgen;

pub use error::{Error, Result};

/// Toolkit version recorded in models and manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
