//! Feature selection by quadratic programming over mutual information.
//!
//! The crate ranks features by solving `min ½αᵀQα − sᵀα` over the probability
//! simplex, where `Q` holds pairwise feature redundancy and `s` feature–label
//! relevance, both measured as mutual information between discretized
//! features. Three clustering-accelerated pipelines shrink the QP by first
//! grouping redundant features with a representative-returning MacQueen
//! k-means under the mutual-information distance:
//!
//! - [`selectors::tlkm_qpfs`]: two-level k-means, then one QP over the
//!   cluster representatives.
//! - [`selectors::ikm_qpfs`]: interleaves k-means refinement with QP relevance
//!   pruning, level by level.
//! - [`selectors::ikma_qpfs`]: as above, but drops every cluster whose
//!   representative receives zero weight.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, caching, timing
//! and the command-line front end live in the `redcut` crate.

#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;

pub mod clustering;
pub mod dataset;
mod error;
pub mod infotheory;
pub mod linalg;
pub mod qp;
pub mod selectors;
pub mod svm;

pub use error::{Error, Result};

/// Weights at or below this value mark a feature as irrelevant.
pub const ZERO_TOL: f64 = 1e-8;
