//! Topic modeling through latent-space word networks.
//!
//! The pipeline: build a term-document count matrix, embed words by
//! truncated SVD, connect co-occurring words whose embedding cosine
//! exceeds a threshold, cluster the word network hierarchically by
//! minimizing the map equation, then refine the hard word partition
//! into a probabilistic topic model and evaluate it on held-out text.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod format;
pub mod graph;
pub mod lsa;
pub mod mapeq;
pub mod pipeline;
pub mod refine;

pub use error::{Error, Result};
