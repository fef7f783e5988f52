//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("corpus is empty after preprocessing")]
    EmptyCorpus,

    #[error("no documents found under {path}")]
    EmptyInput { path: PathBuf },

    #[error("svd rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("svd did not converge after {iterations} iterations (residual {residual:.3e})")]
    SvdNoConvergence { iterations: usize, residual: f64 },

    #[error("word {word:?} has a zero-norm embedding vector")]
    ZeroNormVector { word: String },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("partition does not match network nodes: {reason}")]
    PartitionMismatch { reason: String },

    #[error("malformed {format} file at line {line}: {reason}")]
    Format {
        format: &'static str,
        line: usize,
        reason: String,
    },

    #[error("vocabulary mismatch: model was trained on a different vocabulary")]
    VocabularyMismatch,

    #[error("label {label:?} has no training documents after the split")]
    EmptyLabelSplit { label: String },

    #[error("evaluation has zero in-vocabulary tokens")]
    NoCoveredTokens,
}
