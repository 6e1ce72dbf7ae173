use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value at flat index {index} in {context}")]
    NonFinite { context: String, index: usize },

    #[error("missing forward cache for {0}")]
    MissingCache(&'static str),

    #[error("parameter key mismatch: {0}")]
    KeyMismatch(String),

    #[error("degenerate dimension: {0}")]
    Degenerate(String),

    #[error("invalid track: {0}")]
    Track(String),

    #[error("invalid action index {0} (expected 0..5)")]
    ActionIndex(usize),

    #[error("landmark ordering violated: prev={prev} new={new} total={total}")]
    LandmarkOrder { prev: usize, new: usize, total: usize },

    #[error("replay memory is empty")]
    EmptyMemory,

    #[error("no eligible window of length {len} (burn-in {burn_in}) in replay memory")]
    NoEligibleWindow { len: usize, burn_in: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint format version mismatch: {0}")]
    CheckpointVersion(String),

    #[error("checkpoint config digest does not match the supplied config")]
    DigestMismatch,

    #[error("checkpoint corrupt: {0}")]
    CheckpointCorrupt(String),

    #[error("invalid layer index {index} (network has {count} conv layers)")]
    LayerIndex { index: usize, count: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
