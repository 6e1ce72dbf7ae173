//! Deep recurrent Q-learning on a pixel-observed track-driving simulator.
//!
//! The Q-network runs a convolutional feature extractor into two heads: an
//! LSTM value stream `V` and a softmax weighting stream `A`, combined per action
//! as `Q = V * A`. Training replays burn-in windows drawn from a memory that
//! duplicates transitions in proportion to their reward.

pub mod agent;
pub mod env;
pub mod error;
pub mod nn;
pub mod replay;
pub mod trainer;
pub mod viz;

pub use error::{Error, Result};
