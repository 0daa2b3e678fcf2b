//! Linear dynamic systems on time scales.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod gramian;
pub mod linalg;
pub mod ranktests;
pub mod realization;
pub mod stability;
pub mod timescale;

pub use error::{Error, Result};
