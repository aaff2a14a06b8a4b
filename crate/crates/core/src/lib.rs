//! Toolkit for laparoscopic video quality assessment: distortion synthesis,
//! distortion classification, full-reference metrics, pairwise-comparison
//! subjective studies and metric/MOS correlation analysis.

pub mod classify;
pub mod error;
pub mod evalcorr;
pub mod exec;
pub mod filter;
pub mod frameio;
pub mod fsutil;
pub mod metrics;
pub mod subjective;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Exec;
