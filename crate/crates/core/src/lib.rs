//! Recurrence-plot image encoding for UCR time series, with
//! classification manifests, nearest-neighbor baselines and evaluation.

pub mod baselines;
pub mod cli;
pub mod encode;
pub mod error;
pub mod evaluation;
pub mod labeling;
pub mod ucr;

pub use error::{Error, ErrorKind, Result};
