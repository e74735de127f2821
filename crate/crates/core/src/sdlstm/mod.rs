//! Gated recurrent forecaster whose dropout probability is set from the
//! training data's singularity ratio.
//!
//! The cell follows the classic peephole-on-output formulation without
//! gate biases. Dropout acts on the final hidden state at the readout
//! boundary, never inside the recurrence, so the cell memory is untouched.

mod cell;
mod dropout;
mod model;
mod params;
mod train;

use thiserror::Error;

use crate::series::SeriesError;

pub use cell::{forward_step, sigmoid, GateCache};
pub use dropout::{sd_dropout, DropoutMask};
pub use model::SdLstmModel;
pub use params::{LstmParams, LstmState, Matrix, TENSOR_NAMES};
pub use train::{
    adaptive_dropout, loss_and_gradients, loss_and_gradients_with_masks, resume, sliding_windows,
    train, Adam, TrainConfig, Window,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdLstmError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("series too short: need {needed} samples, have {actual}")]
    SeriesTooShort { needed: usize, actual: usize },
    #[error("interval mismatch: model runs at {expected}s, history is {actual}s")]
    IntervalMismatch { expected: u32, actual: u32 },
    #[error("degenerate series: all training values are equal")]
    DegenerateSeries,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}
