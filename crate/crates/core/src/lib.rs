//! Hybrid traffic-flow forecasting.
//!
//! An LSTM forecaster whose dropout probability is taken from the fraction
//! of singular points in its training data runs at hourly steps, an
//! ARIMA model runs at quarter-hour steps, and a time-of-day schedule
//! decides which one answers for each forecast instant.
//!
//! Modules, bottom up:
//!
//! - [`series`]: the fixed-interval count container, resampling,
//!   normalization, singular-point detection and the CSV format.
//! - [`sdlstm`]: the recurrent cell, adaptive dropout, BPTT and training.
//! - [`arima`]: differencing, conditional-sum-of-squares estimation, order
//!   selection and forecasting.
//! - [`combiner`]: the day schedule, the hybrid forecast walk and the
//!   per-node model update rule.
//! - [`eval`]: MAPE, per-hour reports, rankings and the synthetic
//!   benchmark harness.
//! - [`datagen`]: the seeded synthetic traffic generator.

pub mod arima;
pub mod combiner;
pub mod datagen;
pub mod eval;
pub mod sdlstm;
pub mod series;

pub use series::{Interval, TrafficSeries};
