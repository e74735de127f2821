//! Command-line tools and the multi-node streaming service.
//!
//! - [`cli`]: `generate`, `train`, `predict`, `evaluate`, `compare`, `serve`.
//! - [`registry`]: per-node history and models, the newline-delimited JSON
//!   protocol and on-disk persistence.
//! - [`server`]: TCP front end, one thread per connection.
//! - [`modelfile`]: the versioned model file format.

pub mod cli;
pub mod config;
pub mod error;
pub mod forecast_csv;
pub mod modelfile;
pub mod registry;
pub mod server;

pub use error::CliError;
