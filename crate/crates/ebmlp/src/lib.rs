//! File formats, configuration, experiment drivers and the `ebmlp` command
//! line on top of `ebmlp-core`.

pub mod bench;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod report;

pub use config::{RunConfig, Track};
pub use error::{AppError, Result};
