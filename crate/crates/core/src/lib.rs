//! Synthetic time-series generation, a binary image representation of time
//! series with its quantization-error theory, and a rescaled forecast
//! evaluation harness with classical baselines.

pub mod error;
pub mod evalkit;
pub mod exec;
pub mod forecast;
pub mod imgspace;
pub mod realts;
pub mod rng;
pub mod se_theory;
pub mod series;

pub use error::{Error, Result};
pub use exec::Exec;
pub use rng::RngStream;
pub use series::{MissingMask, Observed, TimeSeries};
