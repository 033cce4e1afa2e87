//! Config-driven runner around `sdde-core`: one task per invocation, CSV
//! and JSON artifacts, and a manifest recording how to reproduce them.

pub mod config;
pub mod error;
pub mod formats;
pub mod tasks;

pub use error::{LabError, LabResult};
pub use tasks::{run, Outcome, RunOptions, Task};
