//! Command-line front end for the `sparse-lms` library: experiment presets,
//! config-driven runs, CSV output, run manifests and theory-vs-simulation
//! comparison.

pub mod compare;
pub mod error;
pub mod manifest;
pub mod presets;
pub mod run;
pub mod table;

pub use error::{CliError, Result};
pub use manifest::{Mode, RunManifest, RunOptions};
