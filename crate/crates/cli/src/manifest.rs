//! Run manifests: everything needed to repeat a run, plus what it wrote.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sparse_lms::simulation::{ExperimentSpec, ResolvedPoint};
use sparse_lms::theory::SnrConvention;

use crate::error::{CliError, Result};

pub const TOOL: &str = "l0lms";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Which half of the pipeline a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Closed forms only.
    Theory,
    /// Monte Carlo only.
    Simulate,
    /// Both, side by side.
    Experiment,
}

impl Mode {
    pub fn theory(self) -> bool {
        self != Mode::Simulate
    }

    pub fn simulation(self) -> bool {
        self != Mode::Theory
    }
}

/// Command-line choices that shape a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    pub preset: Option<String>,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Overrides the (scaled) trial count.
    pub trials: Option<usize>,
    /// Multiplies `L`, `Q` and the trial count.
    pub scale: f64,
    pub snr_convention: Option<SnrConvention>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            preset: None,
            config: None,
            seed: None,
            trials: None,
            scale: 1.0,
            snr_convention: None,
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedRecord {
    /// Index into [`RunManifest::specs`].
    pub spec: usize,
    pub point: ResolvedPoint,
    pub steady_theory: Option<f64>,
    pub steady_sim: Option<f64>,
    pub steady_sim_ci: Option<f64>,
    pub diverged_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub mode: Mode,
    /// Prefix of every output file.
    pub label: String,
    pub options: RunOptions,
    /// Experiment specs exactly as run, after scaling and overrides.
    pub specs: Vec<ExperimentSpec>,
    pub resolved: Vec<ResolvedRecord>,
    /// Output file names, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn file_name(label: &str) -> String {
        format!("{label}_manifest.json")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("manifest: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
