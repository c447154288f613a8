//! Experiment configuration: a JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use subgrad_core::Family;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Gen,
    Gd,
    Verify,
    Reduce,
    Sweep,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Gd => "gd",
            Command::Verify => "verify",
            Command::Reduce => "reduce",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

/// Estimators `verify` can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    Concentration,
    ArgmaxEscape,
    WallArgmaxEscape,
    Guess,
    Disclosure,
    Properties,
    All,
}

pub const DEFAULT_EPSILON: f64 = 0.1;
/// The hidden-direction families need `k ≥ 2` for every estimator.
pub const DEFAULT_VERIFY_EPSILON: f64 = 0.05;
pub const DEFAULT_TRIALS: u64 = 10_000;
/// Cap on the dimension in which huge nominal instances are materialized.
pub const DEFAULT_AMBIENT_CAP: usize = 4096;
pub const DEFAULT_SWEEP_GRID: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Every setting of a run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Defaults to 0.05 for `verify` and 0.1 otherwise.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_family")]
    pub family: Family,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Report destination; standard output when absent.
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub lemma: Option<Lemma>,
    /// Dimension for `reduce`, `verify --lemma concentration` and
    /// `verify --lemma disclosure`.
    #[serde(default)]
    pub n: Option<u64>,
    /// Threshold of the concentration estimator.
    #[serde(default)]
    pub c: Option<f64>,
    /// Truncation level of the escape estimators; `{1, ⌈k/2⌉}` when absent.
    #[serde(default)]
    pub t: Option<usize>,
    /// Escape estimators with `γ = 0`.
    #[serde(default)]
    pub stress: bool,
    #[serde(default = "default_ambient")]
    pub ambient_dim: usize,
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_family() -> Family {
    Family::MaxCoord
}

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}

fn default_ambient() -> usize {
    DEFAULT_AMBIENT_CAP
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            epsilon: None,
            family: Family::MaxCoord,
            seed: 0,
            trials: DEFAULT_TRIALS,
            output_path: None,
            format: Format::Json,
            lemma: None,
            n: None,
            c: None,
            t: None,
            stress: false,
            ambient_dim: DEFAULT_AMBIENT_CAP,
            grid: None,
            threads: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(match self.command {
            Command::Verify => DEFAULT_VERIFY_EPSILON,
            _ => DEFAULT_EPSILON,
        })
    }

    /// The configuration with command-dependent defaults written out, as
    /// embedded in reports.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.epsilon = Some(self.epsilon());
        // The worker count never changes results; it is recorded in the
        // metadata sidecar instead.
        out.threads = None;
        if out.command == Command::Sweep {
            out.grid = Some(self.sweep_grid());
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        let eps = self.epsilon();
        if !(eps > 0.0 && eps < 0.95) {
            return usage(format!("epsilon must lie in (0, 0.95), got {eps}"));
        }
        if self.trials < 1 {
            return usage("trials must be at least 1".into());
        }
        if self.ambient_dim < 2 {
            return usage("ambient_dim must be at least 2".into());
        }
        if let Some(c) = self.c {
            if !(c.is_finite() && c >= 0.0) {
                return usage(format!("c must be a nonnegative number, got {c}"));
            }
        }
        if self.n == Some(0) {
            return usage("n must be positive".into());
        }
        if self.t == Some(0) {
            return usage("t must be at least 1".into());
        }
        if self.threads == Some(0) {
            return usage("threads must be positive".into());
        }
        if let Some(grid) = &self.grid {
            if grid.is_empty() {
                return usage("grid must not be empty".into());
            }
            if let Some(e) = grid.iter().find(|e| !(**e > 0.0 && **e < 0.95)) {
                return usage(format!("grid values must lie in (0, 0.95), got {e}"));
            }
        }
        Ok(())
    }

    pub fn sweep_grid(&self) -> Vec<f64> {
        self.grid
            .clone()
            .unwrap_or_else(|| DEFAULT_SWEEP_GRID.to_vec())
    }
}
