use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sirdi::{ModelParams, Params};

fn default_seed() -> u64 {
    1
}

fn default_reps() -> u64 {
    1
}

fn default_stride() -> f64 {
    0.1
}

fn default_bins() -> usize {
    50
}

/// What the simulators record besides the final state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecorderOptions {
    /// Spacing of the exported time series, in years.
    #[serde(default = "default_stride")]
    pub stride: f64,
    /// Uniform bins on `[0, 1]` for occupancy histograms.
    #[serde(default = "default_bins")]
    pub bins: usize,
}

impl Default for RecorderOptions {
    fn default() -> Self {
        Self {
            stride: default_stride(),
            bins: default_bins(),
        }
    }
}

/// One scenario: model constants, starting point, run length and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub params: Params,
    /// Initial susceptible fraction.
    pub s0: f64,
    /// Initial infective fraction; zero unless a run starts mid-epidemic.
    #[serde(default)]
    pub i0: f64,
    /// Run length in years.
    pub horizon: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default)]
    pub recorder: RecorderOptions,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Event cap per chain run; the library default when absent.
    #[serde(default)]
    pub max_events: Option<u64>,
}

/// A rejected configuration, naming the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

fn bad(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.into(),
    }
}

/// Which simulator the config will drive; the limit process needs more.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Chain,
    Limit,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| bad("config", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every precondition of the requested simulator before any run starts.
    pub fn validate(&self, target: Target) -> Result<(), ConfigError> {
        if let Err(e) = self.params.validate() {
            let field = match &e {
                sirdi::ParamError::OutOfRange { field, .. } => format!("params.{field}"),
                sirdi::ParamError::NotSupercritical(_) => "params.r0".into(),
            };
            return Err(bad(&field, e.to_string()));
        }
        if !(self.s0 > 0.0 && self.s0 <= 1.0) {
            return Err(bad("s0", format!("must lie in (0, 1], got {}", self.s0)));
        }
        if !(self.i0 >= 0.0 && self.s0 + self.i0 <= 1.0) {
            return Err(bad("i0", format!("must lie in [0, 1 - s0], got {}", self.i0)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(bad("horizon", format!("must be finite and >= 0, got {}", self.horizon)));
        }
        if self.reps == 0 {
            return Err(bad("reps", "must be at least 1"));
        }
        if !(self.recorder.stride > 0.0 && self.recorder.stride.is_finite()) {
            return Err(bad("recorder.stride", format!("must be > 0, got {}", self.recorder.stride)));
        }
        if self.recorder.bins == 0 {
            return Err(bad("recorder.bins", "must be at least 1"));
        }
        if self.max_events == Some(0) {
            return Err(bad("max_events", "must be at least 1"));
        }
        if target == Target::Limit {
            if let Err(e) = self.params.require_supercritical() {
                return Err(bad("params.r0", e.to_string()));
            }
            if self.s0 >= 1.0 {
                return Err(bad("s0", "the limit process needs s0 < 1"));
            }
            if self.i0 != 0.0 {
                return Err(bad("i0", "the limit process has no infectives"));
            }
            if self.horizon == 0.0 {
                return Err(bad("horizon", "the limit process needs a positive horizon"));
            }
        }
        Ok(())
    }
}

/// Ten thousand years with `n = 1e4`, `r0 = 2`, `mu = 1/75`, `gamma = 50`.
pub fn example(kappa: f64) -> RunConfig {
    RunConfig {
        scenario: format!("kappa_{kappa}"),
        params: ModelParams {
            n: 1e4,
            mu: 1.0 / 75.0,
            r0: 2.0,
            gamma: 50.0,
            kappa,
        },
        s0: 0.5,
        i0: 0.0,
        horizon: 1e4,
        seed: 1,
        reps: 1,
        recorder: RecorderOptions::default(),
        out_dir: None,
        max_events: None,
    }
}
