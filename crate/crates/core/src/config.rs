//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "amplitudes": [{"re": 0.6, "im": 0.0}, {"re": 0.0, "im": 0.8}],
//!   "chain_depth": 1,
//!   "coupling": "ideal",
//!   "shots": 100000,
//!   "seed": 42,
//!   "measure_particle_after": false,
//!   "thresholds": {"sigma": 4.0}
//! }
//! ```
//!
//! `coupling` is either `"ideal"` or a row-major `d² × d²` matrix of
//! `{re, im}` entries. Everything but `dimension` and `amplitudes` has a
//! default; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::protocol::{ChainConfig, Coupling, Thresholds, DEFAULT_SHOTS};
use crate::state::{UnitaryMatrix, C64};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid config: {0}")]
    Validation(String),
}

/// A complex number as it appears in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amplitude {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Amplitude {
    fn from(c: C64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

impl From<Amplitude> for C64 {
    fn from(a: Amplitude) -> Self {
        C64::new(a.re, a.im)
    }
}

/// Row-major `{re, im}` rows.
pub fn matrix_to_json(rows: &[Vec<C64>]) -> Vec<Vec<Amplitude>> {
    rows.iter()
        .map(|r| r.iter().copied().map(Amplitude::from).collect())
        .collect()
}

fn default_depth() -> usize {
    1
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

fn default_coupling() -> Value {
    Value::String("ideal".into())
}

/// Serialized form of a [`ChainConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dimension: usize,
    pub amplitudes: Vec<Amplitude>,
    #[serde(default = "default_depth")]
    pub chain_depth: usize,
    #[serde(default = "default_coupling")]
    pub coupling: Value,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub measure_particle_after: bool,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl ConfigFile {
    pub fn from_config(config: &ChainConfig) -> Self {
        let coupling = match config.coupling() {
            Coupling::Ideal => default_coupling(),
            Coupling::Explicit(u) => {
                serde_json::to_value(matrix_to_json(&u.rows())).expect("matrix serializes")
            }
        };
        Self {
            dimension: config.dimension(),
            amplitudes: config.amplitudes().iter().copied().map(Amplitude::from).collect(),
            chain_depth: config.chain_depth(),
            coupling,
            shots: config.shots(),
            seed: config.seed(),
            measure_particle_after: config.measure_particle_after(),
            thresholds: config.thresholds(),
        }
    }

    pub fn into_config(self) -> Result<ChainConfig, ConfigError> {
        let coupling = parse_coupling(&self.coupling, self.dimension)?;
        ChainConfig::builder(
            self.dimension,
            self.amplitudes.into_iter().map(C64::from).collect(),
        )
        .chain_depth(self.chain_depth)
        .coupling(coupling)
        .shots(self.shots)
        .seed(self.seed)
        .measure_particle_after(self.measure_particle_after)
        .thresholds(self.thresholds)
        .build()
        .map_err(|e| ConfigError::Validation(e.to_string()))
    }
}

fn parse_coupling(value: &Value, d: usize) -> Result<Coupling, ConfigError> {
    match value {
        Value::String(s) if s == "ideal" => Ok(Coupling::Ideal),
        Value::String(s) => Err(ConfigError::Validation(format!(
            "coupling must be \"ideal\" or a matrix, got \"{s}\""
        ))),
        Value::Array(_) => {
            let rows: Vec<Vec<Amplitude>> = serde_json::from_value(value.clone())
                .map_err(|e| ConfigError::Validation(format!("coupling matrix: {e}")))?;
            let n = d * d;
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(ConfigError::Validation(format!(
                    "coupling matrix must be {n}x{n} for dimension {d}"
                )));
            }
            let rows: Vec<Vec<C64>> = rows
                .into_iter()
                .map(|r| r.into_iter().map(C64::from).collect())
                .collect();
            let u = UnitaryMatrix::from_rows(&rows)
                .map_err(|e| ConfigError::Validation(format!("coupling: {e}")))?;
            Ok(Coupling::Explicit(u))
        }
        other => Err(ConfigError::Validation(format!(
            "coupling must be \"ideal\" or a matrix, got {other}"
        ))),
    }
}

/// Parses config JSON text.
pub fn parse_config_str(text: &str) -> Result<ChainConfig, ConfigError> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => ConfigError::Validation(e.to_string()),
            _ => ConfigError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
        }
    })?;
    file.into_config()
}

/// Reads and parses a config file.
pub fn parse_config_path(path: &Path) -> Result<ChainConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

/// Pretty JSON accepted by [`parse_config_str`].
pub fn serialize_config(config: &ChainConfig) -> String {
    serde_json::to_string_pretty(&ConfigFile::from_config(config)).expect("config serializes")
}
