//! TOML run configuration. Every field is optional; command-line flags
//! override file values, which override built-in defaults.

use std::path::{Path, PathBuf};

use mcfsing::flows::{Controls, DetectOptions};
use serde::Deserialize;

use crate::failure::{Failure, Outcome};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub simulate: SimulateConfig,
    pub controls: Controls,
    pub detect: DetectOptions,
    pub analyze: AnalyzeConfig,
    /// Generator parameters, as accepted by `synthetic` and `verify`.
    pub synthetic: toml::Table,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub kind: Option<String>,
    pub out: Option<PathBuf>,
    pub r0: Option<f64>,
    pub j: Option<usize>,
    pub half_length: Option<f64>,
    pub neck: Option<f64>,
    pub bulb: Option<f64>,
    pub offset: Option<f64>,
    pub length: Option<f64>,
    pub center_radius: Option<f64>,
    pub tube: Option<f64>,
    pub samples: Option<usize>,
    pub slices: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub time_tol: Option<f64>,
    pub strata_tol: Option<f64>,
    pub eta: Option<f64>,
    pub threshold: Option<f64>,
    pub tau_max: Option<f64>,
    pub tau_min: Option<f64>,
    pub tau_count: Option<usize>,
    pub point: Option<Vec<f64>>,
    pub time: Option<f64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Outcome<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text =
            std::fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Invalid(format!("config {}: {e}", path.display())))
    }
}

/// First of flag, file value, default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
