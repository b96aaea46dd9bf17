//! Problem files (JSON or TOML) and their mapping to [`SolveConfig`].

use std::path::Path;

use plap_core::pathfollow::{Method, SolverConstants};
use plap_core::{BoundaryData, BoundaryPreset, Exponent, Forcing, Prolongation, SolveConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_KAPPA: f64 = 10.0;

/// Boundary data: a preset name or explicit nodal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySpec {
    Preset(String),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ForcingSpec {
    Constant(f64),
    PerCell(Vec<f64>),
}

/// On-disk problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default = "default_dim")]
    pub d: usize,
    pub cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extents: Option<Vec<f64>>,
    pub p: Exponent,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_boundary")]
    pub g: BoundarySpec,
    #[serde(default = "default_forcing")]
    pub f: ForcingSpec,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa0: Option<f64>,
    #[serde(default)]
    pub prolongation: Prolongation,
}

fn default_dim() -> usize {
    2
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_boundary() -> BoundarySpec {
    BoundarySpec::Preset("zero".into())
}
fn default_forcing() -> ForcingSpec {
    ForcingSpec::Constant(0.0)
}
fn default_method() -> String {
    "adaptive".into()
}

pub fn parse_method(name: &str, kappa: Option<f64>, kappa0: Option<f64>) -> Result<Method> {
    match name.trim().to_ascii_lowercase().as_str() {
        "short" => Ok(Method::Short),
        "long" => Ok(Method::Long {
            kappa: kappa.unwrap_or(DEFAULT_KAPPA),
        }),
        "adaptive" => Ok(Method::Adaptive {
            kappa0: kappa0.unwrap_or(SolverConstants::default().kappa0),
        }),
        other => Err(CliError::Config(format!(
            "unknown method {other:?}; expected short, long or adaptive"
        ))),
    }
}

pub fn parse_preset(name: &str) -> Result<BoundaryPreset> {
    BoundaryPreset::from_name(name.trim()).ok_or_else(|| {
        CliError::Config(format!(
            "unknown boundary preset {name:?}; expected zero, linear-x, xy, fig1 or step"
        ))
    })
}

pub fn parse_prolongation(name: &str) -> Result<Prolongation> {
    match name.trim().to_ascii_lowercase().as_str() {
        "harmonic" => Ok(Prolongation::Harmonic),
        "zero" => Ok(Prolongation::Zero),
        other => Err(CliError::Config(format!(
            "unknown prolongation {other:?}; expected harmonic or zero"
        ))),
    }
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| CliError::format(path, e)),
            Some("json") | None => serde_json::from_str(&text).map_err(|e| CliError::format(path, e)),
            Some(other) => Err(CliError::format(
                path,
                format!("unsupported extension .{other}; use .json or .toml"),
            )),
        }
    }

    pub fn to_config(&self) -> Result<SolveConfig> {
        let extents = self.extents.clone().unwrap_or_else(|| vec![1.0; self.d]);
        let boundary = match &self.g {
            BoundarySpec::Preset(name) => BoundaryData::Preset(parse_preset(name)?),
            BoundarySpec::Values(v) => BoundaryData::Values(v.clone()),
        };
        let forcing = match &self.f {
            ForcingSpec::Constant(c) => Forcing::Constant(*c),
            ForcingSpec::PerCell(v) => Forcing::PerCell(v.clone()),
        };
        let config = SolveConfig {
            dim: self.d,
            cells: self.cells,
            extents,
            p: self.p,
            epsilon: self.epsilon,
            boundary,
            forcing,
            method: parse_method(&self.method, self.kappa, self.kappa0)?,
            prolongation: self.prolongation,
            constants: SolverConstants::default(),
            max_iterations: None,
        };
        config.validate()?;
        Ok(config)
    }

    /// Inverse of [`ProblemFile::to_config`], used to echo the configuration in reports.
    pub fn from_config(config: &SolveConfig) -> Self {
        let (kappa, kappa0) = match config.method {
            Method::Short => (None, None),
            Method::Long { kappa } => (Some(kappa), None),
            Method::Adaptive { kappa0 } => (None, Some(kappa0)),
        };
        ProblemFile {
            d: config.dim,
            cells: config.cells,
            extents: Some(config.extents.clone()),
            p: config.p,
            epsilon: config.epsilon,
            g: match &config.boundary {
                BoundaryData::Preset(p) => BoundarySpec::Preset(p.name().into()),
                BoundaryData::Values(v) => BoundarySpec::Values(v.clone()),
            },
            f: match &config.forcing {
                Forcing::Constant(c) => ForcingSpec::Constant(*c),
                Forcing::PerCell(v) => ForcingSpec::PerCell(v.clone()),
            },
            method: config.method.name().into(),
            kappa,
            kappa0,
            prolongation: config.prolongation,
        }
    }
}
