//! Study configuration: JSON schema, loading, defaults and cross-reference
//! checks.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gscr_core::{
    kron_reduce, validate, AcNetwork, Branch, BusId, BusSpec, Converter, ConverterSet, ContourTarget, TRef,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("unknown bus id {0}")]
    CrossRef(String),
    #[error("invalid network: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidNetwork(Vec<gscr_core::Error>),
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Io { .. } => "CONFIG_IO",
            ConfigError::Parse { .. } => "PARSE_ERROR",
            ConfigError::Schema { .. } => "SCHEMA_ERROR",
            ConfigError::CrossRef(_) => "CROSS_REF_ERROR",
            ConfigError::InvalidNetwork(_) => "INVALID_NETWORK",
        }
    }

    fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Schema { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    #[default]
    Analyze,
    Sweep,
    Contour,
    Boundary,
    Study,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Analyze => "analyze",
            Experiment::Sweep => "sweep",
            Experiment::Contour => "contour",
            Experiment::Boundary => "boundary",
            Experiment::Study => "study",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Report,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TRefChoice {
    #[default]
    TStar,
    Mean,
}

impl From<TRefChoice> for TRef {
    fn from(c: TRefChoice) -> Self {
        match c {
            TRefChoice::TStar => TRef::TStar,
            TRefChoice::Mean => TRef::Mean,
        }
    }
}

impl FromStr for TRefChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "t_star" => Ok(TRefChoice::TStar),
            "mean" => Ok(TRefChoice::Mean),
            other => Err(format!("expected t_star or mean, got {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusConfig {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thevenin_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_rated: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_param: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub from: String,
    pub to: String,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub buses: Vec<BusConfig>,
    #[serde(default)]
    pub branches: Vec<BranchConfig>,
}

/// Loading path: `bus` absent means uniform scaling of all rated powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingConfig {
    #[serde(default)]
    pub bus: Option<String>,
    #[serde(default = "default_from")]
    pub from: f64,
    #[serde(default = "default_to")]
    pub to: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

impl Default for LoadingConfig {
    fn default() -> Self {
        LoadingConfig { bus: None, from: default_from(), to: default_to(), steps: default_steps() }
    }
}

/// Contour target as written in configs and on the command line: a number
/// or one of the keywords `cgscr_star` / `singular`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec(pub ContourTarget);

impl FromStr for TargetSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "cgscr_star" => Ok(TargetSpec(ContourTarget::CgscrStar)),
            "singular" => Ok(TargetSpec(ContourTarget::Singular)),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(|v| TargetSpec(ContourTarget::Gscr(v)))
                .ok_or_else(|| format!("expected a number, cgscr_star or singular, got {other:?}")),
        }
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.label())
    }
}

impl Serialize for TargetSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            ContourTarget::Gscr(v) => s.serialize_f64(v),
            _ => s.serialize_str(&self.0.label()),
        }
    }
}

impl<'de> Deserialize<'de> for TargetSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(TargetSpec(ContourTarget::Gscr(v))),
            Raw::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    /// Bus whose rated power is solved for; defaults to the first converter.
    #[serde(default)]
    pub solve_bus: Option<String>,
    /// Bus whose rated power is stepped; defaults to the second converter.
    #[serde(default)]
    pub grid_bus: Option<String>,
    #[serde(default = "default_from")]
    pub from: f64,
    #[serde(default = "default_contour_to")]
    pub to: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_targets")]
    pub targets: Vec<TargetSpec>,
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig {
            solve_bus: None,
            grid_bus: None,
            from: default_from(),
            to: default_contour_to(),
            steps: default_steps(),
            targets: default_targets(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    /// Control parameters per row, in bus order.
    pub t_rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub network: NetworkConfig,
    #[serde(default)]
    pub experiment: Experiment,
    #[serde(default)]
    pub sweep: Option<LoadingConfig>,
    #[serde(default)]
    pub boundary: Option<LoadingConfig>,
    #[serde(default)]
    pub contour: Option<ContourConfig>,
    #[serde(default)]
    pub study: Option<StudySection>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub t_ref: TRefChoice,
    #[serde(default = "default_margin_tol")]
    pub margin_tol: f64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_from() -> f64 {
    1.0
}
fn default_to() -> f64 {
    2.0
}
fn default_contour_to() -> f64 {
    1.4
}
fn default_steps() -> usize {
    50
}
fn default_targets() -> Vec<TargetSpec> {
    vec![TargetSpec(ContourTarget::CgscrStar), TargetSpec(ContourTarget::Singular)]
}
fn default_tol() -> f64 {
    1e-8
}
fn default_margin_tol() -> f64 {
    gscr_core::strength::DEFAULT_MARGIN_TOL
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Report, Format::Csv]
}

pub fn load_config(path: &Path) -> Result<StudyConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<StudyConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let config: StudyConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let field = e.path().to_string();
        ConfigError::schema(field, e.into_inner().to_string())
    })?;
    config.check()?;
    Ok(config)
}

impl StudyConfig {
    /// Canonical serialization; fixed field order, defaults filled.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Schema-level value checks and bus cross-references.
    pub fn check(&self) -> Result<(), ConfigError> {
        let ids: HashSet<&str> = self.network.buses.iter().map(|b| b.id.as_str()).collect();
        let known = |id: &str| if ids.contains(id) { Ok(()) } else { Err(ConfigError::CrossRef(id.to_owned())) };

        if self.network.buses.is_empty() {
            return Err(ConfigError::schema("network.buses", "at least one bus is required"));
        }
        for (i, b) in self.network.buses.iter().enumerate() {
            if b.p_rated.is_some() != b.t_param.is_some() {
                return Err(ConfigError::schema(
                    format!("network.buses[{i}]"),
                    "p_rated and t_param must be given together",
                ));
            }
        }
        if !self.network.buses.iter().any(|b| b.p_rated.is_some()) {
            return Err(ConfigError::schema("network.buses", "no converter bus (p_rated/t_param) given"));
        }
        for br in &self.network.branches {
            known(&br.from)?;
            known(&br.to)?;
        }
        let converters = self.converter_ids();
        let known_converter = |field: &str, id: &str| -> Result<(), ConfigError> {
            known(id)?;
            if converters.iter().any(|c| c == id) {
                Ok(())
            } else {
                Err(ConfigError::schema(field, format!("bus {id} has no converter")))
            }
        };
        for (name, section) in [("sweep", &self.sweep), ("boundary", &self.boundary)] {
            if let Some(s) = section {
                if let Some(bus) = &s.bus {
                    known_converter(&format!("{name}.bus"), bus)?;
                }
                if !(s.from > 0.0 && s.from < s.to && s.to.is_finite()) {
                    return Err(ConfigError::schema(format!("{name}.from"), "require 0 < from < to"));
                }
                if s.steps < 2 {
                    return Err(ConfigError::schema(format!("{name}.steps"), "at least 2 steps"));
                }
            }
        }
        if let Some(c) = &self.contour {
            for (field, bus) in [("contour.solve_bus", &c.solve_bus), ("contour.grid_bus", &c.grid_bus)] {
                if let Some(bus) = bus {
                    known_converter(field, bus)?;
                }
            }
            if !(c.from > 0.0 && c.from <= c.to && c.to.is_finite()) {
                return Err(ConfigError::schema("contour.from", "require 0 < from <= to"));
            }
            if c.steps < 1 {
                return Err(ConfigError::schema("contour.steps", "at least 1 step"));
            }
        }
        if let Some(s) = &self.study {
            for (i, row) in s.t_rows.iter().enumerate() {
                if row.len() != converters.len() || row.iter().any(|t| !t.is_finite()) {
                    return Err(ConfigError::schema(
                        format!("study.t_rows[{i}]"),
                        format!("expected {} finite values", converters.len()),
                    ));
                }
            }
        }
        if !(self.tol > 0.0) {
            return Err(ConfigError::schema("tol", "must be positive"));
        }
        if !(self.margin_tol >= 0.0) {
            return Err(ConfigError::schema("margin_tol", "must be non-negative"));
        }
        let diags = validate(&self.full_network());
        if !diags.is_empty() {
            return Err(ConfigError::InvalidNetwork(diags));
        }
        Ok(())
    }

    pub fn converter_ids(&self) -> Vec<String> {
        self.network.buses.iter().filter(|b| b.p_rated.is_some()).map(|b| b.id.clone()).collect()
    }

    /// Network as written, passive buses included.
    pub fn full_network(&self) -> AcNetwork {
        let buses = self
            .network
            .buses
            .iter()
            .map(|b| BusSpec { id: BusId::new(&b.id), thevenin_x: b.thevenin_x, is_converter: b.p_rated.is_some() })
            .collect();
        let branches = self.network.branches.iter().map(|b| Branch::new(b.from.as_str(), b.to.as_str(), b.x)).collect();
        AcNetwork::new(buses, branches)
    }

    /// Network over converter buses only, with passive buses Kron-reduced away
    /// and parallel branches merged.
    pub fn converter_network(&self) -> gscr_core::Result<AcNetwork> {
        let keep: Vec<BusId> = self.converter_ids().into_iter().map(BusId).collect();
        Ok(kron_reduce(&self.full_network().merge_parallel(), &keep)?.merge_parallel())
    }

    pub fn converters(&self) -> ConverterSet {
        ConverterSet::new(
            self.network
                .buses
                .iter()
                .filter_map(|b| Some(Converter::new(b.id.as_str(), b.p_rated?, b.t_param?)))
                .collect(),
        )
    }
}
