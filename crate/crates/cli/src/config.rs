//! Run configuration: a TOML file (or an earlier manifest) plus overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use mfcascade::cascade::CascadeConfig;
use mfcascade::ou_paths::PathOptions;
use mfcascade::renyi::ScenarioSpec;

use crate::CliError;

/// Evenly spaced grid `start, ..., stop` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        if self.count == 0 || !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(CliError::Config("grid needs finite bounds and count >= 1".into()));
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let h = (self.stop - self.start) / (self.count - 1) as f64;
        Ok((0..self.count).map(|i| if i + 1 == self.count { self.stop } else { self.start + h * i as f64 }).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CascadeSection {
    pub n_layers: u32,
    pub m_grid: u32,
}

impl Default for CascadeSection {
    fn default() -> Self {
        CascadeSection { n_layers: 8, m_grid: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Methods {
    Partition,
    MomentScaling,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub q: f64,
    pub layers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateSection {
    pub method: Methods,
    pub q: Vec<f64>,
    /// Dyadic levels of the regression, inclusive.
    pub range: [u32; 2],
    pub bootstrap: usize,
    pub convergence: Option<ConvergenceSection>,
}

impl Default for EstimateSection {
    fn default() -> Self {
        EstimateSection {
            method: Methods::Partition,
            q: vec![0.5, 1.0, 2.0],
            range: [4, 10],
            bootstrap: 200,
            convergence: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub replica: u64,
    /// Level of the dyadic masses written out.
    pub n_box: u32,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection { replica: 0, n_box: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LegendreSection {
    /// Optional CSV with `q` and `T` columns; the analytic curve otherwise.
    pub curve: Option<String>,
    /// Defaults to 64 points spanning the slopes of the curve.
    pub alpha: Option<Grid>,
}

impl Default for LegendreSection {
    fn default() -> Self {
        LegendreSection { curve: None, alpha: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replicas: u32,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub cascade: CascadeSection,
    #[serde(default)]
    pub paths: PathOptions,
    /// q grid of analytic curves; defaults to 512 points on the admissible range.
    #[serde(default)]
    pub q_grid: Option<Grid>,
    #[serde(default)]
    pub estimate: EstimateSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub legendre: LegendreSection,
}

fn one() -> u32 {
    1
}

impl RunConfig {
    pub fn cascade_config(&self) -> CascadeConfig {
        CascadeConfig {
            scenario: self.scenario.clone(),
            n_layers: self.cascade.n_layers,
            m_grid: self.cascade.m_grid,
            replicas: self.replicas,
            master_seed: self.seed,
            paths: self.paths,
        }
    }
}

/// Reads a TOML config, or the `config` object of a JSON manifest.
pub fn load_tree(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    if is_json {
        let mut v: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if v.get("manifest_version").is_some() {
            v = v.get_mut("config").map(Value::take).ok_or_else(|| CliError::Config("manifest without config".into()))?;
        }
        Ok(v)
    } else {
        let t: toml::Table = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::to_value(t).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Parses the right-hand side of `key=value` as a TOML value, falling back
/// to a bare string.
fn parse_value(raw: &str) -> Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|t| t.get("v").cloned())
        .and_then(|v| serde_json::to_value(v).ok())
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Sets a dotted key, creating tables along the way.
pub fn set_dotted(tree: &mut Value, key: &str, raw: &str) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad key {key:?}")));
    }
    let mut node = tree;
    for p in &parts[..parts.len() - 1] {
        if !node.is_object() {
            return Err(CliError::Config(format!("{key}: {p} is not a table")));
        }
        node = node.as_object_mut().unwrap().entry(p.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    match node.as_object_mut() {
        Some(obj) => {
            obj.insert(parts[parts.len() - 1].to_string(), parse_value(raw));
            Ok(())
        }
        None => Err(CliError::Config(format!("{key}: parent is not a table"))),
    }
}

pub fn resolve(tree: Value) -> Result<RunConfig, CliError> {
    serde_json::from_value(tree).map_err(|e| CliError::Config(e.to_string()))
}
