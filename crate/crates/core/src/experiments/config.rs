use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ExperimentError;
use crate::dynamics::{DamperParams, Model, State, Vec3};
use crate::integrators::IntegratorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Momentum,
    Energy,
    Nutation,
    Portrait,
    Settling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortraitOptions {
    /// Tilt of each seed away from its equilibrium, degrees.
    pub offset_deg: f64,
    /// Integration horizon for the seeds; the run's `t_end` when absent.
    pub t_end: Option<f64>,
}

impl Default for PortraitOptions {
    fn default() -> Self {
        Self {
            offset_deg: 5.0,
            t_end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: DamperParams,
    /// Initial ring angular velocity in the body frame, rad/s.
    pub initial_omega: [f64; 3],
    #[serde(default)]
    pub initial_beta_dot: f64,
    pub t_end: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
    #[serde(default = "default_threshold")]
    pub threshold_deg: f64,
    #[serde(default)]
    pub portrait: PortraitOptions,
    /// Write every n-th sample to the series files. Metrics always use all samples.
    #[serde(default = "default_downsample")]
    pub downsample: usize,
}

fn default_outputs() -> Vec<OutputKind> {
    vec![
        OutputKind::Momentum,
        OutputKind::Energy,
        OutputKind::Nutation,
        OutputKind::Settling,
    ]
}

fn default_threshold() -> f64 {
    2.0
}

fn default_downsample() -> usize {
    1
}

pub const SCENARIOS: [&str; 3] = ["paper-point-mass", "paper-distributed", "dissipationless"];

impl RunConfig {
    pub fn new(params: DamperParams, initial_omega: [f64; 3], t_end: f64) -> Self {
        Self {
            params,
            initial_omega,
            initial_beta_dot: 0.0,
            t_end,
            integrator: IntegratorConfig::default(),
            outputs: default_outputs(),
            threshold_deg: default_threshold(),
            portrait: PortraitOptions::default(),
            downsample: 1,
        }
    }

    /// Built-in configurations. All start from Ω = [100, 0, 400] rad/s.
    pub fn scenario(name: &str) -> Result<Self, ExperimentError> {
        let omega = [100.0, 0.0, 400.0];
        match name {
            "paper-point-mass" => Ok(Self::new(DamperParams::paper_point_mass(), omega, 400.0)),
            "paper-distributed" => Ok(Self::new(DamperParams::paper_distributed(), omega, 40.0)),
            "dissipationless" => Ok(Self::new(
                DamperParams::paper_point_mass().dissipationless(),
                omega,
                100.0,
            )),
            other => Err(ExperimentError::Config(format!(
                "unknown scenario `{other}` (expected one of {})",
                SCENARIOS.join(", ")
            ))),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serialises to TOML")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.params.validate()?;
        self.integrator.validate()?;
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be > 0, got {}", self.t_end));
        }
        if self
            .initial_omega
            .iter()
            .chain([&self.initial_beta_dot])
            .any(|v| !v.is_finite())
        {
            return bad("initial rates must be finite".into());
        }
        if !(self.threshold_deg.is_finite() && self.threshold_deg > 0.0) {
            return bad(format!(
                "threshold_deg must be > 0, got {}",
                self.threshold_deg
            ));
        }
        if self.downsample == 0 {
            return bad("downsample must be >= 1".into());
        }
        let offset = self.portrait.offset_deg;
        if !(offset > 0.0 && offset < 90.0) {
            return bad(format!(
                "portrait.offset_deg must lie in (0, 90), got {offset}"
            ));
        }
        if let Some(t) = self.portrait.t_end {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("portrait.t_end must be > 0, got {t}"));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self, model: &Model) -> State {
        let [x, y, z] = self.initial_omega;
        model.state_from_body_rates(Vec3::new(x, y, z), self.initial_beta_dot)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold_deg.to_radians()
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }

    /// Apply `key=value`, where `key` is a dotted path to an existing field.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ExperimentError> {
        let (path, raw) = assignment.split_once('=').ok_or_else(|| {
            ExperimentError::Config(format!("override `{assignment}` is not key=value"))
        })?;
        let mut tree = serde_json::to_value(&*self)?;
        let slot = lookup(&mut tree, path.trim())?;
        *slot = parse_like(slot, raw.trim(), path)?;
        *self = from_tree(tree)?;
        Ok(())
    }

    /// Copy of this config with the field at `path` replaced by `value`.
    pub fn with_value(&self, path: &str, value: &Value) -> Result<Self, ExperimentError> {
        let mut tree = serde_json::to_value(self)?;
        *lookup(&mut tree, path)? = value.clone();
        from_tree(tree)
    }
}

fn from_tree(tree: Value) -> Result<RunConfig, ExperimentError> {
    serde_json::from_value(tree).map_err(|e| ExperimentError::Config(e.to_string()))
}

/// Walk a dotted path; every segment must already exist.
pub(crate) fn lookup<'a>(
    tree: &'a mut Value,
    path: &str,
) -> Result<&'a mut Value, ExperimentError> {
    let mut node = tree;
    for key in path.split('.') {
        node = match node {
            Value::Object(map) => map.get_mut(key),
            Value::Array(items) => key
                .parse::<usize>()
                .ok()
                .and_then(move |i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| ExperimentError::Config(format!("unknown config key `{path}`")))?;
    }
    Ok(node)
}

fn parse_like(current: &Value, raw: &str, path: &str) -> Result<Value, ExperimentError> {
    let fail = || ExperimentError::Config(format!("cannot parse `{raw}` for `{path}`"));
    let unquoted = raw.trim_matches('"');
    match current {
        Value::Bool(_) => raw.parse::<bool>().map(Value::Bool).map_err(|_| fail()),
        Value::Number(n) if n.is_u64() || n.is_i64() => {
            raw.parse::<i64>().map(Value::from).map_err(|_| fail())
        }
        Value::Number(_) => raw.parse::<f64>().map(Value::from).map_err(|_| fail()),
        Value::String(_) => Ok(Value::String(unquoted.to_string())),
        Value::Object(_) => Err(ExperimentError::Config(format!(
            "`{path}` is a table, not a value"
        ))),
        Value::Array(_) | Value::Null => {
            if let Ok(x) = raw.parse::<f64>() {
                return Ok(Value::from(x));
            }
            let doc: toml::Table = toml::from_str(&format!("v = {raw}")).map_err(|_| fail())?;
            serde_json::to_value(&doc["v"]).map_err(|_| fail())
        }
    }
}
