use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::lookup;
use super::{simulate, ExperimentError, RunConfig};
use crate::analysis::settling_time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SettlingTime,
    ResidualNutation,
    FinalKe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted path into [`RunConfig`], e.g. `params.slug.mass`.
    pub path: String,
    pub values: Vec<Value>,
}

impl SweepAxis {
    /// Parse `path=v1,v2,...`. Each value is read as JSON, falling back to a
    /// bare string so enum names need no quoting.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let (path, list) = text.split_once('=').ok_or_else(|| {
            ExperimentError::Config(format!("axis `{text}` is not of the form path=v1,v2"))
        })?;
        let values: Vec<Value> = list
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string())))
            .collect();
        if values.is_empty() {
            return Err(ExperimentError::Config(format!(
                "axis `{}` has no values",
                path.trim()
            )));
        }
        Ok(Self {
            path: path.trim().to_string(),
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub axes: Vec<SweepAxis>,
    pub metrics: Vec<Metric>,
    pub max_runs: usize,
}

/// On-disk form: the base is either a named scenario or an inline table.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    scenario: Option<String>,
    base: Option<RunConfig>,
    axes: Vec<SweepAxis>,
    #[serde(default = "all_metrics")]
    metrics: Vec<Metric>,
    #[serde(default = "default_cap")]
    max_runs: usize,
}

fn all_metrics() -> Vec<Metric> {
    vec![
        Metric::SettlingTime,
        Metric::ResidualNutation,
        Metric::FinalKe,
    ]
}

fn default_cap() -> usize {
    10_000
}

impl SweepSpec {
    pub fn new(base: RunConfig, axes: Vec<SweepAxis>) -> Self {
        Self {
            base,
            axes,
            metrics: all_metrics(),
            max_runs: default_cap(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let file: SweepFile =
            toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        let base = match (file.scenario, file.base) {
            (Some(name), None) => RunConfig::scenario(&name)?,
            (None, Some(base)) => base,
            _ => {
                return Err(ExperimentError::Config(
                    "sweep needs exactly one of `scenario` or `[base]`".into(),
                ))
            }
        };
        Ok(Self {
            base,
            axes: file.axes,
            metrics: file.metrics,
            max_runs: file.max_runs,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
    }

    pub fn run_count(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.axes.is_empty() {
            return Err(ExperimentError::Config(
                "sweep needs at least one axis".into(),
            ));
        }
        let mut tree = serde_json::to_value(&self.base)?;
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(ExperimentError::Config(format!(
                    "axis `{}` has no values",
                    axis.path
                )));
            }
            lookup(&mut tree, &axis.path)?;
        }
        let n = self.run_count();
        if n > self.max_runs {
            return Err(ExperimentError::Config(format!(
                "sweep has {n} runs, cap is {}",
                self.max_runs
            )));
        }
        Ok(())
    }

    /// Axis values of the `index`-th run; the last axis varies fastest.
    pub fn combination(&self, mut index: usize) -> Vec<Value> {
        let mut picked = vec![Value::Null; self.axes.len()];
        for (slot, axis) in picked.iter_mut().zip(&self.axes).rev() {
            let n = axis.values.len();
            *slot = axis.values[index % n].clone();
            index /= n;
        }
        picked
    }

    pub fn config_for(&self, values: &[Value]) -> Result<RunConfig, ExperimentError> {
        let mut cfg = self.base.clone();
        for (axis, v) in self.axes.iter().zip(values) {
            cfg = cfg.with_value(&axis.path, v)?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunMetrics {
    pub settling_time_s: Option<f64>,
    pub residual_nutation_deg: f64,
    pub final_ke_j: f64,
}

impl RunMetrics {
    pub fn of(config: &RunConfig) -> Result<Self, ExperimentError> {
        let (_, traj) = simulate(config)?;
        let report = settling_time(&traj, config.threshold());
        Ok(Self {
            settling_time_s: report.settling_time,
            residual_nutation_deg: report.residual.to_degrees(),
            final_ke_j: traj.last().ke,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub values: Vec<Value>,
    pub result: Result<RunMetrics, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axes: Vec<String>,
    pub metrics: Vec<Metric>,
    pub rows: Vec<SweepRow>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<&str> = self.axes.iter().map(String::as_str).collect();
        for m in &self.metrics {
            header.push(match m {
                Metric::SettlingTime => "settling_time_s",
                Metric::ResidualNutation => "residual_nutation_deg",
                Metric::FinalKe => "final_ke_j",
            });
        }
        header.push("error");
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut cells: Vec<String> = row.values.iter().map(cell).collect();
            match &row.result {
                Ok(m) => {
                    for metric in &self.metrics {
                        cells.push(match metric {
                            Metric::SettlingTime => {
                                m.settling_time_s.map(|t| t.to_string()).unwrap_or_default()
                            }
                            Metric::ResidualNutation => m.residual_nutation_deg.to_string(),
                            Metric::FinalKe => m.final_ke_j.to_string(),
                        });
                    }
                    cells.push(String::new());
                }
                Err(e) => {
                    cells.extend(self.metrics.iter().map(|_| String::new()));
                    cells.push(format!("\"{}\"", e.replace('"', "'")));
                }
            }
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Run every combination of axis values. Runs execute in parallel; rows come
/// back in lexicographic axis order regardless of scheduling.
pub fn sweep(spec: &SweepSpec) -> Result<SweepTable, ExperimentError> {
    spec.validate()?;
    let rows = (0..spec.run_count())
        .into_par_iter()
        .map(|i| {
            let values = spec.combination(i);
            let result = spec
                .config_for(&values)
                .and_then(|cfg| RunMetrics::of(&cfg))
                .map_err(|e| e.to_string());
            SweepRow { values, result }
        })
        .collect();
    Ok(SweepTable {
        axes: spec.axes.iter().map(|a| a.path.clone()).collect(),
        metrics: spec.metrics.clone(),
        rows,
    })
}
