//! Config-driven runs, named scenarios and parameter sweeps.

mod config;
pub mod output;
mod sweep;

use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

pub use config::{OutputKind, PortraitOptions, RunConfig, SCENARIOS};
pub use sweep::{sweep, Metric, RunMetrics, SweepAxis, SweepRow, SweepSpec, SweepTable};

use crate::analysis::{perturbed_seeds, portrait, settling_time, AnalysisError, SettlingReport};
use crate::dynamics::{slug_mass, DynamicsError, Model};
use crate::integrators::{integrate_model, IntegrationError, Termination, Trajectory};

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    /// Failures of the numerics, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        match self {
            ExperimentError::Integration(e) => !matches!(
                e,
                IntegrationError::InvalidConfig(_) | IntegrationError::InvalidInitialState(_)
            ),
            ExperimentError::Analysis(AnalysisError::Integration(e)) => !matches!(
                e,
                IntegrationError::InvalidConfig(_) | IntegrationError::InvalidInitialState(_)
            ),
            ExperimentError::Dynamics(
                DynamicsError::SingularInertia | DynamicsError::DegenerateClosure(_),
            ) => true,
            _ => false,
        }
    }
}

/// Integrate a validated config. Shared by [`run`] and [`sweep`] so both see
/// identical numbers.
pub fn simulate(config: &RunConfig) -> Result<(Model, Trajectory), ExperimentError> {
    config.validate()?;
    let model = Model::new(config.params)?;
    let s0 = config.initial_state(&model);
    let traj = integrate_model(&model, s0, config.t_end, &config.integrator)?;
    Ok((model, traj))
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub settling: SettlingReport,
    pub termination: Termination,
    pub casimir_max_rel_err: f64,
    pub initial_ke: f64,
    pub final_ke: f64,
    pub files: Vec<String>,
}

fn manifest(
    config: &RunConfig,
    model: Option<&Model>,
    traj: Option<&Trajectory>,
    report: Option<&SettlingReport>,
    terminated: &str,
    error: Option<String>,
    files: &[String],
) -> serde_json::Value {
    let mut doc = json!({
        "code_version": CODE_VERSION,
        "config": config,
        "integrator": config.integrator,
        "terminated": terminated,
        "error": error,
        "files": files,
    });
    let map = doc.as_object_mut().unwrap();
    if let Some(model) = model {
        map.insert("inertia".into(), output::inertia_json(&model.inertia));
        map.insert(
            "slug_mass_kg".into(),
            json!(slug_mass(&model.params.slug, model.params.ring_radius)),
        );
        let s0 = config.initial_state(model);
        map.insert("initial_h".into(), json!([s0.h.x, s0.h.y, s0.h.z]));
    }
    if let Some(traj) = traj {
        map.insert(
            "casimir_max_rel_err".into(),
            json!(traj.casimir_max_rel_err),
        );
        map.insert(
            "max_renormalization".into(),
            json!(traj.max_renormalization),
        );
        map.insert("samples".into(), json!(traj.samples.len()));
        map.insert("steps_accepted".into(), json!(traj.steps_accepted));
        map.insert("steps_rejected".into(), json!(traj.steps_rejected));
        map.insert("initial_ke_j".into(), json!(traj.first().ke));
        map.insert("final_ke_j".into(), json!(traj.last().ke));
        map.insert("t_final_s".into(), json!(traj.t_end()));
    }
    if let (Some(report), Some(traj)) = (report, traj) {
        let fields = output::settling_fields(
            report,
            config.threshold_deg,
            terminated,
            traj.casimir_max_rel_err,
        );
        for (k, v) in fields.as_object().unwrap() {
            map.insert(k.clone(), v.clone());
        }
    }
    doc
}

/// Execute one run and write its artifacts into `out_dir`.
///
/// On an integration failure the samples produced so far are still written
/// and the manifest records the error.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunSummary, ExperimentError> {
    config.validate()?;
    let model = Model::new(config.params)?;
    output::create_dir(out_dir)?;

    let s0 = config.initial_state(&model);
    let traj = match integrate_model(&model, s0, config.t_end, &config.integrator) {
        Ok(traj) => traj,
        Err(err) => {
            let mut files = Vec::new();
            let terminated = match &err {
                IntegrationError::StepUnderflow { .. } => "step_underflow",
                IntegrationError::NonFinite { .. } => "non_finite",
                _ => "failed",
            };
            if let Some(partial) = err.partial() {
                output::write_file(
                    &out_dir.join("series.csv"),
                    &output::series_csv(partial, config.downsample),
                )?;
                files.push("series.csv".to_string());
            }
            files.push("manifest.json".to_string());
            let doc = manifest(
                config,
                Some(&model),
                err.partial(),
                None,
                terminated,
                Some(err.to_string()),
                &files,
            );
            output::write_file(
                &out_dir.join("manifest.json"),
                &output::to_pretty_json(&doc),
            )?;
            return Err(err.into());
        }
    };

    let report = settling_time(&traj, config.threshold());
    let terminated = traj.termination.label();
    let mut files = Vec::new();

    if [
        OutputKind::Momentum,
        OutputKind::Energy,
        OutputKind::Nutation,
    ]
    .iter()
    .any(|k| config.wants(*k))
    {
        output::write_file(
            &out_dir.join("series.csv"),
            &output::series_csv(&traj, config.downsample),
        )?;
        files.push("series.csv".to_string());
    }
    if config.wants(OutputKind::Settling) {
        let doc = output::settling_fields(
            &report,
            config.threshold_deg,
            terminated,
            traj.casimir_max_rel_err,
        );
        output::write_file(
            &out_dir.join("settling.json"),
            &output::to_pretty_json(&doc),
        )?;
        files.push("settling.json".to_string());
    }
    if config.wants(OutputKind::Portrait) {
        let seeds = perturbed_seeds(s0.h.norm(), config.portrait.offset_deg.to_radians());
        let states: Vec<_> = seeds.iter().map(|s| s.state).collect();
        let t_end = config.portrait.t_end.unwrap_or(config.t_end);
        let trajectories = portrait(&config.params, &states, t_end, &config.integrator)?;
        let written = output::write_portrait(
            &out_dir.join("portrait"),
            &seeds,
            &trajectories,
            config.downsample,
        )?;
        files.extend(written.into_iter().map(|f| format!("portrait/{f}")));
    }
    files.push("manifest.json".to_string());
    let doc = manifest(
        config,
        Some(&model),
        Some(&traj),
        Some(&report),
        terminated,
        None,
        &files,
    );
    output::write_file(
        &out_dir.join("manifest.json"),
        &output::to_pretty_json(&doc),
    )?;

    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        settling: report,
        termination: traj.termination,
        casimir_max_rel_err: traj.casimir_max_rel_err,
        initial_ke: traj.first().ke,
        final_ke: traj.last().ke,
        files,
    })
}
