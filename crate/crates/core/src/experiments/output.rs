//! Writers for run directories. Numbers use Rust's shortest round-trip
//! formatting, so files reproduce the in-memory doubles exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use super::ExperimentError;
use crate::analysis::{Seed, SettlingReport};
use crate::dynamics::{InertiaSet, Mat3};
use crate::integrators::{Sample, Trajectory};

pub const SERIES_HEADER: &str = "t,h_x,h_y,h_z,h_mag,beta_dot,ke,gamma_deg,casimir_rel_err";

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn create_dir(path: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn series_row(out: &mut String, s: &Sample) {
    let h = s.state.h;
    let _ = writeln!(
        out,
        "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
        s.t,
        h.x,
        h.y,
        h.z,
        h.norm(),
        s.state.beta_dot,
        s.ke,
        s.gamma.to_degrees(),
        s.casimir_rel_err
    );
}

/// Series CSV keeping every `stride`-th sample plus the final one.
pub fn series_csv(traj: &Trajectory, stride: usize) -> String {
    let stride = stride.max(1);
    let mut out = String::with_capacity(traj.samples.len() / stride * 160);
    out.push_str(SERIES_HEADER);
    out.push('\n');
    let last = traj.samples.len() - 1;
    for (i, s) in traj.samples.iter().enumerate() {
        if i % stride == 0 || i == last {
            series_row(&mut out, s);
        }
    }
    out
}

fn rows(m: &Mat3) -> Value {
    json!([
        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)]]
    ])
}

pub fn inertia_json(inertia: &InertiaSet) -> Value {
    json!({
        "offset_m": inertia.offset,
        "ring_kgm2": rows(&inertia.ring),
        "slug_kgm2": rows(&inertia.slug),
    })
}

/// Settling fields shared by `settling.json` and the manifest.
pub fn settling_fields(
    report: &SettlingReport,
    threshold_deg: f64,
    terminated: &str,
    casimir_max_rel_err: f64,
) -> Value {
    json!({
        "settling_time_s": report.settling_time,
        "settled": report.settling_time.is_some(),
        "residual_nutation_deg": report.residual.to_degrees(),
        "threshold_deg": threshold_deg,
        "terminated": terminated,
        "casimir_max_rel_err": casimir_max_rel_err,
    })
}

pub fn to_pretty_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serialises");
    s.push('\n');
    s
}

pub fn portrait_file_name(index: usize, seed: &Seed) -> String {
    let axis = match seed.axis.label() {
        "+x" => "px",
        "-x" => "mx",
        "+y" => "py",
        "-y" => "my",
        "+z" => "pz",
        _ => "mz",
    };
    format!("seed_{index:02}_{axis}_{}.csv", seed.direction)
}

/// One CSV per seed plus `index.csv`; returns the written file names.
pub fn write_portrait(
    dir: &Path,
    seeds: &[Seed],
    trajectories: &[Trajectory],
    stride: usize,
) -> Result<Vec<String>, ExperimentError> {
    create_dir(dir)?;
    let mut index = String::from("seed,axis,direction,h_x,h_y,h_z,beta_dot,file\n");
    let mut files = Vec::with_capacity(seeds.len() + 1);
    for (i, (seed, traj)) in seeds.iter().zip(trajectories).enumerate() {
        let name = portrait_file_name(i, seed);
        write_file(&dir.join(&name), &series_csv(traj, stride))?;
        let h = seed.state.h;
        let _ = writeln!(
            index,
            "{i},{},{},{:?},{:?},{:?},{:?},{name}",
            seed.axis.label(),
            seed.direction,
            h.x,
            h.y,
            h.z,
            seed.state.beta_dot
        );
        files.push(name);
    }
    write_file(&dir.join("index.csv"), &index)?;
    files.push("index.csv".into());
    Ok(files)
}
