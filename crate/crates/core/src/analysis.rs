//! Derived quantities and qualitative structure of trajectories.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{scaled_residual, DamperParams, DynamicsError, Model, State, Vec3};
use crate::integrators::{integrate_model, IntegrationError, IntegratorConfig, Trajectory};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{0}")]
    InvalidInput(String),
    #[error("seeds do not share one momentum sphere: |h| = {first} and {other}")]
    MixedRadius { first: f64, other: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Axis {
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
    #[serde(rename = "+z")]
    PlusZ,
    #[serde(rename = "-z")]
    MinusZ,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::PlusX,
        Axis::MinusX,
        Axis::PlusY,
        Axis::MinusY,
        Axis::PlusZ,
        Axis::MinusZ,
    ];

    pub fn unit(self) -> Vec3 {
        match self {
            Axis::PlusX => Vec3::x(),
            Axis::MinusX => -Vec3::x(),
            Axis::PlusY => Vec3::y(),
            Axis::MinusY => -Vec3::y(),
            Axis::PlusZ => Vec3::z(),
            Axis::MinusZ => -Vec3::z(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::PlusX => "+x",
            Axis::MinusX => "-x",
            Axis::PlusY => "+y",
            Axis::MinusY => "-y",
            Axis::PlusZ => "+z",
            Axis::MinusZ => "-z",
        }
    }

    /// Two unit vectors orthogonal to the axis, in cyclic order.
    pub fn tangents(self) -> [Vec3; 2] {
        match self {
            Axis::PlusX | Axis::MinusX => [Vec3::y(), Vec3::z()],
            Axis::PlusY | Axis::MinusY => [Vec3::z(), Vec3::x()],
            Axis::PlusZ | Axis::MinusZ => [Vec3::x(), Vec3::y()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    /// Nearby motion stays close and decays toward the axis.
    StableSpiral,
    /// Nearby motion stays close without decaying (no dissipation).
    Center,
    /// Stable without friction, left once energy is dissipated.
    ConditionallyStable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumPoint {
    pub axis: Axis,
    pub h: Vec3,
    pub beta_dot: f64,
    /// `|full_rhs|` in scaled units at the point.
    pub residual: f64,
    pub classification: Option<Stability>,
}

/// The six spin-about-a-body-axis points on the sphere `|h| = h_mag`.
pub fn equilibria(
    params: &DamperParams,
    h_mag: f64,
) -> Result<Vec<EquilibriumPoint>, AnalysisError> {
    if !(h_mag.is_finite() && h_mag > 0.0) {
        return Err(AnalysisError::InvalidInput(format!(
            "h_mag must be > 0, got {h_mag}"
        )));
    }
    let model = Model::new(*params)?;
    Axis::ALL
        .iter()
        .map(|&axis| {
            let h = axis.unit() * h_mag;
            let residual = scaled_residual(&model.inertia, &model.params, &State::new(h, 0.0))?;
            Ok(EquilibriumPoint {
                axis,
                h,
                beta_dot: 0.0,
                residual,
                classification: None,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    /// Angular distance of each probe from its axis, rad.
    pub offset: f64,
    pub duration: f64,
    /// A probe that gets this far from its axis has left the neighbourhood, rad.
    pub escape_angle: f64,
    pub integrator: IntegratorConfig,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            offset: 5f64.to_radians(),
            duration: 30.0,
            escape_angle: 45f64.to_radians(),
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Seed {
    pub axis: Axis,
    /// Index of the tangent direction (0 or 1).
    pub direction: usize,
    pub state: State,
}

/// Two seeds per equilibrium, tilted by `offset` toward each tangent
/// direction, all on the sphere of radius `h_mag` with `β̇ = 0`.
pub fn perturbed_seeds(h_mag: f64, offset: f64) -> Vec<Seed> {
    let mut seeds = Vec::with_capacity(12);
    for axis in Axis::ALL {
        for (direction, tangent) in axis.tangents().into_iter().enumerate() {
            let h = (axis.unit() * offset.cos() + tangent * offset.sin()) * h_mag;
            seeds.push(Seed {
                axis,
                direction,
                state: State::new(h, 0.0),
            });
        }
    }
    seeds
}

pub fn angle_from_axis(h: &Vec3, axis: Axis) -> f64 {
    let u = axis.unit();
    h.cross(&u).norm().atan2(h.dot(&u))
}

/// Integrate every seed over `[0, t_end]`; output order follows `seeds`.
pub fn portrait(
    params: &DamperParams,
    seeds: &[State],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<Trajectory>, AnalysisError> {
    let Some(first) = seeds.first() else {
        return Ok(Vec::new());
    };
    let radius = first.h.norm();
    for s in seeds {
        let r = s.h.norm();
        if (r - radius).abs() > 1e-9 * radius {
            return Err(AnalysisError::MixedRadius {
                first: radius,
                other: r,
            });
        }
    }
    let model = Model::new(*params)?;
    seeds
        .par_iter()
        .map(|s| integrate_model(&model, *s, t_end, cfg).map_err(AnalysisError::from))
        .collect()
}

struct ProbeOutcome {
    escaped: bool,
    decayed: bool,
}

fn probe(
    model: &Model,
    axis: Axis,
    h_mag: f64,
    cfg: &ProbeConfig,
) -> Result<ProbeOutcome, AnalysisError> {
    let starts: Vec<State> = perturbed_seeds(h_mag, cfg.offset)
        .into_iter()
        .filter(|s| s.axis == axis)
        .map(|s| s.state)
        .collect();
    let runs = portrait(&model.params, &starts, cfg.duration, &cfg.integrator)?;
    let mut escaped = false;
    let mut decayed = true;
    for traj in &runs {
        let angles: Vec<f64> = traj
            .samples
            .iter()
            .map(|s| angle_from_axis(&s.state.h, axis))
            .collect();
        escaped |= angles.iter().any(|&a| a > cfg.escape_angle);
        let tail = &angles[angles.len() - (angles.len() / 10).max(1)..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        decayed &= mean < cfg.offset * 0.99;
    }
    Ok(ProbeOutcome { escaped, decayed })
}

/// Fill in each point's classification from probe trajectories run with and
/// without friction.
pub fn classify_equilibria(
    params: &DamperParams,
    points: &mut [EquilibriumPoint],
    cfg: &ProbeConfig,
) -> Result<(), AnalysisError> {
    let damped = Model::new(*params)?;
    let free = Model::new(params.dissipationless())?;
    for point in points.iter_mut() {
        let h_mag = point.h.norm();
        let without = probe(&free, point.axis, h_mag, cfg)?;
        let class = if without.escaped {
            Stability::Unstable
        } else if params.drag_coefficient == 0.0 {
            Stability::Center
        } else {
            let with = probe(&damped, point.axis, h_mag, cfg)?;
            if with.escaped {
                Stability::ConditionallyStable
            } else if with.decayed {
                Stability::StableSpiral
            } else {
                Stability::Center
            }
        };
        point.classification = Some(class);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SettlingReport {
    /// rad
    pub threshold: f64,
    /// First sample time after which γ stays below the threshold; `None`
    /// when the run never settles.
    pub settling_time: Option<f64>,
    /// Mean γ over the final 10% of samples, rad.
    pub residual: f64,
}

pub fn residual_nutation(traj: &Trajectory) -> f64 {
    let n = traj.samples.len();
    let tail = &traj.samples[n - (n / 10).max(1)..];
    tail.iter().map(|s| s.gamma).sum::<f64>() / tail.len() as f64
}

pub fn settling_time(traj: &Trajectory, threshold: f64) -> SettlingReport {
    let samples = &traj.samples;
    let settling_time = match samples
        .iter()
        .rposition(|s| s.gamma.is_nan() || s.gamma >= threshold)
    {
        None => samples.first().map(|s| s.t),
        Some(i) => samples.get(i + 1).map(|s| s.t),
    };
    SettlingReport {
        threshold,
        settling_time,
        residual: residual_nutation(traj),
    }
}

/// Largest transverse momentum `√(h_x² + h_y²)` among samples in `[t0, t1]`.
pub fn transverse_envelope(traj: &Trajectory, t0: f64, t1: f64) -> f64 {
    traj.samples
        .iter()
        .filter(|s| s.t >= t0 && s.t <= t1)
        .map(|s| s.state.h.x.hypot(s.state.h.y))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentumPoint {
    pub t: f64,
    pub h_x: f64,
    pub h_y: f64,
    pub h_z: f64,
    pub h_mag: f64,
}

/// `(t, γ)` in radians.
pub fn nutation_series(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.samples.iter().map(|s| (s.t, s.gamma)).collect()
}

/// `(t, KE)` in joules.
pub fn energy_series(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.samples.iter().map(|s| (s.t, s.ke)).collect()
}

pub fn momentum_series(traj: &Trajectory) -> Vec<MomentumPoint> {
    traj.samples
        .iter()
        .map(|s| MomentumPoint {
            t: s.t,
            h_x: s.state.h.x,
            h_y: s.state.h.y,
            h_z: s.state.h.z,
            h_mag: s.state.h.norm(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{Sample, Termination};
    use approx::assert_relative_eq;

    fn synthetic(gammas: &[f64]) -> Trajectory {
        let samples = gammas
            .iter()
            .enumerate()
            .map(|(i, &g)| Sample {
                t: i as f64,
                state: State::new(Vec3::new(g.sin(), 0.0, g.cos()), 0.0),
                beta: 0.0,
                ke: 0.0,
                gamma: g,
                casimir_rel_err: 0.0,
            })
            .collect();
        Trajectory {
            samples,
            params: DamperParams::paper_point_mass(),
            termination: Termination::Completed,
            casimir_max_rel_err: 0.0,
            max_renormalization: 0.0,
            steps_accepted: 0,
            steps_rejected: 0,
        }
    }

    #[test]
    fn settling_cases() {
        let below = synthetic(&[0.01, 0.02, 0.01]);
        assert_eq!(settling_time(&below, 0.03).settling_time, Some(0.0));

        let falling = synthetic(&[0.5, 0.4, 0.3, 0.2, 0.1]);
        assert_eq!(settling_time(&falling, 0.25).settling_time, Some(3.0));

        // a later excursion resets the clock
        let bouncing = synthetic(&[0.5, 0.1, 0.3, 0.1, 0.1]);
        assert_eq!(settling_time(&bouncing, 0.25).settling_time, Some(3.0));

        let never = synthetic(&[0.5, 0.4, 0.3]);
        assert_eq!(settling_time(&never, 0.25).settling_time, None);
    }

    #[test]
    fn residual_is_tail_mean() {
        let mut g = vec![1.0; 90];
        g.extend(std::iter::repeat_n(0.2, 10));
        let r = settling_time(&synthetic(&g), 0.5).residual;
        assert_relative_eq!(r, 0.2, max_relative = 1e-12);
    }

    #[test]
    fn six_points_with_zero_residual() {
        let p = DamperParams::paper_point_mass();
        let pts = equilibria(&p, 1.0).unwrap();
        assert_eq!(pts.len(), 6);
        for pt in &pts {
            assert_relative_eq!(pt.h.norm(), 1.0, max_relative = 1e-12);
            assert_eq!(pt.residual, 0.0);
            assert_eq!(pt.beta_dot, 0.0);
        }
        assert_eq!(pts[4].h, Vec3::new(0.0, 0.0, 1.0));
        assert!(equilibria(&p, 0.0).is_err());
    }

    #[test]
    fn seeds_sit_on_the_sphere() {
        let seeds = perturbed_seeds(2.0, 5f64.to_radians());
        assert_eq!(seeds.len(), 12);
        for s in &seeds {
            assert_relative_eq!(s.state.h.norm(), 2.0, max_relative = 1e-14);
            assert_relative_eq!(
                angle_from_axis(&s.state.h, s.axis),
                5f64.to_radians(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn portrait_rejects_mixed_radii() {
        let p = DamperParams::paper_point_mass();
        let seeds = [State::new(Vec3::z(), 0.0), State::new(Vec3::z() * 2.0, 0.0)];
        let err = portrait(&p, &seeds, 1.0, &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(err, AnalysisError::MixedRadius { .. }));
    }

    #[test]
    fn series_columns() {
        let traj = synthetic(&[0.3, 0.2]);
        let m = momentum_series(&traj);
        assert_eq!(m.len(), 2);
        assert_relative_eq!(m[0].h_mag, 1.0, max_relative = 1e-15);
        assert_eq!(nutation_series(&traj)[1], (1.0, 0.2));
        assert_eq!(energy_series(&traj).len(), 2);
    }

    #[test]
    fn settling_monotone_in_threshold() {
        let traj = synthetic(&[0.9, 0.1, 0.6, 0.2, 0.4, 0.05, 0.3, 0.01]);
        let mut last = f64::INFINITY;
        for k in 1..=10 {
            let t = settling_time(&traj, k as f64 * 0.1)
                .settling_time
                .unwrap_or(f64::INFINITY);
            assert!(t <= last);
            last = t;
        }
    }
}
