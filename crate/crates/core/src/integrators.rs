//! Time stepping of the `(h, β̇)` system.
//!
//! Two schemes are available: classical fixed-step RK4 and the
//! Dormand–Prince 5(4) embedded pair with step-size control. The slug angle
//! β is carried along as a passive fifth component so trajectories can be
//! animated; it never feeds back into the right-hand side and is excluded
//! from error control.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{nutation_angle, DamperParams, DynamicsError, Model, State, Vec3};

type Y = SVector<f64, 5>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CasimirPolicy {
    /// Store the raw numerical `h` and flag drift above the alarm level.
    Monitor,
    /// Rescale `h` back onto the initial sphere after every accepted step.
    Renormalize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Fixed step for RK4 and initial step for the adaptive pair, s.
    pub dt: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub casimir_policy: CasimirPolicy,
    /// Relative drift of `|h|` above which a monitored run is flagged.
    pub casimir_alarm: f64,
    /// Simulated time between stored samples, s.
    pub sample_interval: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Rk4Fixed,
            dt: 1e-4,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            dt_min: 1e-10,
            dt_max: 1e-2,
            casimir_policy: CasimirPolicy::Monitor,
            casimir_alarm: 1e-6,
            sample_interval: 1e-2,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn adaptive(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            scheme: Scheme::Rk45Adaptive,
            rel_tol,
            abs_tol,
            dt: 1e-4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        let positive = [
            ("dt", self.dt),
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
            ("casimir_alarm", self.casimir_alarm),
            ("sample_interval", self.sample_interval),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(IntegrationError::InvalidConfig(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.dt_min > self.dt_max {
            return Err(IntegrationError::InvalidConfig(format!(
                "dt_min ({}) exceeds dt_max ({})",
                self.dt_min, self.dt_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub state: State,
    /// Passive slug angle, rad.
    pub beta: f64,
    pub ke: f64,
    /// Nutation angle, rad.
    pub gamma: f64,
    pub casimir_rel_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// The run finished but `|h|` drifted past the configured alarm.
    CasimirAlarm {
        max_rel_err: f64,
    },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::CasimirAlarm { .. } => "casimir_alarm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub params: DamperParams,
    pub termination: Termination,
    /// Largest `| |h| - |h(0)| | / |h(0)|` over every accepted step.
    pub casimir_max_rel_err: f64,
    /// Largest relative rescaling applied under [`CasimirPolicy::Renormalize`].
    pub max_renormalization: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory has at least the initial sample")
    }

    pub fn t_end(&self) -> f64 {
        self.last().t
    }
}

#[derive(Debug, Error)]
pub enum IntegrationError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid initial state: {0}")]
    InvalidInitialState(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("step size underflow at t = {t} s (dt = {dt:e} s); the problem looks stiff")]
    StepUnderflow {
        t: f64,
        dt: f64,
        partial: Box<Trajectory>,
    },
    #[error("non-finite state at t = {t} s: h = [{}, {}, {}], beta_dot = {}", state.h.x, state.h.y, state.h.z, state.beta_dot)]
    NonFinite {
        t: f64,
        state: State,
        partial: Option<Box<Trajectory>>,
    },
}

impl IntegrationError {
    /// Samples produced before the failure, if any.
    pub fn partial(&self) -> Option<&Trajectory> {
        match self {
            IntegrationError::StepUnderflow { partial, .. } => Some(partial),
            IntegrationError::NonFinite { partial, .. } => partial.as_deref(),
            _ => None,
        }
    }
}

fn pack(s: &State, beta: f64) -> Y {
    Y::new(s.h.x, s.h.y, s.h.z, s.beta_dot, beta)
}

fn unpack(y: &Y) -> (State, f64) {
    (State::new(Vec3::new(y[0], y[1], y[2]), y[3]), y[4])
}

fn eval(model: &Model, y: &Y) -> Result<Y, IntegrationError> {
    let (s, _) = unpack(y);
    let d = model.rhs(&s)?;
    let out = Y::new(d.dh.x, d.dh.y, d.dh.z, d.dbeta_dot, s.beta_dot);
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(IntegrationError::NonFinite {
            t: f64::NAN,
            state: s,
            partial: None,
        })
    }
}

fn rk4(model: &Model, y: &Y, dt: f64) -> Result<Y, IntegrationError> {
    let k1 = eval(model, y)?;
    let k2 = eval(model, &(y + k1 * (dt / 2.0)))?;
    let k3 = eval(model, &(y + k2 * (dt / 2.0)))?;
    let k4 = eval(model, &(y + k3 * dt))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

// Dormand–Prince 5(4) tableau
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand–Prince step; returns the fifth-order solution and the
/// difference to the embedded fourth-order one.
fn dopri(model: &Model, y: &Y, dt: f64) -> Result<(Y, Y), IntegrationError> {
    let k1 = eval(model, y)?;
    let k2 = eval(model, &(y + k1 * (A21 * dt)))?;
    let k3 = eval(model, &(y + (k1 * A31 + k2 * A32) * dt))?;
    let k4 = eval(model, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * dt))?;
    let k5 = eval(
        model,
        &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * dt),
    )?;
    let k6 = eval(
        model,
        &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * dt),
    )?;
    let y_new = y + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * dt;
    let k7 = eval(model, &y_new)?;
    let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * dt;
    Ok((y_new, err))
}

fn error_norm(err: &Y, y0: &Y, y1: &Y, cfg: &IntegratorConfig) -> f64 {
    let sum: f64 = (0..4)
        .map(|i| {
            let scale = cfg.abs_tol + cfg.rel_tol * y0[i].abs().max(y1[i].abs());
            (err[i] / scale).powi(2)
        })
        .sum();
    (sum / 4.0).sqrt()
}

/// Advance `s` by one step of `scheme`. The embedded pair also returns its
/// scaled local error estimate (≤ 1 means the step meets `cfg`'s tolerances).
pub fn step(
    model: &Model,
    s: &State,
    dt: f64,
    scheme: Scheme,
    cfg: &IntegratorConfig,
) -> Result<(State, Option<f64>), IntegrationError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(IntegrationError::InvalidConfig(format!(
            "dt must be > 0, got {dt}"
        )));
    }
    let y = pack(s, 0.0);
    let result = match scheme {
        Scheme::Rk4Fixed => (rk4(model, &y, dt)?, None),
        Scheme::Rk45Adaptive => {
            let (y1, err) = dopri(model, &y, dt)?;
            let norm = error_norm(&err, &y, &y1, cfg);
            (y1, Some(norm))
        }
    };
    let (next, _) = unpack(&result.0);
    if !next.is_finite() {
        return Err(IntegrationError::NonFinite {
            t: dt,
            state: next,
            partial: None,
        });
    }
    Ok((next, result.1))
}

struct Recorder<'a> {
    model: &'a Model,
    cfg: &'a IntegratorConfig,
    h0: f64,
    samples: Vec<Sample>,
    casimir_max: f64,
    renorm_max: f64,
    accepted: usize,
    rejected: usize,
}

impl<'a> Recorder<'a> {
    fn casimir(&self, s: &State) -> f64 {
        (s.h.norm() - self.h0).abs() / self.h0
    }

    /// Bookkeeping after an accepted step; may rescale `y` in place.
    fn accept(&mut self, y: &mut Y) {
        self.accepted += 1;
        let norm = Vec3::new(y[0], y[1], y[2]).norm();
        let drift = (norm - self.h0).abs() / self.h0;
        match self.cfg.casimir_policy {
            CasimirPolicy::Monitor => self.casimir_max = self.casimir_max.max(drift),
            CasimirPolicy::Renormalize => {
                let scale = self.h0 / norm;
                self.renorm_max = self.renorm_max.max((scale - 1.0).abs());
                for i in 0..3 {
                    y[i] *= scale;
                }
                let (s, _) = unpack(y);
                self.casimir_max = self.casimir_max.max(self.casimir(&s));
            }
        }
    }

    fn record(&mut self, t: f64, y: &Y) {
        let (state, beta) = unpack(y);
        self.samples.push(Sample {
            t,
            state,
            beta,
            ke: self.model.kinetic_energy(&state),
            gamma: nutation_angle(&state).unwrap_or(f64::NAN),
            casimir_rel_err: self.casimir(&state),
        });
    }

    fn finish(self) -> Trajectory {
        let termination = match self.cfg.casimir_policy {
            CasimirPolicy::Monitor if self.casimir_max > self.cfg.casimir_alarm => {
                Termination::CasimirAlarm {
                    max_rel_err: self.casimir_max,
                }
            }
            _ => Termination::Completed,
        };
        Trajectory {
            samples: self.samples,
            params: self.model.params,
            termination,
            casimir_max_rel_err: self.casimir_max,
            max_renormalization: self.renorm_max,
            steps_accepted: self.accepted,
            steps_rejected: self.rejected,
        }
    }

    fn fail_non_finite(self, t: f64, y: &Y) -> IntegrationError {
        let (state, _) = unpack(y);
        IntegrationError::NonFinite {
            t,
            state,
            partial: Some(Box::new(self.finish())),
        }
    }
}

/// Integrate from `s0` over `[0, t_end]`.
pub fn integrate(
    params: &DamperParams,
    s0: State,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrationError> {
    let model = Model::new(*params)?;
    integrate_model(&model, s0, t_end, cfg)
}

pub fn integrate_model(
    model: &Model,
    s0: State,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrationError> {
    cfg.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(IntegrationError::InvalidConfig(format!(
            "t_end must be > 0, got {t_end}"
        )));
    }
    if !s0.is_finite() {
        return Err(IntegrationError::InvalidInitialState(
            "state must be finite".into(),
        ));
    }
    let h0 = s0.h.norm();
    if h0 == 0.0 {
        return Err(IntegrationError::InvalidInitialState(
            "|h| must be > 0".into(),
        ));
    }

    let mut rec = Recorder {
        model,
        cfg,
        h0,
        samples: Vec::new(),
        casimir_max: 0.0,
        renorm_max: 0.0,
        accepted: 0,
        rejected: 0,
    };
    let mut y = pack(&s0, 0.0);
    rec.record(0.0, &y);

    match cfg.scheme {
        Scheme::Rk4Fixed => run_fixed(&mut rec, &mut y, t_end)?,
        Scheme::Rk45Adaptive => run_adaptive(&mut rec, &mut y, t_end)?,
    }
    Ok(rec.finish())
}

fn run_fixed(rec: &mut Recorder<'_>, y: &mut Y, t_end: f64) -> Result<(), IntegrationError> {
    let dt = rec.cfg.dt;
    let n_steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as u64;
    let stride = ((rec.cfg.sample_interval / dt).round() as u64).max(1);
    let mut t_prev = 0.0;
    for k in 1..=n_steps {
        let t = if k == n_steps { t_end } else { k as f64 * dt };
        let next = match rk4(rec.model, y, t - t_prev) {
            Ok(next) if next.iter().all(|v| v.is_finite()) => next,
            Ok(bad) => return Err(take(rec).fail_non_finite(t, &bad)),
            Err(IntegrationError::NonFinite { state, .. }) => {
                return Err(take(rec).fail_non_finite(t_prev, &pack(&state, 0.0)))
            }
            Err(e) => return Err(e),
        };
        *y = next;
        rec.accept(y);
        if k % stride == 0 || k == n_steps {
            rec.record(t, y);
        }
        t_prev = t;
    }
    Ok(())
}

fn run_adaptive(rec: &mut Recorder<'_>, y: &mut Y, t_end: f64) -> Result<(), IntegrationError> {
    let cfg = *rec.cfg;
    let interval = cfg.sample_interval;
    let n_samples = ((t_end / interval) - 1e-9).ceil().max(1.0) as u64;
    let mut t = 0.0;
    let mut dt = cfg.dt.clamp(cfg.dt_min, cfg.dt_max);
    for j in 1..=n_samples {
        let target = if j == n_samples {
            t_end
        } else {
            j as f64 * interval
        };
        while t < target {
            let remaining = target - t;
            let clipped = remaining <= dt * (1.0 + 1e-9);
            let h = if clipped { remaining } else { dt };
            let (y_new, err) = match dopri(rec.model, y, h) {
                Ok(r) => r,
                Err(IntegrationError::NonFinite { state, .. }) => {
                    return Err(take(rec).fail_non_finite(t, &pack(&state, 0.0)))
                }
                Err(e) => return Err(e),
            };
            let norm = error_norm(&err, y, &y_new, &cfg);
            let factor = if norm == 0.0 {
                5.0
            } else {
                (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            if norm <= 1.0 && y_new.iter().all(|v| v.is_finite()) {
                *y = y_new;
                rec.accept(y);
                t = if clipped { target } else { t + h };
                // a step shortened to hit a sample time says nothing about the next one
                if !clipped || factor < 1.0 {
                    dt = (h * factor).min(cfg.dt_max);
                }
            } else {
                rec.rejected += 1;
                dt = h * factor.min(1.0);
                if dt < cfg.dt_min {
                    let partial = Box::new(take(rec).finish());
                    return Err(IntegrationError::StepUnderflow { t, dt, partial });
                }
            }
        }
        rec.record(t, y);
    }
    Ok(())
}

fn take<'a>(rec: &mut Recorder<'a>) -> Recorder<'a> {
    Recorder {
        model: rec.model,
        cfg: rec.cfg,
        h0: rec.h0,
        samples: std::mem::take(&mut rec.samples),
        casimir_max: rec.casimir_max,
        renorm_max: rec.renorm_max,
        accepted: rec.accepted,
        rejected: rec.rejected,
    }
}
