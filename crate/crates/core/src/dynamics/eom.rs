use serde::{Deserialize, Serialize};

use super::{DamperParams, DynamicsError, InertiaSet, SlugModel, Vec3};

fn e3() -> Vec3 {
    Vec3::z()
}

/// Body-frame angular momentum about the system centre of mass and the
/// slug rate relative to the ring. The slug angle itself is cyclic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// kg·m²/s
    pub h: Vec3,
    /// rad/s
    pub beta_dot: f64,
}

impl State {
    pub fn new(h: Vec3, beta_dot: f64) -> Self {
        Self { h, beta_dot }
    }

    /// State reached by spinning the ring at `omega` with the slug moving at
    /// `beta_dot` relative to it.
    pub fn from_body_rates(inertia: &InertiaSet, omega: Vec3, beta_dot: f64) -> Self {
        Self {
            h: angular_momentum(inertia, &omega, beta_dot),
            beta_dot,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.h.iter().all(|x| x.is_finite()) && self.beta_dot.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub dh: Vec3,
    pub dbeta_dot: f64,
}

/// `h = I_r Ω + I_s Ω_s` with `Ω_s = Ω + β̇ e₃`.
pub fn angular_momentum(inertia: &InertiaSet, omega: &Vec3, beta_dot: f64) -> Vec3 {
    let omega_s = omega + e3() * beta_dot;
    inertia.ring * omega + inertia.slug * omega_s
}

/// Ring and slug angular velocities `(Ω, Ω_s)` for a state.
pub fn omega_from_state(inertia: &InertiaSet, s: &State) -> (Vec3, Vec3) {
    let slug_axial = inertia.slug * e3() * s.beta_dot;
    let omega = inertia.combined_inverse() * (s.h - slug_axial);
    (omega, omega + e3() * s.beta_dot)
}

/// `dh/dt = h × [(I_r + I_s)⁻¹ (h + I_r β̇ e₃)]`
pub fn h_rhs(inertia: &InertiaSet, s: &State) -> Vec3 {
    let omega_s = inertia.combined_inverse() * (s.h + inertia.ring * e3() * s.beta_dot);
    s.h.cross(&omega_s)
}

/// Torque coefficient of the wall friction: `C_d (R - d)²`.
pub fn friction_coefficient(inertia: &InertiaSet, params: &DamperParams) -> f64 {
    let arm = params.ring_radius - inertia.offset;
    params.drag_coefficient * arm * arm
}

fn axial_inertias(inertia: &InertiaSet) -> Result<(f64, f64), DynamicsError> {
    let (izr, izs) = (inertia.ring[(2, 2)], inertia.slug[(2, 2)]);
    if izr.is_nan() || izr <= 0.0 {
        return Err(DynamicsError::Domain {
            name: "I_zr",
            value: izr,
            reason: "must be > 0",
        });
    }
    if izs.is_nan() || izs <= 0.0 {
        return Err(DynamicsError::Domain {
            name: "I_zs",
            value: izs,
            reason: "must be > 0",
        });
    }
    Ok((izr, izs))
}

/// Slug acceleration for diagonal inertias: friction decay plus the
/// `h_x h_y` coupling through the transverse inertia asymmetry.
pub fn beta_ddot_point(
    inertia: &InertiaSet,
    params: &DamperParams,
    s: &State,
) -> Result<f64, DynamicsError> {
    let (izr, izs) = axial_inertias(inertia)?;
    let c = friction_coefficient(inertia, params);
    let ix = inertia.ring[(0, 0)] + inertia.slug[(0, 0)];
    let iy = inertia.ring[(1, 1)] + inertia.slug[(1, 1)];
    let hxy = s.h.x * s.h.y;
    Ok(-s.beta_dot * c * (izs + izr) / (izs * izr) + hxy / (iy * izs) - hxy / (ix * izs))
}

/// Slug acceleration when the slug tensor carries an x–z product of inertia.
///
/// The ring obeys `I_zr Ω̇_z = C_d (R-d)² β̇`. Differentiating the third row
/// of `h = I_r Ω + I_s Ω_s` and eliminating `Ω̇_x` through
/// `Ω̇ = (I_r + I_s)⁻¹ (ḣ - I_s e₃ β̈)` leaves one linear equation in β̈.
pub fn beta_ddot_distributed(
    inertia: &InertiaSet,
    params: &DamperParams,
    s: &State,
) -> Result<f64, DynamicsError> {
    let (izr, izs) = axial_inertias(inertia)?;
    let c = friction_coefficient(inertia, params);
    let ixz = inertia.product_xz();
    let minv = inertia.combined_inverse();

    let dh = h_rhs(inertia, s);
    let omega_dot_x_from_h = (minv * dh).x;
    let omega_dot_x_per_beta_ddot = (minv * inertia.slug * e3()).x;
    let axial_total = inertia.ring[(2, 2)] + inertia.slug[(2, 2)];

    let coeff = izs - ixz * omega_dot_x_per_beta_ddot;
    if !coeff.is_finite() || coeff.abs() <= f64::EPSILON * izs {
        return Err(DynamicsError::DegenerateClosure(coeff));
    }
    let forcing = dh.z - ixz * omega_dot_x_from_h - c * s.beta_dot * axial_total / izr;
    Ok(forcing / coeff)
}

/// Complete right-hand side. With `C_d = 0` the slug keeps its relative
/// rate (`β̈ = 0`) and the momentum equation is that of a rigid body.
pub fn full_rhs(
    inertia: &InertiaSet,
    params: &DamperParams,
    s: &State,
) -> Result<Derivative, DynamicsError> {
    let dh = h_rhs(inertia, s);
    if params.drag_coefficient == 0.0 {
        return Ok(Derivative { dh, dbeta_dot: 0.0 });
    }
    let dbeta_dot = match params.slug {
        SlugModel::PointMass { .. } => beta_ddot_point(inertia, params, s)?,
        SlugModel::Distributed { .. } => beta_ddot_distributed(inertia, params, s)?,
    };
    Ok(Derivative { dh, dbeta_dot })
}

/// `½ Ωᵀ I_r Ω + ½ Ω_sᵀ I_s Ω_s`, J.
pub fn kinetic_energy(inertia: &InertiaSet, s: &State) -> f64 {
    let (omega, omega_s) = omega_from_state(inertia, s);
    0.5 * omega.dot(&(inertia.ring * omega)) + 0.5 * omega_s.dot(&(inertia.slug * omega_s))
}

/// Time derivative of the kinetic energy along `deriv`, by the chain rule
/// through `(h, β̇)`.
pub fn kinetic_energy_rate(inertia: &InertiaSet, s: &State, deriv: &Derivative) -> f64 {
    let minv = inertia.combined_inverse();
    let (omega, omega_s) = omega_from_state(inertia, s);
    let grad_h = minv * s.h;
    let grad_beta_dot = -omega.dot(&(inertia.ring * minv * inertia.slug * e3()))
        + omega_s.dot(&(inertia.slug * minv * inertia.ring * e3()));
    grad_h.dot(&deriv.dh) + grad_beta_dot * deriv.dbeta_dot
}

/// Power dissipated by the friction pair, `C_d (R-d)² β̇²`.
pub fn dissipation_power(inertia: &InertiaSet, params: &DamperParams, s: &State) -> f64 {
    friction_coefficient(inertia, params) * s.beta_dot * s.beta_dot
}

/// Angle between `h` and the body z axis, in `[0, π]`.
pub fn nutation_angle(s: &State) -> Result<f64, DynamicsError> {
    if s.h.norm() == 0.0 {
        return Err(DynamicsError::UndefinedAngle);
    }
    Ok(s.h.x.hypot(s.h.y).atan2(s.h.z))
}

/// Size of the right-hand side relative to the natural rate `|h| ‖(I_r+I_s)⁻¹‖`.
pub fn scaled_residual(
    inertia: &InertiaSet,
    params: &DamperParams,
    s: &State,
) -> Result<f64, DynamicsError> {
    let d = full_rhs(inertia, params, s)?;
    let h = s.h.norm();
    let rate = h * inertia.combined_inverse().norm() + s.beta_dot.abs();
    if rate == 0.0 {
        return Ok(d.dh.norm().max(d.dbeta_dot.abs()));
    }
    Ok((d.dh.norm() / (h.max(f64::MIN_POSITIVE) * rate)).max(d.dbeta_dot.abs() / (rate * rate)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::assemble_inertia;
    use approx::assert_relative_eq;

    fn point() -> (DamperParams, InertiaSet) {
        let p = DamperParams::paper_point_mass();
        (p, assemble_inertia(&p).unwrap())
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs())
    }

    #[test]
    fn locked_slug_is_rigid_body() {
        let (_, set) = point();
        let s = State::new(Vec3::new(0.1, -0.2, 0.9), 0.0);
        let (omega, omega_s) = omega_from_state(&set, &s);
        assert_eq!(omega, omega_s);
        let direct = set.combined().try_inverse().unwrap() * s.h;
        assert!((omega - direct).norm() < 1e-12 * direct.norm());
    }

    #[test]
    fn relative_rate_only() {
        let (_, set) = point();
        let s = State::new(Vec3::zeros(), 3.0);
        let (omega, omega_s) = omega_from_state(&set, &s);
        let expected = -(set.combined_inverse() * set.slug * Vec3::z() * 3.0);
        assert!((omega - expected).norm() < 1e-15);
        assert_relative_eq!((omega_s - omega).z, 3.0, max_relative = 1e-14);
    }

    #[test]
    fn initial_condition_round_trip() {
        let (_, set) = point();
        let s = State::from_body_rates(&set, Vec3::new(100.0, 0.0, 400.0), 0.0);
        // forward map evaluated by hand in extended precision
        assert_relative_eq!(s.h.x, 0.16666666666666667, max_relative = 1e-14);
        assert_eq!(s.h.y, 0.0);
        assert_relative_eq!(s.h.z, 1.0049875311720698, max_relative = 1e-14);
        let (omega, _) = omega_from_state(&set, &s);
        assert_relative_eq!(omega.x, 100.0, max_relative = 1e-12);
        assert!(omega.y.abs() < 1e-12);
        assert_relative_eq!(omega.z, 400.0, max_relative = 1e-12);
    }

    #[test]
    fn axis_spins_are_fixed_points() {
        let (p, set) = point();
        for h in [
            Vec3::new(0.0, 0.0, 1.3),
            Vec3::new(1.3, 0.0, 0.0),
            Vec3::new(0.0, -1.3, 0.0),
        ] {
            let d = full_rhs(&set, &p, &State::new(h, 0.0)).unwrap();
            assert_eq!(d.dh, Vec3::zeros());
            assert_eq!(d.dbeta_dot, 0.0);
        }
    }

    #[test]
    fn beta_ddot_point_cases() {
        let (p, set) = point();
        let at_rest = State::new(Vec3::new(0.0, 0.4, 1.0), 0.0);
        assert_eq!(beta_ddot_point(&set, &p, &at_rest).unwrap(), 0.0);

        let free = p.dissipationless();
        let s = State::new(Vec3::new(0.3, 0.2, 1.0), 5.0);
        let coupling = beta_ddot_point(&set, &free, &s).unwrap();
        let ix = set.ring[(0, 0)] + set.slug[(0, 0)];
        let iy = set.ring[(1, 1)] + set.slug[(1, 1)];
        let izs = set.slug[(2, 2)];
        assert_relative_eq!(
            coupling,
            0.06 / (iy * izs) - 0.06 / (ix * izs),
            max_relative = 1e-14
        );

        // -C_d (R-d)² (I_zs + I_zr)/(I_zs I_zr), evaluated in extended precision
        let spin = State::new(Vec3::zeros(), 1.0);
        assert_relative_eq!(
            beta_ddot_point(&set, &p, &spin).unwrap(),
            -327.6218602886762,
            max_relative = 1e-13
        );
    }

    #[test]
    fn dissipationless_slug_is_locked() {
        let (p, set) = point();
        let s = State::new(Vec3::new(0.3, 0.2, 1.0), 2.0);
        let d = full_rhs(&set, &p.dissipationless(), &s).unwrap();
        assert_eq!(d.dbeta_dot, 0.0);
        assert_eq!(d.dh, h_rhs(&set, &s));
        let locked = State::new(s.h, 0.0);
        let d0 = full_rhs(&set, &p.dissipationless(), &locked).unwrap();
        let scale = s.h.norm() * set.combined_inverse().norm() * d0.dh.norm();
        assert!(kinetic_energy_rate(&set, &locked, &d0).abs() < 1e-14 * scale);
    }

    #[test]
    fn zero_axial_slug_inertia_rejected() {
        let (p, set) = point();
        let broken = InertiaSet::new(set.offset, set.ring, crate::dynamics::Mat3::zeros()).unwrap();
        assert!(beta_ddot_point(&broken, &p, &State::new(Vec3::z(), 0.0)).is_err());
    }

    #[test]
    fn distributed_reduces_without_offset() {
        let mut p = DamperParams::paper_distributed();
        if let SlugModel::Distributed {
            ref mut vertical_offset,
            ..
        } = p.slug
        {
            *vertical_offset = 0.0;
        }
        let set = assemble_inertia(&p).unwrap();
        let s = State::new(Vec3::new(0.2, -0.15, 1.0), 7.5);
        let a = beta_ddot_distributed(&set, &p, &s).unwrap();
        let b = beta_ddot_point(&set, &p, &s).unwrap();
        // the coupling term is a difference of two nearly equal quotients
        let izs = set.slug[(2, 2)];
        let hxy = (s.h.x * s.h.y).abs();
        let scale = hxy / ((set.ring[(0, 0)] + set.slug[(0, 0)]) * izs) + b.abs();
        assert!((a - b).abs() < 1e-13 * scale, "{a} vs {b}");
    }

    #[test]
    fn distributed_equilibrium_without_spin() {
        let p = DamperParams::paper_distributed();
        let set = assemble_inertia(&p).unwrap();
        let s = State::new(Vec3::new(0.0, 0.0, 1.0), 0.0);
        // the lifted arc tilts the principal axis, so only the y axis stays a fixed point
        assert!(h_rhs(&set, &s).norm() > 0.0);
        let on_y = State::new(Vec3::new(0.0, 1.0, 0.0), 0.0);
        assert_eq!(full_rhs(&set, &p, &on_y).unwrap().dbeta_dot, 0.0);
        assert_eq!(h_rhs(&set, &on_y), Vec3::zeros());
    }

    #[test]
    fn energy_rate_is_friction_power() {
        let (p, set) = point();
        let s = State::new(Vec3::new(0.15, 0.07, 1.0), 4.0);
        let d = full_rhs(&set, &p, &s).unwrap();
        let rate = kinetic_energy_rate(&set, &s, &d);
        assert!(rel(rate, -dissipation_power(&set, &p, &s)) < 1e-10);
    }

    #[test]
    fn kinetic_energy_cases() {
        let (_, set) = point();
        assert_eq!(kinetic_energy(&set, &State::new(Vec3::zeros(), 0.0)), 0.0);
        let locked = State::new(Vec3::new(0.1, 0.2, 0.9), 0.0);
        let rigid = 0.5
            * locked
                .h
                .dot(&(set.combined().try_inverse().unwrap() * locked.h));
        assert_relative_eq!(kinetic_energy(&set, &locked), rigid, max_relative = 1e-12);
        let s0 = State::from_body_rates(&set, Vec3::new(100.0, 0.0, 400.0), 0.0);
        assert_relative_eq!(
            kinetic_energy(&set, &s0),
            209.3308395677473,
            max_relative = 1e-12
        );
    }

    #[test]
    fn nutation_angle_cases() {
        assert_eq!(nutation_angle(&State::new(Vec3::z(), 0.0)).unwrap(), 0.0);
        let quarter = nutation_angle(&State::new(Vec3::new(1.0, 0.0, 1.0), 0.0)).unwrap();
        assert_relative_eq!(quarter, std::f64::consts::FRAC_PI_4, max_relative = 1e-15);
        let down = nutation_angle(&State::new(-Vec3::z(), 0.0)).unwrap();
        assert_relative_eq!(down, std::f64::consts::PI);
        assert!(matches!(
            nutation_angle(&State::new(Vec3::zeros(), 1.0)),
            Err(DynamicsError::UndefinedAngle)
        ));
        let (_, set) = point();
        let s0 = State::from_body_rates(&set, Vec3::new(100.0, 0.0, 400.0), 0.0);
        assert_relative_eq!(
            nutation_angle(&s0).unwrap(),
            0.16434379463183425,
            max_relative = 1e-13
        );
    }
}
