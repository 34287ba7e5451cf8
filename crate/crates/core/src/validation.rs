//! Runtime invariant suite: independent re-derivations of the model's
//! building blocks, compared against the production code paths.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::equilibria;
use crate::dynamics::{
    assemble_inertia, beta_ddot_distributed, beta_ddot_point, center_of_mass_offset,
    distributed_slug_inertia, friction_coefficient, full_rhs, h_rhs, kinetic_energy_rate,
    omega_from_state, point_slug_inertia, DamperParams, DistributedSlug, DynamicsError, InertiaSet,
    SlugModel, State, Vec3,
};
use crate::integrators::{integrate, IntegratorConfig};

/// Outcome of one invariant: the worst observed error against its bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, worst: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            worst,
            tolerance,
            passed: worst.is_finite() && worst <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            writeln!(
                f,
                "{}  {:<width$}  worst {:.3e}  tol {:.1e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.worst,
                c.tolerance
            )?;
        }
        Ok(())
    }
}

fn e3() -> Vec3 {
    Vec3::z()
}

fn relative(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

/// Five-point Gauss–Legendre on `panels` equal sub-intervals of `[a, b]`.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const NODES: [f64; 5] = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * width;
            NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(x, w)| w * f(mid + 0.5 * width * x))
                .sum::<f64>()
        })
        .sum::<f64>()
        * 0.5
        * width
}

/// Diagonal of a thin arc of linear density `λ` on radius `R` spanning
/// `[-φ/2, φ/2]`, about a point shifted by `d` along e₁, by quadrature.
pub fn thin_arc_quadrature(slug: &DistributedSlug, radius: f64, d: f64) -> Vec3 {
    let lambda = slug.density * PI * slug.cross_section_radius.powi(2);
    let half = slug.fill_angle / 2.0;
    let x = |t: f64| radius * t.cos() - d;
    let y = |t: f64| radius * t.sin();
    let q = |f: &dyn Fn(f64) -> f64| lambda * radius * gauss_legendre(f, -half, half, 64);
    Vec3::new(
        q(&|t| y(t).powi(2)),
        q(&|t| x(t).powi(2)),
        q(&|t| x(t).powi(2) + y(t).powi(2)),
    )
}

/// Reproducible states around the reference initial momentum: `h` uniform in
/// a cube of half-width `|h₀|` and `β̇` uniform in ±50 rad/s.
pub fn random_states(count: usize, h_scale: f64, seed: u64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let h = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            State::new(h * h_scale, rng.gen_range(-50.0..50.0))
        })
        .collect()
}

fn reference_h0(inertia: &InertiaSet) -> State {
    State::from_body_rates(inertia, Vec3::new(100.0, 0.0, 400.0), 0.0)
}

/// `h_rhs` against `−Ω_s × h` with Ω recovered by an LU solve.
pub fn check_cross_product_form(
    params: &DamperParams,
    states: &[State],
) -> Result<Check, DynamicsError> {
    let inertia = assemble_inertia(params)?;
    let lu = inertia.combined().lu();
    let mut worst = 0.0f64;
    for s in states {
        let omega = lu
            .solve(&(s.h - inertia.slug * e3() * s.beta_dot))
            .ok_or(DynamicsError::SingularInertia)?;
        let omega_s = omega + e3() * s.beta_dot;
        let oracle = -omega_s.cross(&s.h);
        let scale = s.h.norm() * omega_s.norm();
        worst = worst.max((h_rhs(&inertia, s) - oracle).norm() / scale.max(f64::MIN_POSITIVE));
    }
    Ok(Check::new("h_rhs equals -Omega_s x h", worst, 1e-12))
}

/// Closed-form arc diagonals against quadrature, at the given fill angles.
pub fn check_arc_quadrature(fill_angles_deg: &[f64]) -> Result<Check, DynamicsError> {
    let (radius, ring_mass) = (0.025, 2.0);
    let mut worst = 0.0f64;
    for &deg in fill_angles_deg {
        let slug = DistributedSlug {
            density: 1000.0,
            cross_section_radius: 0.005,
            fill_angle: deg.to_radians(),
            vertical_offset: 0.0,
        };
        let d = center_of_mass_offset(slug.mass(radius), ring_mass, radius)?;
        let closed = distributed_slug_inertia(&slug, radius, d)?.diagonal();
        let oracle = thin_arc_quadrature(&slug, radius, d);
        for i in 0..3 {
            worst = worst.max(relative(closed[i], oracle[i], oracle[i].abs()));
        }
    }
    Ok(Check::new(
        "arc closed forms equal quadrature",
        worst,
        1e-10,
    ))
}

/// A vanishing arc of the same mass reproduces the point-slug tensor.
pub fn check_point_limit(fill_angle: f64) -> Result<Check, DynamicsError> {
    let (radius, ring_mass, mass) = (0.05, 2.0, 0.005);
    let cross_section_radius = (mass / (1000.0 * PI * radius * fill_angle)).sqrt();
    let slug = DistributedSlug {
        density: 1000.0,
        cross_section_radius,
        fill_angle,
        vertical_offset: 0.0,
    };
    let d = center_of_mass_offset(mass, ring_mass, radius)?;
    let arc = distributed_slug_inertia(&slug, radius, d)?;
    let point = point_slug_inertia(mass, radius, d)?;
    let worst = (arc - point).abs().max() / point.abs().max();
    Ok(Check::new("vanishing arc equals point slug", worst, 1e-8))
}

/// Chain-rule energy rate against the friction power along a trajectory.
pub fn check_energy_rate(
    params: &DamperParams,
    t_end: f64,
) -> Result<Check, crate::integrators::IntegrationError> {
    let inertia = assemble_inertia(params)?;
    let traj = integrate(
        params,
        reference_h0(&inertia),
        t_end,
        &IntegratorConfig::default(),
    )?;
    let c = friction_coefficient(&inertia, params);
    let mut worst = 0.0f64;
    for sample in traj.samples.iter().filter(|s| s.state.beta_dot != 0.0) {
        let s = &sample.state;
        let deriv = full_rhs(&inertia, params, s)?;
        let power = c * s.beta_dot.powi(2);
        // near β̇ = 0 the rate is a small difference of large terms
        let momentum_part = (inertia.combined_inverse() * s.h).dot(&deriv.dh);
        let slug_part = kinetic_energy_rate(&inertia, s, &deriv) - momentum_part;
        let scale = momentum_part.abs() + slug_part.abs() + power;
        worst = worst.max(relative(
            kinetic_energy_rate(&inertia, s, &deriv),
            -power,
            scale,
        ));
    }
    Ok(Check::new(
        "energy rate equals -C_d (R-d)^2 beta_dot^2",
        worst,
        1e-8,
    ))
}

/// With no product of inertia the general closure collapses to the
/// diagonal formula. Compared against the size of its largest term.
pub fn check_closure_reduction(
    params: &DamperParams,
    states: &[State],
) -> Result<Check, DynamicsError> {
    let inertia = assemble_inertia(params)?;
    let (izr, izs) = (inertia.ring[(2, 2)], inertia.slug[(2, 2)]);
    let ix = inertia.combined()[(0, 0)];
    let iy = inertia.combined()[(1, 1)];
    let c = friction_coefficient(&inertia, params);
    let mut worst = 0.0f64;
    for s in states {
        let general = beta_ddot_distributed(&inertia, params, s)?;
        let diagonal = beta_ddot_point(&inertia, params, s)?;
        let hxy = (s.h.x * s.h.y).abs();
        let scale = (s.beta_dot * c * (izs + izr) / (izs * izr)).abs()
            + hxy / (iy * izs)
            + hxy / (ix * izs);
        worst = worst.max(relative(general, diagonal, scale));
    }
    Ok(Check::new(
        "general slug closure reduces to diagonal form",
        worst,
        1e-12,
    ))
}

/// Rates of the coupled ring/slug system written in `(Ω, β̇)`: the three
/// momentum rows and the ring's axial torque balance, solved as one 4×4.
fn coupled_rates(inertia: &InertiaSet, c: f64, omega: &Vec3, beta_dot: f64) -> Option<(Vec3, f64)> {
    let m = inertia.combined();
    let is_e3 = inertia.slug * e3();
    let h = m * omega + is_e3 * beta_dot;
    let omega_s = omega + e3() * beta_dot;
    let dh = h.cross(&omega_s);
    let mut a = Matrix4::zeros();
    a.fixed_view_mut::<3, 3>(0, 0).copy_from(&m);
    a.fixed_view_mut::<3, 1>(0, 3).copy_from(&is_e3);
    a[(3, 2)] = inertia.ring[(2, 2)];
    let b = Vector4::new(dh.x, dh.y, dh.z, c * beta_dot);
    let x = a.lu().solve(&b)?;
    Some((Vec3::new(x[0], x[1], x[2]), x[3]))
}

fn coupled_rk4(
    inertia: &InertiaSet,
    c: f64,
    omega: Vec3,
    beta_dot: f64,
    dt: f64,
) -> Option<(Vec3, f64)> {
    let (k1o, k1b) = coupled_rates(inertia, c, &omega, beta_dot)?;
    let (k2o, k2b) = coupled_rates(
        inertia,
        c,
        &(omega + k1o * (dt / 2.0)),
        beta_dot + k1b * dt / 2.0,
    )?;
    let (k3o, k3b) = coupled_rates(
        inertia,
        c,
        &(omega + k2o * (dt / 2.0)),
        beta_dot + k2b * dt / 2.0,
    )?;
    let (k4o, k4b) = coupled_rates(inertia, c, &(omega + k3o * dt), beta_dot + k3b * dt)?;
    Some((
        omega + (k1o + k2o * 2.0 + k3o * 2.0 + k4o) * (dt / 6.0),
        beta_dot + (k1b + 2.0 * k2b + 2.0 * k3b + k4b) * dt / 6.0,
    ))
}

fn central_difference(
    inertia: &InertiaSet,
    c: f64,
    omega: Vec3,
    beta_dot: f64,
    step: f64,
) -> Option<f64> {
    let forward = coupled_rk4(inertia, c, omega, beta_dot, step)?;
    let backward = coupled_rk4(inertia, c, omega, beta_dot, -step)?;
    Some((forward.1 - backward.1) / (2.0 * step))
}

/// Slug acceleration against a Richardson-extrapolated central difference
/// of `β̇`, obtained by stepping the coupled system forwards and backwards.
pub fn check_slug_acceleration(
    params: &DamperParams,
    states: &[State],
    step: f64,
) -> Result<Check, DynamicsError> {
    let inertia = assemble_inertia(params)?;
    let c = friction_coefficient(&inertia, params);
    let mut worst = 0.0f64;
    for s in states {
        let (omega, _) = omega_from_state(&inertia, s);
        let coarse = central_difference(&inertia, c, omega, s.beta_dot, step);
        let fine = central_difference(&inertia, c, omega, s.beta_dot, step / 2.0);
        let (coarse, fine) = coarse.zip(fine).ok_or(DynamicsError::SingularInertia)?;
        let oracle = (4.0 * fine - coarse) / 3.0;
        let model = full_rhs(&inertia, params, s)?.dbeta_dot;
        worst = worst.max(relative(model, oracle, oracle.abs()));
    }
    Ok(Check::new(
        "slug acceleration equals coupled-body difference",
        worst,
        1e-6,
    ))
}

/// `ḣ · h = 0` at the reference initial condition and over random states.
pub fn check_orthogonality(
    params: &DamperParams,
    states: &[State],
) -> Result<Check, DynamicsError> {
    let inertia = assemble_inertia(params)?;
    let mut worst = 0.0f64;
    for s in std::iter::once(&reference_h0(&inertia)).chain(states) {
        let dh = full_rhs(&inertia, params, s)?.dh;
        let denom = s.h.norm() * dh.norm();
        if denom > 0.0 {
            worst = worst.max((dh.dot(&s.h) / denom).abs());
        }
    }
    Ok(Check::new("momentum rate orthogonal to h", worst, 1e-12))
}

/// `h → (Ω, Ω_s) → h` round trip.
pub fn check_reconstruction(
    params: &DamperParams,
    states: &[State],
) -> Result<Check, DynamicsError> {
    let inertia = assemble_inertia(params)?;
    let mut worst = 0.0f64;
    for s in states {
        let (omega, omega_s) = omega_from_state(&inertia, s);
        let h = inertia.ring * omega + inertia.slug * omega_s;
        worst = worst.max((h - s.h).norm() / s.h.norm());
    }
    Ok(Check::new(
        "momentum reconstructs from body rates",
        worst,
        1e-12,
    ))
}

pub fn check_equilibria(
    params: &DamperParams,
    h_mag: f64,
) -> Result<Check, crate::analysis::AnalysisError> {
    let worst = equilibria(params, h_mag)?
        .iter()
        .map(|e| e.residual)
        .fold(0.0, f64::max);
    Ok(Check::new("equilibria residuals vanish", worst, 1e-12))
}

fn with_name(mut check: Check, model: &str) -> Check {
    check.name = format!("{model}: {}", check.name);
    check
}

fn centered(params: &DamperParams) -> DamperParams {
    let mut p = *params;
    p.slug = match p.slug {
        SlugModel::PointMass { mass, .. } => SlugModel::PointMass {
            mass,
            vertical_offset: 0.0,
        },
        SlugModel::Distributed {
            density,
            cross_section_radius,
            fill_angle,
            ..
        } => SlugModel::Distributed {
            density,
            cross_section_radius,
            fill_angle,
            vertical_offset: 0.0,
        },
    };
    p
}

/// Full suite on the reference point-mass and distributed configurations.
pub fn run_all() -> ValidationReport {
    let point = DamperParams::paper_point_mass();
    let distributed = DamperParams::paper_distributed();
    let h_scale = reference_h0(&assemble_inertia(&point).expect("reference parameters are valid"))
        .h
        .norm();
    let states = random_states(1000, h_scale, 0x5eed);
    let few = &states[..50];

    let mut checks = Vec::new();
    let mut push = |name: &str, r: Result<Check, String>| match r {
        Ok(c) => checks.push(c),
        Err(e) => checks.push(Check {
            name: format!("{name} ({e})"),
            worst: f64::NAN,
            tolerance: 0.0,
            passed: false,
        }),
    };
    let s = |r: Result<Check, DynamicsError>| r.map_err(|e| e.to_string());

    for (label, p) in [("point mass", &point), ("distributed", &distributed)] {
        push(
            label,
            s(check_cross_product_form(p, &states)).map(|c| with_name(c, label)),
        );
        push(
            label,
            s(check_orthogonality(p, &states)).map(|c| with_name(c, label)),
        );
        push(
            label,
            s(check_reconstruction(p, &states)).map(|c| with_name(c, label)),
        );
        push(
            label,
            s(check_slug_acceleration(p, few, 1e-4)).map(|c| with_name(c, label)),
        );
        let centered = centered(p);
        push(
            label,
            check_equilibria(&centered, h_scale)
                .map(|c| with_name(c, label))
                .map_err(|e| e.to_string()),
        );
    }
    push(
        "quadrature",
        s(check_arc_quadrature(&[30.0, 135.0, 270.0, 360.0])),
    );
    push("point limit", s(check_point_limit(1e-4)));
    push(
        "energy rate",
        check_energy_rate(&point, 20.0).map_err(|e| e.to_string()),
    );
    push(
        "closure",
        s(check_closure_reduction(&centered(&distributed), &states)),
    );
    ValidationReport { checks }
}
