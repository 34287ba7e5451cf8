//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use nutdamp::analysis::{
    angle_from_axis, equilibria, perturbed_seeds, portrait, settling_time, transverse_envelope,
    Axis,
};
use nutdamp::dynamics::{assemble_inertia, SlugModel};
use nutdamp::experiments::{simulate, RunConfig};
use nutdamp::integrators::{integrate, IntegratorConfig, Trajectory};
use nutdamp::validation::{
    check_arc_quadrature, check_closure_reduction, check_cross_product_form, check_energy_rate,
    check_point_limit, random_states,
};
use nutdamp::{DamperParams, State, Vec3};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn point_mass_run() -> Trajectory {
    simulate(&RunConfig::scenario("paper-point-mass").unwrap())
        .unwrap()
        .1
}

fn casimir(traj: &Trajectory) -> Outcome {
    let err = traj.casimir_max_rel_err;
    outcome(
        err < 1e-6,
        format!(
            "max |h| relative drift {err:.3e} over {} s (< 1e-6)",
            traj.t_end()
        ),
    )
}

fn point_mass_settling(traj: &Trajectory) -> Outcome {
    let report = settling_time(traj, 2f64.to_radians());
    let residual = report.residual.to_degrees();
    match report.settling_time {
        Some(t) => outcome(
            (210.0..=390.0).contains(&t) && residual > 0.0,
            format!(
                "settles below 2 deg at {t:.2} s (300 +/- 30%), residual {residual:.4} deg (> 0)"
            ),
        ),
        None => outcome(
            false,
            format!("never settles below 2 deg, residual {residual:.4} deg"),
        ),
    }
}

fn distributed_settling() -> Outcome {
    let (_, traj) = simulate(&RunConfig::scenario("paper-distributed").unwrap()).unwrap();
    let report = settling_time(&traj, 2f64.to_radians());
    let residual = report.residual.to_degrees();
    match report.settling_time {
        Some(t) => outcome(
            (7.0..=13.0).contains(&t) && residual < 0.5,
            format!(
                "settles below 2 deg at {t:.2} s (10 +/- 30%), residual {residual:.4} deg (< 0.5)"
            ),
        ),
        None => outcome(
            false,
            format!("never settles below 2 deg, residual {residual:.4} deg"),
        ),
    }
}

fn dissipationless() -> Outcome {
    let config = RunConfig::scenario("dissipationless").unwrap();
    let (_, traj) = simulate(&config).unwrap();
    let ke0 = traj.first().ke;
    let drift = traj
        .samples
        .iter()
        .map(|s| ((s.ke - ke0) / ke0).abs())
        .fold(0.0, f64::max);

    let h_mag = traj.first().state.h.norm();
    let seeds: Vec<_> = perturbed_seeds(h_mag, 5f64.to_radians())
        .into_iter()
        .filter(|s| !matches!(s.axis, Axis::PlusX | Axis::MinusX))
        .collect();
    let states: Vec<_> = seeds.iter().map(|s| s.state).collect();
    let runs = portrait(&config.params, &states, config.t_end, &config.integrator).unwrap();
    let (mut z_max, mut y_min) = (0.0f64, f64::INFINITY);
    for (seed, run) in seeds.iter().zip(&runs) {
        let widest = run
            .samples
            .iter()
            .map(|s| angle_from_axis(&s.state.h, seed.axis))
            .fold(0.0, f64::max);
        match seed.axis {
            Axis::PlusZ | Axis::MinusZ => z_max = z_max.max(widest),
            _ => y_min = y_min.min(widest),
        }
    }
    let (z_max, y_min) = (z_max.to_degrees(), y_min.to_degrees());
    outcome(
        drift < 1e-6 && z_max < 10.0 && y_min > 45.0,
        format!(
            "KE drift {drift:.3e} (< 1e-6); +/-z probes stay within {z_max:.2} deg (< 10); \
             +/-y probes reach at least {y_min:.1} deg (> 45)"
        ),
    )
}

fn centered(mut params: DamperParams) -> DamperParams {
    params.slug = match params.slug {
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
    params
}

fn fixed_points() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for params in [
        DamperParams::paper_point_mass(),
        centered(DamperParams::paper_distributed()),
    ] {
        for h_mag in [1e-3, 1.0, 1.0187137554726107, 50.0] {
            for point in equilibria(&params, h_mag).unwrap() {
                worst = worst.max(point.residual);
                count += 1;
            }
        }
    }
    outcome(
        worst < 1e-12,
        format!(
            "worst scaled residual {worst:.3e} over {count} axis points, both models (< 1e-12)"
        ),
    )
}

fn oracles() -> Outcome {
    let point = DamperParams::paper_point_mass();
    let distributed = DamperParams::paper_distributed();
    let states = random_states(1000, 1.0187137554726107, 0x5eed);
    let checks = [
        ("a", check_cross_product_form(&point, &states).unwrap()),
        (
            "a'",
            check_cross_product_form(&distributed, &states).unwrap(),
        ),
        (
            "b",
            check_arc_quadrature(&[30.0, 135.0, 270.0, 360.0]).unwrap(),
        ),
        ("c", check_point_limit(1e-4).unwrap()),
        ("d", check_energy_rate(&point, 50.0).unwrap()),
        (
            "e",
            check_closure_reduction(&centered(distributed), &states).unwrap(),
        ),
    ];
    let passed = checks.iter().all(|(_, c)| c.passed);
    let detail = checks
        .iter()
        .map(|(tag, c)| format!("({tag}) {:.1e}/{:.0e}", c.worst, c.tolerance))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(passed, format!("worst/tolerance {detail}"))
}

fn end_state(params: &DamperParams, s0: State, dt: f64) -> State {
    let mut cfg = IntegratorConfig::rk4(dt);
    cfg.sample_interval = 1.0;
    integrate(params, s0, 1.0, &cfg).unwrap().last().state
}

fn integrator_order() -> Outcome {
    let params = DamperParams::paper_point_mass();
    let inertia = assemble_inertia(&params).unwrap();
    let s0 = State::from_body_rates(&inertia, Vec3::new(100.0, 0.0, 400.0), 0.0);
    let dt = 1e-4;
    let reference = end_state(&params, s0, dt / 64.0);
    let error = |s: State| {
        ((s.h - reference.h).norm_squared() + (s.beta_dot - reference.beta_dot).powi(2)).sqrt()
    };
    let (coarse, fine) = (
        error(end_state(&params, s0, dt)),
        error(end_state(&params, s0, dt / 2.0)),
    );
    let ratio = coarse / fine;
    outcome(
        (12.8..=19.2).contains(&ratio),
        format!(
            "error {coarse:.3e} at dt {dt:e}, {fine:.3e} at dt/2, ratio {ratio:.2} (16 +/- 20%)"
        ),
    )
}

fn momentum_transfer(traj: &Trajectory) -> Outcome {
    let (hz0, hz1) = (traj.first().state.h.z, traj.last().state.h.z);
    let t_end = traj.t_end();
    let early = transverse_envelope(traj, 0.0, 1.0);
    let late = transverse_envelope(traj, t_end - 1.0, t_end);
    let fraction = late / early;
    outcome(
        hz1 > hz0 && fraction < 0.25,
        format!(
            "h_z {hz0:.6} -> {hz1:.6}; transverse envelope {:.1}% of initial (< 25%)",
            fraction * 100.0
        ),
    )
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() -> ExitCode {
    let start = Instant::now();
    let traj = point_mass_run();
    let criteria: [Criterion; 8] = [
        ("casimir conservation", Box::new(|| casimir(&traj))),
        (
            "point-mass settling",
            Box::new(|| point_mass_settling(&traj)),
        ),
        ("distributed settling", Box::new(distributed_settling)),
        ("dissipationless structure", Box::new(dissipationless)),
        ("equilibrium fixed points", Box::new(fixed_points)),
        ("oracle equivalences", Box::new(oracles)),
        ("integrator order", Box::new(integrator_order)),
        ("momentum transfer", Box::new(|| momentum_transfer(&traj))),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        if !result.passed {
            failures += 1;
        }
        println!(
            "criterion {} {name}: {} | {}",
            i + 1,
            if result.passed { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!(
        "acceptance: {}/8 passed in {:.1} s",
        8 - failures,
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
