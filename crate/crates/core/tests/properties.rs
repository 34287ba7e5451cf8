use nutdamp::dynamics::{
    assemble_inertia, beta_ddot_distributed, beta_ddot_point, friction_coefficient, full_rhs,
    h_rhs, kinetic_energy, kinetic_energy_rate, omega_from_state, CylinderBody, DamperParams,
    DistributedSlug, SlugModel, State, Vec3,
};
use nutdamp::experiments::RunConfig;
use nutdamp::integrators::{step, IntegratorConfig, Scheme};
use nutdamp::Model;
use proptest::prelude::*;

fn point_params() -> impl Strategy<Value = DamperParams> {
    (
        0.5..5.0f64,
        0.02..0.1f64,
        0.01..0.2f64,
        1e-4..0.05f64,
        0.1..3.0f64,
    )
        .prop_map(|(m, r, l, ms, cd)| {
            let mut p = DamperParams::paper_point_mass();
            p.body = CylinderBody::new(m, r, l).unwrap();
            p.ring_radius = r;
            p.slug = SlugModel::point_mass(ms);
            p.drag_coefficient = cd;
            p
        })
}

fn distributed_params() -> impl Strategy<Value = DamperParams> {
    (0.01..0.05f64, 1e-3..6e-3f64, 0.2..6.2f64, 0.0..0.03f64).prop_map(|(r, rc, phi, hi)| {
        let mut p = DamperParams::paper_distributed();
        p.ring_radius = r;
        p.slug = SlugModel::distributed(DistributedSlug {
            density: 1000.0,
            cross_section_radius: rc,
            fill_angle: phi,
            vertical_offset: hi,
        });
        p
    })
}

fn any_params() -> impl Strategy<Value = DamperParams> {
    prop_oneof![point_params(), distributed_params()]
}

fn state() -> impl Strategy<Value = State> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -100.0..100.0f64)
        .prop_filter("nonzero momentum", |(x, y, z, _)| {
            x * x + y * y + z * z > 1e-6
        })
        .prop_map(|(x, y, z, b)| State::new(Vec3::new(x, y, z), b))
}

proptest! {
    #[test]
    fn momentum_rate_is_orthogonal(p in any_params(), s in state()) {
        let inertia = assemble_inertia(&p).unwrap();
        let dh = full_rhs(&inertia, &p, &s).unwrap().dh;
        prop_assume!(dh.norm() > 0.0);
        prop_assert!((dh.dot(&s.h) / (dh.norm() * s.h.norm())).abs() < 1e-12);
    }

    #[test]
    fn momentum_rate_is_cross_with_slug_rate(p in any_params(), s in state()) {
        let inertia = assemble_inertia(&p).unwrap();
        let (_, omega_s) = omega_from_state(&inertia, &s);
        let oracle = -omega_s.cross(&s.h);
        prop_assert!((h_rhs(&inertia, &s) - oracle).norm() <= 1e-12 * s.h.norm() * omega_s.norm());
    }

    #[test]
    fn body_rates_round_trip(p in any_params(), s in state()) {
        let model = Model::new(p).unwrap();
        let (omega, _) = omega_from_state(&model.inertia, &s);
        let back = model.state_from_body_rates(omega, s.beta_dot);
        prop_assert!((back.h - s.h).norm() <= 1e-12 * s.h.norm());
    }

    #[test]
    fn inertia_is_symmetric_positive_definite(p in any_params()) {
        let inertia = assemble_inertia(&p).unwrap();
        let m = inertia.combined();
        prop_assert_eq!(m, m.transpose());
        prop_assert!(m.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn point_mass_energy_only_dissipates(p in point_params(), s in state()) {
        let inertia = assemble_inertia(&p).unwrap();
        let deriv = full_rhs(&inertia, &p, &s).unwrap();
        let rate = kinetic_energy_rate(&inertia, &s, &deriv);
        let power = friction_coefficient(&inertia, &p) * s.beta_dot * s.beta_dot;
        let minv = inertia.combined_inverse();
        let (omega, omega_s) = omega_from_state(&inertia, &s);
        let ring_side = omega.dot(&(inertia.ring * minv * inertia.slug * Vec3::z())).abs();
        let slug_side = omega_s.dot(&(inertia.slug * minv * inertia.ring * Vec3::z())).abs();
        let scale = (minv * s.h).dot(&deriv.dh).abs() + (ring_side + slug_side) * deriv.dbeta_dot.abs() + power;
        prop_assert!((rate + power).abs() <= 1e-10 * scale);
        prop_assert!(kinetic_energy(&inertia, &s) > 0.0);
    }

    #[test]
    fn centered_arc_closure_matches_diagonal_form(p in distributed_params(), s in state()) {
        let mut p = p;
        if let SlugModel::Distributed { vertical_offset, .. } = &mut p.slug {
            *vertical_offset = 0.0;
        }
        let inertia = assemble_inertia(&p).unwrap();
        let a = beta_ddot_distributed(&inertia, &p, &s).unwrap();
        let b = beta_ddot_point(&inertia, &p, &s).unwrap();
        let m = inertia.combined();
        let (izr, izs) = (inertia.ring[(2, 2)], inertia.slug[(2, 2)]);
        let hxy = (s.h.x * s.h.y).abs();
        let c = friction_coefficient(&inertia, &p);
        let scale = (s.beta_dot * c * (izs + izr) / (izs * izr)).abs() + hxy / (m[(0, 0)] * izs) + hxy / (m[(1, 1)] * izs);
        prop_assert!((a - b).abs() <= 1e-12 * scale);
    }

    #[test]
    fn one_step_keeps_casimir(p in any_params(), s in state(), fraction in 1e-4..1e-2f64) {
        let model = Model::new(p).unwrap();
        let inertia = &model.inertia;
        let (omega, _) = omega_from_state(inertia, &s);
        let (izr, izs) = (inertia.ring[(2, 2)], inertia.slug[(2, 2)]);
        let smallest = inertia.combined().symmetric_eigenvalues().min();
        let friction = friction_coefficient(inertia, &p) * (izr + izs) / (izr * izs);
        let coupling = s.h.norm() / (smallest * izs).sqrt();
        let dt = fraction / (omega.norm() + s.beta_dot.abs() + friction + coupling);
        let (next, _) = step(&model, &s, dt, Scheme::Rk4Fixed, &IntegratorConfig::default()).unwrap();
        prop_assert!(((next.h.norm() - s.h.norm()) / s.h.norm()).abs() < 1e-9);
    }

    #[test]
    fn config_survives_toml(dt in 1e-6..1e-3f64, t_end in 0.1..500.0f64, cd in 0.0..5.0f64, thr in 0.1..10.0f64) {
        let mut c = RunConfig::scenario("paper-distributed").unwrap();
        c.integrator.dt = dt;
        c.t_end = t_end;
        c.params.drag_coefficient = cd;
        c.threshold_deg = thr;
        prop_assert_eq!(RunConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }
}
