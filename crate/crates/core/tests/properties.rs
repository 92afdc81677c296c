use approx::assert_relative_eq;
use proptest::prelude::*;

use inpipe_core::dynamics::{inertia_matrix, BodyModel, PipeOrientation};
use inpipe_core::explorer::backsolve_wheel_spacing;
use inpipe_core::geometry::{contact_angle, solve_configuration, MechanismParams};
use inpipe_core::stability::{evaluate_stability, FrictionModel};
use inpipe_core::statics::{solve_normal_forces, MassModel, SpringModel};
use inpipe_core::transmission::{build_transmission, roll_projection};

fn prototype() -> MechanismParams {
    MechanismParams::default().with_separation(35.6, 32.3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn only_separation_matters(a in 0.0..40.0f64, b in 0.0..20.0f64, n in 0.0..20.0f64, shift in 0.0..15.0f64) {
        let p = MechanismParams::default().with_mounting(a, b, n);
        let q = MechanismParams::default().with_mounting(a, b + shift, n + shift);
        match (contact_angle(&p), contact_angle(&q)) {
            (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x.is_ok(), y.is_ok()),
        }
    }

    #[test]
    fn link2_closes_the_triangle(a in 0.0..30.0f64, nb in -20.0..20.0f64) {
        let p = MechanismParams::default().with_separation(a, nb);
        if let Ok(c) = solve_configuration(&p) {
            assert_relative_eq!(p.l1 * c.alpha1.sin(), p.l2 * c.alpha2.sin(), epsilon = 1e-10);
            assert_relative_eq!(c.theta1 + c.alpha1, std::f64::consts::FRAC_PI_2, epsilon = 1e-15);
        }
    }

    #[test]
    fn forces_balance(mj in -3000.0..3000.0f64, mass in 0.1..3.0f64) {
        let f = solve_normal_forces(&prototype(), &MassModel::default_split(mass, 9.81), mj).unwrap();
        for r in f.residuals() {
            prop_assert!(r.abs() < 1e-9 * (1.0 + mj.abs()));
        }
    }

    #[test]
    fn margin_grows_with_friction(mu_s in 0.02..0.5f64, d_mu in 0.0..0.3f64, mu_o in 0.05..0.6f64) {
        let p = prototype();
        let m = MassModel::default_split(0.75, 9.81);
        let s = SpringModel::default().with_preload(60.0);
        let lo = evaluate_stability(&p, &m, &s, &FrictionModel { mu_s, mu_o }).unwrap();
        let hi = evaluate_stability(&p, &m, &s, &FrictionModel { mu_s: mu_s + d_mu, mu_o }).unwrap();
        prop_assert!(hi.margin >= lo.margin);
        prop_assert!((lo.reserve - (1.0 - 1.0 / lo.margin)).abs() < 1e-12);
    }

    #[test]
    fn projection_preserves_magnitude(tau in -100.0..100.0f64, alpha in -1.5..1.5f64) {
        let (r, p) = roll_projection(tau, alpha);
        prop_assert!((r * r + p * p - tau * tau).abs() <= 1e-12 * (1.0 + tau * tau));
    }

    #[test]
    fn leakage_follows_sine(x in 0.01..1.5f64, y in 0.01..1.5f64) {
        let p = MechanismParams::default();
        let k = |a: f64| build_transmission(&p, 1.0, 4, a, 0.0).unwrap().kpr;
        assert_relative_eq!(k(x) / k(y), x.sin() / y.sin(), max_relative = 1e-12);
    }

    #[test]
    fn inertia_is_diagonal(m1 in 0.01..5.0f64, m2 in 0.01..5.0f64, t1 in 0.0..3.0f64, t2 in 0.0..3.0f64) {
        let body = BodyModel {
            m1, m2, l1: 105.0, l2: 75.0, theta1: t1, theta2: t2, g: 9.81, ro: 30.0,
            pipe: PipeOrientation::Vertical,
        };
        let m = inertia_matrix(&body);
        prop_assert_eq!(m[(0, 1)], 0.0);
        prop_assert_eq!(m[(1, 0)], 0.0);
        prop_assert!(m[(1, 1)] > 0.0);
    }

    #[test]
    fn backsolve_round_trip(wo in 10.0..95.0f64) {
        let p = MechanismParams::default();
        if let Ok(alpha) = contact_angle(&MechanismParams { wo, ..p }) {
            let back = backsolve_wheel_spacing(&p, alpha).unwrap();
            let again = contact_angle(&MechanismParams { wo: back, ..p }).unwrap();
            prop_assert!((again - alpha).abs() < 1e-4);
        }
    }
}

#[test]
fn default_spacing_reproduces_baseline_angle() {
    // Wo recovered offline from the 21 deg baseline by high-precision bisection
    let wo = backsolve_wheel_spacing(&MechanismParams::default(), 21f64.to_radians()).unwrap();
    assert!((wo - 59.655_433_178_641_93).abs() < 1e-6, "wo = {wo}");
    assert!((wo - 59.7).abs() < 0.05);
}
