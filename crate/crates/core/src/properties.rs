//! Property tests over the public API.

use std::f64::consts::{PI, TAU};

use crate::gauge::{connection, curvature_formula, gauge_transform, ConnectionVariant, GaugeField};
use crate::holonomy::holonomy;
use crate::matrix::{expm, expm2, Mat2, Mat3, C64, I};
use crate::model::{hamiltonian, mixing_angle, MixingAngle, SystemParams};
use crate::path::{LoopShape, ParameterPath, Ramp};
use crate::propagator::{propagate, Method};
use crate::scenario::ScenarioConfig;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn anti_hermitian2() -> impl Strategy<Value = Mat2> {
    (prop::array::uniform4(complex())).prop_map(|[a, b, c, d]| {
        let m = Mat2::from_rows([[a, b], [c, d]]);
        (m - m.adjoint()) * 0.5
    })
}

fn hermitian3() -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(complex()).prop_map(|z| {
        let m = Mat3::from_rows([[z[0], z[1], z[2]], [z[3], z[4], z[5]], [z[6], z[7], z[8]]]);
        (m + m.adjoint()) * 0.5
    })
}

fn gamma() -> impl Strategy<Value = MixingAngle> {
    (0.0..std::f64::consts::FRAC_PI_2).prop_map(MixingAngle::from_gamma)
}

fn waypoints() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.3..PI - 0.3, 0.0..TAU), 3..7)
}

proptest! {
    #[test]
    fn expm_of_anti_hermitian_is_unitary(a in anti_hermitian2()) {
        let u = expm(&a).unwrap();
        prop_assert!(u.is_unitary(1e-12));
        prop_assert!(u.dist(&expm2(&a).unwrap()) <= 1e-12);
    }

    #[test]
    fn expm_inverts_by_negation(h in hermitian3()) {
        let a = h.scale(-I);
        let prod = expm(&a).unwrap() * expm(&(-a)).unwrap();
        prop_assert!(prod.dist(&Mat3::identity()) <= 1e-11);
    }

    #[test]
    fn connections_are_anti_hermitian(theta in 0.0..PI, phi in 0.0..TAU, g in gamma()) {
        for v in ConnectionVariant::ALL {
            let a = connection(v, theta, phi, &g);
            prop_assert!(a.a_theta.is_anti_hermitian(1e-14));
            prop_assert!(a.a_phi.is_anti_hermitian(1e-14));
        }
    }

    #[test]
    fn corrected_curvature_vanishes(theta in 0.0..PI, phi in 0.0..TAU, g in gamma()) {
        let f = curvature_formula(ConnectionVariant::ApproxCorrected, theta, phi, &g);
        prop_assert!(f.norm() <= 1e-14);
    }

    #[test]
    fn exact_curvature_is_bounded_by_sin2_gamma(theta in 0.0..PI, phi in 0.0..TAU, g in gamma()) {
        // every entry carries a factor sin²γ and the bracket has norm ≤ 2
        let f = curvature_formula(ConnectionVariant::Exact, theta, phi, &g);
        prop_assert!(f.norm() <= 2.0 * g.sin * g.sin + 1e-14);
    }

    #[test]
    fn gauge_transforms_compose(theta in 0.3..2.8f64, phi in 0.0..TAU, s1 in 0u64..1000, s2 in 0u64..1000) {
        let g = MixingAngle::from_gamma(0.4);
        let base = connection(ConnectionVariant::Exact, theta, phi, &g);
        let (v1, v2) = (GaugeField::random_smooth(s1, 0.3), GaugeField::random_smooth(s2, 0.3));
        let (a, b) = (v1.eval(theta, phi), v2.eval(theta, phi));
        let two_step = gauge_transform(&gauge_transform(&base, &a).unwrap(), &b).unwrap();
        let combined = crate::gauge::GaugeValue {
            v: a.v * b.v,
            d_theta: a.d_theta * b.v + a.v * b.d_theta,
            d_phi: a.d_phi * b.v + a.v * b.d_phi,
        };
        let one_step = gauge_transform(&base, &combined).unwrap();
        prop_assert!(two_step.max_entry_dist(&one_step) <= 1e-12);
    }

    #[test]
    fn spline_loops_are_closed_and_consistent(pts in waypoints()) {
        let p = ParameterPath::from_loop(&LoopShape::Waypoints(pts), Ramp::Smooth, 2.0, 1.0, 3.0).unwrap();
        prop_assert!(p.is_closed());
        prop_assert!(p.derivative_defect(61) <= 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn holonomy_is_unitary_and_reverses(pts in waypoints(), ratio in 0.0..5.0f64) {
        let path = ParameterPath::from_loop(&LoopShape::Waypoints(pts), Ramp::Linear, 1.0, 1.0, ratio).unwrap();
        let u = holonomy(&path, ConnectionVariant::Exact, 2000).unwrap();
        prop_assert!(u.unitary.is_unitary(1e-10));
        let back = holonomy(&path.reversed(), ConnectionVariant::Exact, 2000).unwrap();
        prop_assert!(back.unitary.dist(&u.unitary.adjoint()) <= 10.0 * (u.richardson_error + back.richardson_error) + 1e-12);
    }

    #[test]
    fn pure_gauge_holonomy_is_trivial(pts in waypoints()) {
        let path = ParameterPath::from_loop(&LoopShape::Waypoints(pts), Ramp::Linear, 1.0, 1.0, 2.0).unwrap();
        for v in [ConnectionVariant::ApproxCorrected, ConnectionVariant::ComputationalBasis] {
            let u = holonomy(&path, v, 4000).unwrap();
            prop_assert!(u.deviation_from_identity() <= 10.0 * u.richardson_error);
        }
    }

    #[test]
    fn constant_parameters_propagate_like_expm(
        omega in 0.1..3.0f64, delta in -3.0..3.0f64, theta in 0.0..PI, phi in 0.0..TAU, tau in 0.1..3.0f64,
    ) {
        let p = SystemParams::new(omega, delta, theta, phi).unwrap();
        let want = expm(&hamiltonian(&p).unwrap().scale(C64::new(0.0, -tau))).unwrap();
        let got = propagate(&ParameterPath::stationary(p, tau).unwrap(), 64, Method::Magnus4, 1e-12).unwrap();
        prop_assert!(got.final_unitary.dist(&want) <= 1e-11);
        prop_assert!((0.0..=1.0).contains(&got.leakage));
        let _ = mixing_angle(&p).unwrap();
    }

    #[test]
    fn config_canonical_form_round_trips(
        omega in 0.1..10.0f64, delta in -10.0..10.0f64, theta in 0.0..PI, grid_n in 1usize..200, seed in any::<u64>(),
        ratios in prop::collection::vec(0.0..1e4f64, 1..6),
    ) {
        let list: Vec<String> = ratios.iter().map(|r| format!("{r:e}")).collect();
        let text = format!(
            "omega = {omega:e}\ndelta = {delta:e}\ntheta = {theta:e}\ngrid_n = {grid_n}\nseed = {seed}\ndelta_over_omega_list = {}\n",
            list.join(", ")
        );
        let cfg = ScenarioConfig::parse(&text).unwrap();
        let again = ScenarioConfig::parse(&cfg.canonical()).unwrap();
        prop_assert_eq!(&cfg, &again);
        prop_assert_eq!(cfg.hash(), again.hash());
    }
}
