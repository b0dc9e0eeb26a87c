use std::f64::consts::PI;

use nalgebra::{Rotation3, Unit};
use omniwpt::{
    assemble_impedance, loop_mutual, maxwell_coaxial, performance, run_controller, solve_full,
    tune_xt, ControllerSettings, CouplingSet, FilamentLoop, Pose, QuadratureSpec, Sign,
    SystemConfig, Vec3,
};
use proptest::prelude::*;

const OMEGA0: f64 = 2.0 * PI * 592.6e3;

fn unit_vec() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-degenerate", |(x, y, z)| {
            (x * x + y * y + z * z).sqrt() > 0.2
        })
        .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalize())
}

fn point(scale: f64) -> impl Strategy<Value = Vec3> {
    (-scale..scale, -scale..scale, -scale..scale).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

/// Two loops whose centres are far enough apart that they cannot touch.
fn loop_pair() -> impl Strategy<Value = (FilamentLoop, FilamentLoop)> {
    (
        0.05..0.2f64,
        0.05..0.2f64,
        unit_vec(),
        unit_vec(),
        unit_vec(),
        0.45..0.8f64,
    )
        .prop_map(|(r1, r2, n1, n2, dir, dist)| {
            let a = FilamentLoop::new(Pose::new(Vec3::zeros(), n1).unwrap(), r1).unwrap();
            let b = FilamentLoop::new(Pose::new(dist * dir, n2).unwrap(), r2).unwrap();
            (a, b)
        })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-30)
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::with_tolerance(1e-11)
}

fn couplings() -> impl Strategy<Value = ([f64; 3], f64, f64)> {
    (
        prop::array::uniform3(-3e-6..3e-6f64),
        1e-6..6e-6f64,
        0.4..0.9f64,
    )
}

fn signs() -> impl Strategy<Value = [Sign; 3]> {
    prop::array::uniform3(prop::bool::ANY)
        .prop_map(|b| b.map(|neg| if neg { Sign::Neg } else { Sign::Pos }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mutual_inductance_is_reciprocal((a, b) in loop_pair()) {
        let ab = loop_mutual(&a, &b, &spec()).unwrap();
        let ba = loop_mutual(&b, &a, &spec()).unwrap();
        prop_assert!(close(ab, ba, 1e-9) || (ab - ba).abs() < 1e-18, "{ab} vs {ba}");
    }

    #[test]
    fn mutual_inductance_is_invariant_under_rigid_motion(
        (a, b) in loop_pair(),
        axis in unit_vec(),
        angle in -PI..PI,
        shift in point(2.0),
    ) {
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        let m = loop_mutual(&a, &b, &spec()).unwrap();
        let moved = loop_mutual(&a.transformed(&rot, &shift), &b.transformed(&rot, &shift), &spec()).unwrap();
        prop_assert!((m - moved).abs() <= 1e-9 * m.abs() + 1e-18, "{m} vs {moved}");
    }

    #[test]
    fn mutual_inductance_scales_linearly((a, b) in loop_pair(), factor in 0.1..10.0f64) {
        let m = loop_mutual(&a, &b, &spec()).unwrap();
        let scaled = loop_mutual(&a.scaled(factor).unwrap(), &b.scaled(factor).unwrap(), &spec()).unwrap();
        prop_assert!((scaled - factor * m).abs() <= 1e-9 * (factor * m).abs() + 1e-18);
    }

    #[test]
    fn flipping_a_loop_negates_exactly((a, b) in loop_pair()) {
        let m = loop_mutual(&a, &b, &spec()).unwrap();
        prop_assert_eq!(loop_mutual(&a, &b.flipped(), &spec()).unwrap(), -m);
    }

    #[test]
    fn tighter_tolerance_converges((a, b) in loop_pair()) {
        let loose = loop_mutual(&a, &b, &QuadratureSpec::with_tolerance(1e-6)).unwrap();
        let tight = loop_mutual(&a, &b, &QuadratureSpec::with_tolerance(1e-12)).unwrap();
        prop_assert!((loose - tight).abs() <= 1e-5 * tight.abs() + 1e-18);
    }

    #[test]
    fn coaxial_quadrature_matches_closed_form(
        r1 in 0.02..0.4f64,
        r2 in 0.02..0.4f64,
        gap in 0.005..0.5f64,
        axis in unit_vec(),
        origin in point(1.0),
    ) {
        let a = FilamentLoop::new(Pose::new(origin, axis).unwrap(), r1).unwrap();
        let b = FilamentLoop::new(Pose::new(origin + gap * axis, axis).unwrap(), r2).unwrap();
        let m = loop_mutual(&a, &b, &QuadratureSpec::default()).unwrap();
        prop_assert!(close(m, maxwell_coaxial(r1, r2, gap).unwrap(), 1e-6));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lossless_tuned_power_follows_coupling_sum((m, m0, gamma) in couplings(), s in signs()) {
        let c = CouplingSet::uniform(m0, m, gamma).unwrap();
        let cfg = SystemConfig::ideal(OMEGA0, 9.0, 20.0, tune_xt(gamma, m0, OMEGA0), c).with_polarity(s);
        let sol = solve_full(&cfg).unwrap();
        let m_sum: f64 = (0..3).map(|i| s[i].value() * m[i]).sum();
        let expected = (m_sum / m0).powi(2) * 81.0 / 20.0;
        prop_assert!((sol.p_out - expected).abs() <= 1e-9 * expected.max(1e-12));
        prop_assert!((sol.p_in - sol.p_out).abs() <= 1e-9 * sol.p_in.abs().max(1e-12));
    }

    #[test]
    fn sign_flip_equals_negated_coupling((m, m0, gamma) in couplings(), s in signs()) {
        let c = CouplingSet::uniform(m0, m, gamma).unwrap();
        let base = SystemConfig::ideal(OMEGA0, 9.0, 20.0, 15.0, c);
        let negated = m.iter().zip(s).map(|(v, si)| v * si.value()).collect::<Vec<_>>();
        let c2 = CouplingSet::uniform(m0, [negated[0], negated[1], negated[2]], gamma).unwrap();
        let flipped = assemble_impedance(&base.with_polarity(s)).unwrap();
        let direct = assemble_impedance(&SystemConfig::ideal(OMEGA0, 9.0, 20.0, 15.0, c2)).unwrap();
        prop_assert_eq!(flipped, direct);
    }

    #[test]
    fn receiver_loss_lowers_efficiency(
        (m, m0, gamma) in couplings(),
        r_low in 0.01..1.0f64,
        extra in 0.01..2.0f64,
    ) {
        prop_assume!(m.iter().map(|v| v.abs()).sum::<f64>() > 1e-7);
        let c = CouplingSet::uniform(m0, m, gamma).unwrap();
        let mut cfg = SystemConfig::ideal(OMEGA0, 9.0, 20.0, tune_xt(gamma, m0, OMEGA0), c);
        cfg.r_tx = [0.05; 3];
        cfg.r_rp = [0.05; 3];
        cfg.r_rx = r_low;
        let low = solve_full(&cfg).unwrap().efficiency();
        cfg.r_rx = r_low + extra;
        let high = solve_full(&cfg).unwrap().efficiency();
        prop_assert!(high < low);
    }

    #[test]
    fn closed_form_efficiency_tracks_full_solve((m, m0, gamma) in couplings()) {
        prop_assume!(m.iter().sum::<f64>().abs() > 0.3e-6);
        let c = CouplingSet::uniform(m0, m, gamma).unwrap();
        let mut cfg = SystemConfig::ideal(OMEGA0, 9.0, 20.0, tune_xt(gamma, m0, OMEGA0), c);
        cfg.r_tx = [0.02; 3];
        cfg.r_rp = [0.02; 3];
        cfg.r_rx = 0.2;
        let report = performance(&cfg).unwrap();
        let full = solve_full(&cfg).unwrap().efficiency();
        // First-order loss model: agrees while the losses stay small.
        prop_assert!((report.eta - full).abs() < 0.02, "{} vs {}", report.eta, full);
    }

    #[test]
    fn controller_is_optimal_and_terminates(
        mags in prop::array::uniform3(0.05e-6..3e-6f64),
        neg in prop::array::uniform3(prop::bool::ANY),
        gamma in 0.4..0.9f64,
    ) {
        let m = [0, 1, 2].map(|i| if neg[i] { -mags[i] } else { mags[i] });
        let c = CouplingSet::uniform(3.1e-6, m, gamma).unwrap();
        let cfg = SystemConfig::ideal(OMEGA0, 9.0, 20.0, tune_xt(gamma, 3.1e-6, OMEGA0), c);
        let (done, state) = run_controller(&cfg, &ControllerSettings::default()).unwrap();
        prop_assert!(state.converged && state.iterations <= 4);
        // A global sign is unobservable in the output power.
        let magnitude_sum: f64 = mags.iter().sum();
        prop_assert!((done.m_sum().abs() - magnitude_sum).abs() <= 1e-12 * magnitude_sum);
        let (again, state2) = run_controller(&done, &ControllerSettings::default()).unwrap();
        prop_assert_eq!(again.polarity, done.polarity);
        prop_assert_eq!(state2.iterations, 1);
    }
}
