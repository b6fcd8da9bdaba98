//! Property tests for the structural invariants: domination of approximation
//! members, antiderivative growth, transform round trips, and the discrete
//! embedding inequalities.

use proptest::prelude::*;
use sfl_core::*;

fn power_model() -> impl Strategy<Value = Nonlinearity> {
    (0.1f64..4.0, 0.05f64..0.95, -2.0f64..2.0).prop_map(|(c, gamma, k0)| {
        Nonlinearity::power_with_smooth(c, gamma, Polynomial::new(vec![k0])).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn truncation_and_homographic_members_are_dominated(
        phi in power_model(),
        n in 0.5f64..200.0,
        s in -50.0f64..50.0,
    ) {
        let s = if s == 0.0 { 0.5 } else { s };
        let base = phi.eval(s).abs();
        for member in [phi.truncate(n).unwrap(), phi.homographic(n).unwrap()] {
            let v = member.eval(s).abs();
            prop_assert!(v <= base + 1e-12);
            prop_assert!(v <= n + 1e-12);
        }
    }

    #[test]
    fn antiderivative_growth_bound(
        phi in power_model(),
        s in -10.0f64..10.0,
    ) {
        let s = if s == 0.0 { 0.25 } else { s };
        for r in [0.5f64, 1.0, 2.0] {
            let l1 = phi.l1_origin(r).unwrap();
            let tail = phi.sup_abs_outside(r);
            let psi = phi.antiderivative(s).unwrap();
            prop_assert!(
                psi.abs() <= l1 + tail * s.abs() + 1e-8,
                "psi({}) = {} vs bound {}", s, psi, l1 + tail * s.abs()
            );
        }
    }

    #[test]
    fn cap_is_identity_inside_the_window(
        phi in power_model(),
        m in 0.5f64..20.0,
        t in -1.0f64..1.0,
    ) {
        let s = m * t;
        let s = if s == 0.0 { m / 2.0 } else { s };
        let capped = phi.cap_at(m).unwrap();
        prop_assert_eq!(phi.eval(s), capped.eval(s));
    }

    #[test]
    fn cap_bounds_the_tails(
        phi in power_model(),
        m in 0.5f64..20.0,
        s in -1e6f64..1e6,
    ) {
        let capped = phi.cap_at(m).unwrap();
        let bound = phi.eval(m).abs().max(phi.eval(-m).abs());
        if s.abs() >= m {
            prop_assert!(capped.eval(s).abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn reflection_is_an_involution(
        phi in power_model(),
        s in -20.0f64..20.0,
    ) {
        let s = if s == 0.0 { 1.0 } else { s };
        let twice = phi.reflect().reflect();
        let direct = phi.eval(s);
        prop_assert!((twice.eval(s) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
    }

    #[test]
    fn zeta_roundtrip_identity(
        c in 0.2f64..3.0,
        gamma in 0.1f64..0.9,
        t in 0.01f64..1.0,
    ) {
        let phi = Nonlinearity::power(c, gamma).unwrap();
        let shift = plus_shift_and_zeta(&phi, 4.0).unwrap();
        let s = 4.0 * t;
        let z = shift.zeta.eval(s).unwrap();
        let back = shift.zeta.inverse(z).unwrap();
        let z2 = shift.zeta.eval(back).unwrap();
        // bisection is accurate on the transformed axis
        prop_assert!((z2 - z).abs() <= 1e-8 * (1.0 + z.abs()));
    }

    #[test]
    fn poincare_and_morrey_for_zero_boundary_profiles(
        coeffs in proptest::collection::vec(-3.0f64..3.0, 2..6),
    ) {
        let g = Grid::new(1.0, 64).unwrap();
        let p = Polynomial::new(coeffs);
        let u = GridFn::sample_h10(g, |x| x * (1.0 - x) * p.eval(x)).unwrap();
        let n = u.norms();
        prop_assert!(n.l2 <= 1.0 * n.h1_semi + 1e-12);
        prop_assert!(n.sup <= 1.0f64.sqrt() * n.h1_semi + 1e-12);
        prop_assert!(n.sup <= n.holder_half * 1.0 + 1e-12 || n.sup == 0.0);
    }

    #[test]
    fn integrate_is_linear_and_monotone(
        va in proptest::collection::vec(-5.0f64..5.0, 16),
        vb in proptest::collection::vec(-5.0f64..5.0, 16),
        alpha in -3.0f64..3.0,
    ) {
        let g = Grid::new(2.0, 16).unwrap();
        let fa = CellFn::from_values(g, va.clone()).unwrap();
        let fb = CellFn::from_values(g, vb.clone()).unwrap();
        let combo = CellFn::from_values(
            g,
            va.iter().zip(vb.iter()).map(|(a, b)| alpha * a + b).collect(),
        )
        .unwrap();
        let lhs = integrate(&combo).unwrap();
        let rhs = alpha * integrate(&fa).unwrap() + integrate(&fb).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        let dominated = CellFn::from_values(g, va.iter().map(|a| a + 1.0).collect()).unwrap();
        prop_assert!(integrate(&dominated).unwrap() >= integrate(&fa).unwrap());
    }

    #[test]
    fn resample_refinement_is_exact(
        coeffs in proptest::collection::vec(-2.0f64..2.0, 2..5),
    ) {
        let coarse = Grid::new(1.0, 32).unwrap();
        let fine = Grid::new(1.0, 128).unwrap();
        let p = Polynomial::new(coeffs);
        let u = GridFn::sample(coarse, |x| p.eval(x)).unwrap();
        let refined = u.resample(fine).unwrap();
        for j in 0..=32 {
            prop_assert!((refined.value(4 * j) - u.value(j)).abs() < 1e-13);
        }
    }
}

proptest! {
    // the solver-backed properties run fewer, heavier cases
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn comparison_principle_for_random_sources(
        base in proptest::collection::vec(-1.5f64..1.5, 3),
        bump in proptest::collection::vec(-1.0f64..1.0, 2),
    ) {
        let g = Grid::new(1.0, 128).unwrap();
        let a = CellFn::constant(g, 1.0);
        let h1 = CellFn::sample(g, |x| base[0] + base[1] * x + base[2] * x * x).unwrap();
        let h2 = CellFn::sample(g, |x| {
            let q = bump[0] + bump[1] * x;
            base[0] + base[1] * x + base[2] * x * x + q * q
        })
        .unwrap();
        let phi = Nonlinearity::power(1.0, 0.4).unwrap();
        let v1 = solve_ivp(&a, &h1, &phi, &LadderSettings::default()).unwrap();
        let v2 = solve_ivp(&a, &h2, &phi, &LadderSettings::default()).unwrap();
        for j in 0..=128 {
            prop_assert!(v1.v.value(j) <= v2.v.value(j) + 1e-6);
        }
        prop_assert!(v1.positivity_certificate);
    }

    #[test]
    fn apriori_constant_dominates_solver_norms(
        hc in -2.0f64..2.0,
        gamma in 0.2f64..0.6,
    ) {
        let g = Grid::new(1.0, 128).unwrap();
        let a = CellFn::constant(g, 1.0);
        let h = CellFn::sample(g, |x| hc * (1.0 - x)).unwrap();
        let phi = Nonlinearity::power(1.0, gamma).unwrap();
        let sol = solve_ivp(&a, &h, &phi, &LadderSettings::default()).unwrap();
        let c_r = apriori_bound_c_r(&phi, &h, 1.0, 1.0, 1.0).unwrap();
        prop_assert!(sol.v.l2() + sol.v.h1_semi() <= c_r * (1.0 + 1e-6));
    }
}
