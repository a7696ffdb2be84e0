use dg_core::catalog;
use dg_core::field::Boundary;
use dg_core::gaussian::{self, GaussianState};
use dg_core::io;
use dg_core::{
    ap_residual, functionals, nse_residual, push_gauge, GaugeElement, Grid1D, Invariants, NuMuParams, ThetaField,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn nonzero(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi, any::<bool>()).prop_map(|(v, neg)| if neg { -v } else { v })
}

fn params() -> impl Strategy<Value = NuMuParams> {
    (nonzero(0.2, 2.0), -2.0..2.0, prop::array::uniform6(-2.0..2.0f64))
        .prop_map(|(nu1, nu2, mu)| NuMuParams::new([nu1, nu2], mu).unwrap())
}

fn element() -> impl Strategy<Value = GaugeElement> {
    (nonzero(0.3, 3.0), -2.0..2.0).prop_map(|(l, g)| GaugeElement::new(l, g).unwrap())
}

fn invariants() -> impl Strategy<Value = Invariants> {
    prop::array::uniform6(-1.0..1.0f64).prop_map(Invariants::new)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * y.abs().max(1.0))
}

fn smooth_field(grid: Grid1D, c: [f64; 4]) -> ThetaField {
    let x = grid.points();
    ThetaField::new(
        grid,
        x.iter().map(|x| c[0] - c[1] * x * x).collect(),
        x.iter().map(|x| c[2] * x + c[3] * x * x).collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn action_composes(p in params(), a1 in element(), a2 in element()) {
        let lhs = p.gauge(a1).gauge(a2);
        let rhs = p.gauge(a2.compose(a1));
        prop_assert!(close(&lhs.as_array(), &rhs.as_array(), 1e-10));
    }

    #[test]
    fn inverse_undoes_action(p in params(), a in element()) {
        prop_assert!(close(&p.gauge(a).gauge(a.inverse()).as_array(), &p.as_array(), 1e-10));
    }

    #[test]
    fn invariants_are_gauge_invariant(p in params(), a in element()) {
        prop_assert!(p.invariants().max_relative_deviation(&p.gauge(a).invariants()) < 1e-10);
    }

    #[test]
    fn connecting_recovers_element(p in params(), a in element()) {
        let found = GaugeElement::connecting(&p, &p.gauge(a)).unwrap();
        prop_assert!((found.lambda - a.lambda).abs() < 1e-10 * a.lambda.abs().max(1.0));
        prop_assert!((found.gamma - a.gamma).abs() < 1e-10 * a.gamma.abs().max(1.0));
    }

    #[test]
    fn reconstruct_round_trips(inv in invariants(), nu1 in nonzero(0.2, 2.0), mu1 in -2.0..2.0f64) {
        let p = inv.reconstruct(nu1, mu1).unwrap();
        prop_assert_eq!((p.nu1, p.mu1), (nu1, mu1));
        prop_assert!(close(&p.invariants().as_array(), &inv.as_array(), 1e-12));
    }

    #[test]
    fn gauge_fixed_is_canonical(p in params()) {
        let fixed = p.invariants().gauge_fixed();
        prop_assert_eq!((fixed.nu1, fixed.mu1), (1.0, 0.0));
        prop_assert!(p.invariants().max_relative_deviation(&fixed.invariants()) < 1e-10);
    }

    #[test]
    fn field_action_composes(a1 in element(), a2 in element(), c in prop::array::uniform4(-1.0..1.0f64)) {
        let f = smooth_field(Grid1D::dirichlet(-2.0, 2.0, 33).unwrap(), c);
        let lhs = f.gauge(a1).gauge(a2);
        let rhs = f.gauge(a2.compose(a1));
        prop_assert!(close(&lhs.theta1, &rhs.theta1, 1e-12));
        prop_assert!(close(&lhs.theta2, &rhs.theta2, 1e-12));
    }

    #[test]
    fn push_gauge_matches_theta_action(a in element(), c in prop::array::uniform4(-1.0..1.0f64)) {
        let f = smooth_field(Grid1D::dirichlet(-2.0, 2.0, 33).unwrap(), c);
        // The phase of psi fixes theta2 only up to a multiple of 2 pi, so the
        // two routes may differ by a global phase.
        let pushed = push_gauge(&f.to_complex(), a).unwrap();
        let direct = f.gauge(a).to_complex();
        let offset = pushed.values[0] / direct.values[0];
        prop_assert!((offset.norm() - 1.0).abs() < 1e-12);
        for (u, v) in pushed.values.iter().zip(&direct.values) {
            prop_assert!((u - offset * v).norm() < 1e-9 * v.norm().max(1.0));
        }
    }

    #[test]
    fn functionals_are_scale_free(c in prop::array::uniform4(-1.0..1.0f64), re in 0.1..3.0f64, im in -3.0..3.0f64) {
        let f = smooth_field(Grid1D::dirichlet(-2.0, 2.0, 33).unwrap(), c).to_complex();
        let a = functionals(&f).unwrap();
        let b = functionals(&f.scale(Complex64::new(re, im))).unwrap();
        for (x, y) in [(a.r1(), b.r1()), (a.r2(), b.r2()), (a.r3(), b.r3()), (a.r4(), b.r4()), (a.r5(), b.r5())] {
            prop_assert!(close(x, y, 1e-8));
        }
    }

    #[test]
    fn plane_waves_solve_every_equation(inv in invariants(), k in 1..4i32, t in 0.0..2.0f64) {
        let grid = Grid1D::periodic(0.0, 2.0 * std::f64::consts::PI, 64).unwrap();
        let sol = catalog::plane_wave(&inv, k as f64).unwrap();
        let th = sol.sample(&grid, t);
        let v = sol.potential_on(&grid);
        prop_assert!(ap_residual(&th, &inv, &v).unwrap().linf < 1e-9);
        let nse = nse_residual(&th.to_complex(), &th.dt_psi().unwrap(), &inv.gauge_fixed(), &v).unwrap();
        prop_assert!(nse.linf < 1e-9);
    }

    #[test]
    fn field_csv_round_trips(c in prop::array::uniform4(-5.0..5.0f64), n in 8..40usize, t in -1.0..1.0f64) {
        for boundary in [Boundary::Periodic, Boundary::Dirichlet] {
            let grid = Grid1D::new(-1.5, 2.5, n, boundary).unwrap();
            let f = smooth_field(grid, c);
            let back = io::parse_field_csv(&io::field_csv(&f, Some(t), false), boundary).unwrap();
            prop_assert_eq!(&back.theta1, &f.theta1);
            prop_assert_eq!(&back.theta2, &f.theta2);
            prop_assert_eq!(back.grid.n, n);
            prop_assert!((back.grid.dx() - grid.dx()).abs() < 1e-12);
        }
    }

    #[test]
    fn numbers_are_locale_free_and_exact(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let s = io::num(v);
        prop_assert!(!s.contains(','));
        prop_assert_eq!(s.parse::<f64>().unwrap(), v + 0.0);
    }

    #[test]
    fn ground_state_width_formula(i0 in -1.0..-0.1f64, p in 0.05..1.0f64, kappa in 0.2..4.0f64) {
        let inv = Invariants::new([i0, p, 0.0, 0.0, -1.0, 0.0]);
        let s = gaussian::sigma_infinity(&inv, kappa).unwrap();
        prop_assert!((s.powi(4) - 4.0 * p / (-kappa * i0)).abs() < 1e-12 * s.powi(4));
    }

    #[test]
    fn free_linear_width_matches(sigma0 in 0.3..3.0f64) {
        let inv = Invariants::new([-0.5, 0.125, 0.0, 0.0, 0.0, 0.0]);
        let tr = gaussian::integrate(&GaussianState::new(sigma0, 0.0, 0.0, 0.0), &inv, 0.0, 1.0, 1e-3).unwrap();
        let exact = gaussian::closed_form::linear_free_width(sigma0, 1.0);
        prop_assert!((tr.last().sigma - exact).abs() < 1e-8);
    }
}
