use std::sync::Arc;

use bvtp_core::{
    boundary_identity_check, characteristic, parse_problem, solve_resolvent, to_toml_string,
    validate_problem, wronskian_transmission_identity, build_chi, build_phi, Complex64,
    PiecewisePolynomial, Polynomial, ProblemSpec, TransmissionMatrix, ValuePair,
};
use proptest::prelude::*;

/// Two-piece problems with a random admissible transmission matrix.
fn two_piece() -> impl Strategy<Value = ProblemSpec> {
    (
        0.5..2.0f64,
        0.5..2.0f64,
        -0.8..0.8f64,
        prop::array::uniform4(-1.0..1.0f64),
        prop::array::uniform2(0.5..2.0f64),
        -2.0..2.0f64,
    )
        .prop_map(|(r1, r2, xi, m, diag, q)| {
            // rows chosen so that theta12 = d0 * d1 > 0 and theta34 > 0
            let row1 = [diag[0], m[0], -1.0, m[1] * 0.1];
            let row2 = [m[2] * 0.1, diag[1], m[3] * 0.1, -1.0];
            ProblemSpec {
                a: -1.0,
                b: 1.0,
                xi: vec![xi],
                rho: vec![r1, r2],
                q: vec![Polynomial::constant(q), Polynomial::zero()],
                delta: [1.0, 0.2, 0.1, -1.0],
                gamma: [1.0, -0.3, 0.2, -1.0],
                trans: vec![TransmissionMatrix::new(row1, row2)],
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn file_format_round_trips(spec in two_piece()) {
        prop_assert_eq!(parse_problem(&to_toml_string(&spec)).unwrap(), spec);
    }

    #[test]
    fn recursion_and_transmission_identity_hold(spec in two_piece(), l in -10.0..50.0f64) {
        let Ok(pr) = validate_problem(spec) else { return Ok(()) };
        let lambda = Complex64::new(l, 0.0);
        let cv = characteristic(&pr, lambda, 1e-11).unwrap();
        prop_assert!(cv.recursion_violation < 1e-8, "{}", cv.recursion_violation);
        let phi = build_phi(&pr, lambda, 1e-11).unwrap();
        let chi = build_chi(&pr, lambda, 1e-11).unwrap();
        prop_assert!(wronskian_transmission_identity(&pr, &phi, &chi, 0) < 1e-9);
        prop_assert!(phi.transmission_residual(&pr) < 1e-12);
    }

    #[test]
    fn boundary_identities_hold(
        spec in two_piece(),
        v in prop::array::uniform8(-3.0..3.0f64),
        w in prop::array::uniform8(-3.0..3.0f64),
    ) {
        let Ok(pr) = validate_problem(spec) else { return Ok(()) };
        let z = |a: f64, b: f64| Complex64::new(a, b);
        let f = ValuePair::new(z(v[0], v[1]), z(v[2], v[3]));
        let g = ValuePair::new(z(v[4], v[5]), z(v[6], v[7]));
        let h = ValuePair::new(z(w[0], w[1]), z(w[2], w[3]));
        let k = ValuePair::new(z(w[4], w[5]), z(w[6], w[7]));
        let (l, r) = boundary_identity_check(&pr, f, g, h, k);
        prop_assert!(l < 1e-12 && r < 1e-12, "{l} {r}");
    }

    #[test]
    fn resolvent_satisfies_its_equation(spec in two_piece(), c0 in -2.0..2.0f64, c1 in -2.0..2.0f64) {
        let Ok(pr) = validate_problem(spec) else { return Ok(()) };
        let f = Arc::new(PiecewisePolynomial::uniform(&pr, Polynomial::new(vec![c0, c1])));
        // below the spectrum for most draws; near-eigenvalue rejection is also accepted
        match solve_resolvent(&pr, Complex64::new(-10.0, 0.0), f, 1e-11) {
            Ok(u) => {
                prop_assert!(u.residual_ode < 1e-6, "{u:?}");
                prop_assert!(u.residual_bc < 1e-8, "{u:?}");
                prop_assert!(u.residual_trans < 1e-8, "{u:?}");
            }
            Err(e) => prop_assert!(matches!(e, bvtp_core::Error::NearEigenvalue { .. }), "{e}"),
        }
    }
}
