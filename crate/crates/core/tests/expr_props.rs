use fuchs_core::expr::{integrate_along_path, integrate_path_with};
use fuchs_core::{Binding, Expr, Path, Var, C64};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::x()),
        Just(Expr::t()),
        (-3i32..=3).prop_map(|k| Expr::real(k as f64 / 2.0)),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.sub(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.div(&b.mul(&b).add(&Expr::real(3.0)))),
            (inner.clone(), 2i64..4).prop_map(|(a, n)| a.powi(n)),
            inner.clone().prop_map(|a| a.mul(&Expr::real(0.3)).exp()),
            inner.clone().prop_map(|a| a.mul(&a).add(&Expr::real(4.0)).sqrt()),
            inner.prop_map(|a| a.mul(&a).add(&Expr::real(4.0)).ln()),
        ]
    })
}

fn point() -> impl Strategy<Value = (C64, C64)> {
    (0.5..1.5f64, -0.3..0.3f64, 0.5..1.5f64, -0.3..0.3f64).prop_map(|(a, b, c, d)| (C64::new(a, b), C64::new(c, d)))
}

fn fd(e: &Expr, var: Var, x: C64, t: C64, h: f64) -> Option<C64> {
    let at = |d: f64| match var {
        Var::X => e.at(x + d, t),
        Var::T => e.at(x, t + d),
    };
    let v = [at(-2.0 * h).ok()?, at(-h).ok()?, at(h).ok()?, at(2.0 * h).ok()?];
    Some((v[0] - v[1] * 8.0 + v[2] * 8.0 - v[3]) / (12.0 * h))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivative_matches_finite_difference(e in expr(), (x, t) in point()) {
        let v = e.at(x, t);
        prop_assume!(matches!(v, Ok(v) if v.norm() < 1e4));
        for var in [Var::X, Var::T] {
            let d = e.diff(var).at(x, t).unwrap();
            let (a, b) = (fd(&e, var, x, t, 1e-3), fd(&e, var, x, t, 5e-4));
            let (Some(a), Some(b)) = (a, b) else { continue };
            // Skip points where the difference quotient itself has not settled
            // (a branch cut of sqrt or log between the stencil points).
            prop_assume!((a - b).norm() <= 1e-8 * (1.0 + a.norm()));
            prop_assert!((d - b).norm() <= 1e-6 * (1.0 + d.norm()), "{} d/d{} = {} vs {}", e, var.name(), d, b);
        }
    }

    #[test]
    fn printed_form_reparses_to_the_same_function(e in expr(), (x, t) in point()) {
        let back = Expr::parse(&e.to_string()).unwrap();
        match (e.at(x, t), back.at(x, t)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()), "{}", e),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{}: {:?} vs {:?}", e, a, b),
        }
    }

    #[test]
    fn eval_is_pure(e in expr(), (x, t) in point()) {
        let a = e.at(x, t).ok();
        let b = e.at(x, t).ok();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn reversing_a_path_negates_the_integral(
        c in prop::collection::vec(-2.0..2.0f64, 4),
        (a, b) in point(),
        mid in point(),
    ) {
        let poly = Expr::parse(&format!("{} + {}*x + {}*x^2 + {}*x^3", c[0], c[1], c[2], c[3])).unwrap();
        let path = Path::new(vec![a, mid.0, b]).unwrap();
        let fwd = integrate_along_path(&poly, Var::X, &path, &Binding::new()).unwrap();
        let back = integrate_along_path(&poly, Var::X, &path.reversed(), &Binding::new()).unwrap();
        prop_assert!((fwd + back).norm() <= 1e-11 * (1.0 + fwd.norm()));
    }
}

#[test]
fn path_independence_for_reciprocal() {
    let e = Expr::parse("1/x").unwrap();
    let one = C64::new(1.0, 0.0);
    let two = C64::new(2.0, 0.0);
    let straight = Path::segment(one, two);
    let bent = Path::new(vec![one, C64::new(1.5, 0.8), two]).unwrap();
    let below = Path::new(vec![one, C64::new(1.2, -0.5), C64::new(1.8, -0.4), two]).unwrap();
    let want = C64::new(2f64.ln(), 0.0);
    for p in [straight, bent, below] {
        let v = integrate_along_path(&e, Var::X, &p, &Binding::new()).unwrap();
        assert!((v - want).norm() <= 1e-11, "{v}");
    }
}

#[test]
fn closure_quadrature_reports_error_estimate() {
    let p = Path::segment(C64::new(0.0, 0.0), C64::new(1.0, 1.0));
    let (v, err) = integrate_path_with(|z| Ok(z.exp()), &p, 1e-12).unwrap();
    let want = C64::new(1.0, 1.0).exp() - 1.0;
    assert!((v - want).norm() < 1e-12);
    assert!(err <= 1e-12 * (1.0 + v.norm()));
}
