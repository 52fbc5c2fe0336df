use dbundle::smooth::{flat_bump, BumpSpec, Quadrature, StepFunction};
use dbundle::zero_detect::{check_blowup_rate, check_min_bound, functional_f, functional_kernel, CurveSuite, ZeroDetectConfig};
use dbundle::{SmoothMapF32, SmoothMapF64};
use proptest::prelude::*;

fn cfg() -> ZeroDetectConfig {
    ZeroDetectConfig::default()
}

// composite trapezoid on a fine grid; independent of the adaptive Simpson code
fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h)).sum();
    h * (inner + 0.5 * (f(a) + f(b)))
}

#[test]
fn constants_match_closed_forms() {
    for (k, expected) in [(1.0, (-std::f64::consts::E).exp()), (2.0, (-(0.5f64).exp()).exp()), (4.0, (-(0.25f64).exp()).exp())] {
        let r = functional_kernel(&|_| k, &cfg()).unwrap();
        assert!(!r.zero_detected);
        assert!((r.f_value - expected).abs() < 1e-12, "{k}: {}", r.f_value);
    }
}

#[test]
fn positive_curves_agree_with_trapezoid_oracle() {
    let cases: [(&str, fn(f64) -> f64); 3] = [("affine", |x| 1.0 + x), ("exp", f64::exp), ("lifted", |x| x * x + 0.01)];
    for (name, f) in cases {
        let r = functional_kernel(&|x| f(x), &cfg()).unwrap();
        let oracle = trapezoid(|x| 1.0 / f(x), 0.0, 1.0, 400_000);
        assert!((r.log_log_value - oracle).abs() < 1e-6, "{name}: {} vs {oracle}", r.log_log_value);
    }
}

#[test]
fn builtin_suite_is_half_zeros() {
    let suite = CurveSuite::builtin();
    let detected = suite
        .functions
        .iter()
        .filter(|f| functional_f(&f.to_map::<f64>().unwrap(), &cfg()).unwrap().zero_detected)
        .count();
    assert_eq!(detected, 10);
}

#[test]
fn f32_and_f64_agree_on_positive_curves() {
    let f64_map = SmoothMapF64::curve(0.0, 1.0, dbundle::smooth::SmoothnessClass::Analytic, |x: f64| 2.0 + x);
    let f32_map = SmoothMapF32::curve(0.0, 1.0, dbundle::smooth::SmoothnessClass::Analytic, |x: f32| 2.0 + x);
    let mut c = cfg();
    c.quad_tol = 1e-5;
    let a = functional_f(&f64_map, &cfg()).unwrap().f_value;
    let b = functional_f(&f32_map, &c).unwrap().f_value;
    // exact: exp(-exp(ln 3 - ln 2)) = exp(-3/2)
    assert!((a - (-1.5f64).exp()).abs() < 1e-9);
    assert!((f64::from(b) - (-1.5f64).exp()).abs() < 1e-5);
}

#[test]
fn min_bound_on_affine() {
    let f = SmoothMapF64::curve(0.0, 1.0, dbundle::smooth::SmoothnessClass::Analytic, |x: f64| 1.0 + 2.0 * x);
    let r = check_min_bound(&f, 2.0, &cfg()).unwrap();
    // C exp(-C * ln(3)/2) = 2 / 3^(1)
    assert!((r.lhs - 2.0 / 3.0).abs() < 1e-8);
    assert_eq!(r.rhs, 1.0);
    assert!(r.holds);
}

#[test]
fn blowup_rate_on_bowl() {
    let f = SmoothMapF64::scalar(
        SmoothMapF64::unbounded(2),
        dbundle::smooth::SmoothnessClass::Analytic,
        |v: &[f64]| v[0] * v[0] + (v[1] - 0.5) * (v[1] - 0.5),
    );
    let r = check_blowup_rate(&f, 0.0, 0.5, (1e-3, 1e-1), &cfg()).unwrap();
    // |t| int_0^1 dx / (t^2 + (x - 1/2)^2) = 2 atan(1/(2|t|)) >= 2 atan(5) on the box
    assert!(r.c_fit >= 2.0 * 5f64.atan() - 0.05);
    assert!(r.holds);
}

proptest! {
    #[test]
    fn bump_is_flat_and_monotone(t in 0.0f64..50.0, dt in 0.0f64..1.0) {
        prop_assert!(flat_bump(-t) == 0.0);
        prop_assert!(flat_bump(t + dt) >= flat_bump(t));
        prop_assert!(flat_bump(t) < 1.0);
    }

    #[test]
    fn step_is_symmetric(t in -1.0f64..2.0, eps in 0.05f64..0.45) {
        let s = StepFunction::new(BumpSpec::new(eps).unwrap());
        let v = s.value(t);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!((v + s.value(1.0 - t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_matches_polynomial_antiderivative(a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.5f64..3.0) {
        let q = Quadrature::new(1e-11, 1e6);
        let got = q.integrate(|x: f64| a * x * x + b * x + c, 0.0, 1.0);
        prop_assert!((got - (a / 3.0 + b / 2.0 + c)).abs() < 1e-10);
    }

    #[test]
    fn lifted_squares_never_vanish(shift in 0.0f64..1.0, lift in 1e-3f64..1.0) {
        let r = functional_kernel(&|x: f64| (x - shift) * (x - shift) + lift, &cfg()).unwrap();
        prop_assert!(!r.zero_detected);
        // int_0^1 dx / ((x-s)^2 + l) in closed form
        let s = lift.sqrt();
        let exact = (((1.0 - shift) / s).atan() + (shift / s).atan()) / s;
        prop_assert!((r.log_log_value - exact).abs() <= 1e-7 * exact.max(1.0));
    }

    #[test]
    fn squares_with_a_root_vanish(root in 0.0f64..1.0) {
        let r = functional_kernel(&|x: f64| (x - root) * (x - root), &cfg()).unwrap();
        prop_assert!(r.zero_detected);
        prop_assert_eq!(r.f_value, 0.0);
    }
}
