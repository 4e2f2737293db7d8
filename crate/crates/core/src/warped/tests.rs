use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use super::*;
use crate::report::DEFAULT_TOLERANCE;

fn line(name: &str, domain: &str) -> MetricField {
    MetricField::diagonal(&[name], &["1"], domain, "").unwrap()
}

fn surface(h: &str) -> WarpedProduct {
    WarpedProduct::parse(line("t", "true"), line("u", "true"), h).unwrap()
}

fn plan2() -> SamplingPlan {
    SamplingPlan::new(vec![[-2.0, 2.0], [-2.0, 2.0]])
}

#[test]
fn product_components() {
    let wp = surface("exp(t)");
    let g = wp.product_metric().metric_at(&[0.5, 3.0]).unwrap().components;
    assert_eq!(g.get(0, 0), 1.0);
    assert_eq!(g.get(0, 1), 0.0);
    assert_abs_diff_eq!(g.get(1, 1), 1.0f64.exp(), epsilon = 1e-14);

    let wp = surface("cosh(t)");
    let g = wp.product_metric().metric_at(&[1.0, 0.0]).unwrap().components;
    assert_abs_diff_eq!(g.get(1, 1), 1.0f64.cosh().powi(2), epsilon = 1e-14);
}

#[test]
fn nonpositive_warp_is_a_domain_violation() {
    let wp = surface("t");
    assert!(matches!(wp.validate(&plan2()), Err(Error::DomainViolation { .. })));
    assert!(matches!(wp.frame(&[-0.5, 0.0]), Err(Error::DomainViolation { .. })));
}

#[test]
fn warp_must_not_use_fiber_coordinates() {
    let base = line("t", "true");
    let fiber = line("u", "true");
    let h = crate::expr::Expr::var(1);
    assert!(matches!(
        WarpedProduct::new(base, fiber, h),
        Err(Error::FiberDependence { .. })
    ));
}

#[test]
fn exponential_surface_ricci() {
    let ric = surface("exp(t)").warped_ricci(&[0.0, 0.4]).unwrap();
    assert_abs_diff_eq!(ric.get(0, 0), -1.0, epsilon = 1e-14);
    assert_eq!(ric.get(0, 1), 0.0);
    assert_abs_diff_eq!(ric.get(1, 1), -1.0, epsilon = 1e-14);
}

#[test]
fn cosh_surface_ricci() {
    let ric = surface("cosh(t)").warped_ricci(&[1.0, 0.0]).unwrap();
    assert_abs_diff_eq!(ric.get(1, 1), -(1.0f64.cosh().powi(2)), epsilon = 1e-12);
    assert_abs_diff_eq!(ric.get(1, 1), -2.3811, epsilon = 1e-4);
}

#[test]
fn constant_warp_gives_product_ricci() {
    let base = MetricField::diagonal(&["a", "b"], &["1", "sin(a)^2"], "0 < a < pi", "").unwrap();
    let fiber = MetricField::diagonal(&["x", "y"], &["1/y^2", "1/y^2"], "y > 0", "").unwrap();
    let wp = WarpedProduct::parse(base.clone(), fiber.clone(), "1").unwrap();
    let p = [1.0, 0.3, 0.2, 2.0];
    let ric = wp.warped_ricci(&p).unwrap();
    assert_eq!(ric.block(0, 2), base.ricci(&p[..2]).unwrap());
    assert_eq!(ric.block(2, 2), fiber.ricci(&p[2..]).unwrap());
}

#[test]
fn hessian_examples() {
    let wp = surface("cosh(t)");
    let f = wp.parse_field("cosh(t)*exp(u)").unwrap();
    for p in plan2().points(wp.product_metric().domain()).unwrap() {
        assert!(wp.warped_hessian(&f, &p).unwrap().get(0, 1).abs() < 1e-12);
    }

    let f = wp.parse_field("t^3").unwrap();
    let p = [0.7, 0.1];
    let hess = wp.warped_hessian(&f, &p).unwrap();
    assert_eq!(hess.get(0, 1), 0.0);
    let expected = 0.7f64.cosh() * 0.7f64.sinh() * 3.0 * 0.49;
    assert_abs_diff_eq!(hess.get(1, 1), expected, epsilon = 1e-12);

    let wp = surface("exp(t)");
    let f = wp.parse_field("u").unwrap();
    let hess = wp.warped_hessian(&f, &[0.0, 0.0]).unwrap();
    assert_abs_diff_eq!(hess.get(0, 1), -1.0, epsilon = 1e-14);
    let direct = wp.product_metric().hessian(&f, &[0.0, 0.0]).unwrap();
    assert_abs_diff_eq!(direct.get(0, 1), -1.0, epsilon = 1e-14);
}

#[test]
fn einstein_examples() {
    let r = surface("exp(t)")
        .einstein_check(-1.0, 0.0, &plan2(), DEFAULT_TOLERANCE)
        .unwrap();
    assert!(r.pass, "{r:?}");
    let r = surface("cosh(t)")
        .einstein_check(-1.0, -1.0, &plan2(), DEFAULT_TOLERANCE)
        .unwrap();
    assert!(r.pass, "{r:?}");
    let wp = WarpedProduct::parse(
        line("theta", "0.001 < theta < 3.14059"),
        line("phi", "true"),
        "sin(theta)",
    )
    .unwrap();
    let plan = SamplingPlan::new(vec![[0.0, 3.2], [-3.0, 3.0]]);
    let r = wp.einstein_check(1.0, 1.0, &plan, DEFAULT_TOLERANCE).unwrap();
    assert!(r.pass, "{r:?}");

    let r = surface("cosh(t)")
        .einstein_check(-1.0, 0.0, &plan2(), DEFAULT_TOLERANCE)
        .unwrap();
    assert!(!r.pass);
    assert!(!r.line("energy").unwrap().pass);
    assert!(r.line("ode").unwrap().pass);
}

#[test]
fn einstein_with_higher_dimensional_base() {
    // Hyperbolic 3-space as (half-plane) ×_h ℝ with h = 1/y.
    let base = MetricField::diagonal(&["x", "y"], &["1/y^2", "1/y^2"], "y > 0", "").unwrap();
    let wp = WarpedProduct::parse(base, line("w", "true"), "1/y").unwrap();
    let plan = SamplingPlan::new(vec![[-2.0, 2.0], [0.2, 3.0], [-2.0, 2.0]]);
    let r = wp.einstein_check(-1.0, 0.0, &plan, DEFAULT_TOLERANCE).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn nested_fiber_spec() {
    let json = r#"{
        "base": {"coords": ["t"], "components": {"0,0": "-1"}},
        "fiber": {
            "base": {"coords": ["r"], "components": {"0,0": "1"}, "domain": "r > 0"},
            "fiber": {"coords": ["s"], "components": {"0,0": "1"}},
            "h": "r"
        },
        "h": "exp(t)"
    }"#;
    let spec: WarpedProductSpec = serde_json::from_str(json).unwrap();
    let wp = spec.build().unwrap();
    assert_eq!(wp.fiber_dim(), 2);
    assert_eq!(wp.product_metric().coords(), ["t", "r", "s"]);
    let plan = SamplingPlan::new(vec![[-1.0, 1.0], [0.1, 2.0], [-1.0, 1.0]]);
    assert_eq!(wp.validate(&plan).unwrap().index, 1);
    let r = wp.einstein_check(0.0, 0.0, &plan, DEFAULT_TOLERANCE).unwrap();
    assert!(!r.pass);
    let roundtrip = wp.to_spec().build().unwrap();
    assert_eq!(roundtrip.product_metric(), wp.product_metric());
}

fn lorentz_wp() -> WarpedProduct {
    let base = MetricField::diagonal(&["t", "x"], &["-1", "exp(t)"], "true", "").unwrap();
    let fiber = MetricField::diagonal(&["a", "b"], &["1", "sin(a)^2"], "0.2 < a < 2.9", "").unwrap();
    WarpedProduct::parse(base, fiber, "cosh(t) + x^2").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn block_formulas_match_chart(t in -1.0..1.0f64, x in -1.0..1.0f64, a in 0.3..2.8f64, b in -3.0..3.0f64) {
        let wp = lorentz_wp();
        let p = [t, x, a, b];
        let closed = wp.warped_ricci(&p).unwrap();
        let direct = wp.product_metric().ricci(&p).unwrap();
        prop_assert!(closed.sub(&direct).max_abs() <= 1e-7 * (1.0 + direct.max_abs()));
        for i in 0..2 {
            for j in 2..4 {
                prop_assert_eq!(closed.get(i, j), 0.0);
                prop_assert!(direct.get(i, j).abs() <= 1e-8);
            }
        }
        let f = wp.parse_field("sin(t)*x + (cosh(t) + x^2)*cos(a)*exp(b)").unwrap();
        let closed = wp.warped_hessian(&f, &p).unwrap();
        let direct = wp.product_metric().hessian(&f, &p).unwrap();
        prop_assert!(closed.sub(&direct).max_abs() <= 1e-7 * (1.0 + direct.max_abs()));
        for i in 0..2 {
            for j in 2..4 {
                prop_assert!(closed.get(i, j).abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn cross_validation_report_passes() {
    let wp = lorentz_wp();
    let f = wp.parse_field("t*x*a + exp(b)").unwrap();
    let plan = SamplingPlan::new(vec![[-1.0, 1.0], [-1.0, 1.0], [0.3, 2.8], [-2.0, 2.0]]);
    let r = wp.cross_validate(Some(&f), &plan, 1e-7).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.lines.len(), 3);
    assert!(r.line("mixed").unwrap().max_abs <= 1e-8);
}
