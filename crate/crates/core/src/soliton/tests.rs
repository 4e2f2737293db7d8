use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use super::*;
use crate::expr::{parse, Expr};
use crate::report::DEFAULT_TOLERANCE;

fn line(name: &str, sign: &str, domain: &str) -> MetricField {
    MetricField::diagonal(&[name], &[sign], domain, "").unwrap()
}

fn surface(h: &str) -> WarpedProduct {
    WarpedProduct::parse(line("t", "1", "true"), line("u", "1", "true"), h).unwrap()
}

fn plan2() -> SamplingPlan {
    SamplingPlan::new(vec![[-2.0, 2.0], [-2.0, 2.0]])
}

fn flagship_split() -> PotentialSplit {
    let wp = surface("cosh(t)");
    let f = parse("cosh(t)*exp(u)", wp.product_metric().coords()).unwrap();
    decompose_potential(&wp, &f, &[0.0], &[0.0], &plan2()).unwrap()
}

fn constants(a: f64, c: f64) -> StructureConstants {
    StructureConstants {
        a,
        c,
        ..Default::default()
    }
}

#[test]
fn gaussian_soliton() {
    let g = MetricField::diagonal(&["x", "y"], &["1", "1"], "true", "").unwrap();
    let s = SolitonData::parse(SolitonMetric::Chart(g), "(x^2 + y^2)/2", "1").unwrap();
    assert_eq!(soliton_residual(&s, &[0.3, 1.2]).unwrap().max_abs(), 0.0);
}

#[test]
fn flagship_and_base_only_solitons() {
    let s = SolitonData::parse(
        SolitonMetric::Warped(surface("cosh(t)")),
        "cosh(t)*exp(u)",
        "cosh(t)*exp(u) - 1",
    )
    .unwrap();
    let r = check_soliton(&s, &plan2(), DEFAULT_TOLERANCE).unwrap();
    assert!(r.pass && r.max_abs() <= 1e-8, "{r:?}");

    let chart = surface("cosh(t)").product_metric().clone();
    let s = SolitonData::parse(SolitonMetric::Chart(chart), "cosh(t)*exp(u)", "cosh(t)*exp(u) - 1").unwrap();
    assert!(check_soliton(&s, &plan2(), DEFAULT_TOLERANCE).unwrap().max_abs() <= 1e-8);

    let s = SolitonData::parse(SolitonMetric::Warped(surface("exp(t)")), "exp(t)", "exp(t) - 1").unwrap();
    let r = check_soliton(&s, &plan2(), DEFAULT_TOLERANCE).unwrap();
    assert!(r.pass && r.max_abs() <= 1e-8, "{r:?}");
}

#[test]
fn flagship_split_is_cosh_and_exp_minus_one() {
    let split = flagship_split();
    for t in [-1.0, 0.0, 0.7] {
        assert_abs_diff_eq!(split.beta.eval(&[t, 99.0]).unwrap(), f64::cosh(t), epsilon = 1e-14);
    }
    for u in [-1.0, 0.0, 1.3] {
        assert_abs_diff_eq!(split.phi.eval(&[u]).unwrap(), u.exp() - 1.0, epsilon = 1e-14);
    }
}

#[test]
fn base_potential_splits_trivially() {
    let wp = surface("cosh(t)");
    let f = parse("t^2", wp.product_metric().coords()).unwrap();
    let split = decompose_potential(&wp, &f, &[0.0], &[0.0], &plan2()).unwrap();
    assert_eq!(split.phi, Expr::ZERO);
    assert_abs_diff_eq!(split.beta.eval(&[1.5]).unwrap(), 2.25);
}

#[test]
fn mixed_potential_is_not_decomposable() {
    let wp = surface("cosh(t)");
    let f = parse("t*u", wp.product_metric().coords()).unwrap();
    let err = decompose_potential(&wp, &f, &[0.0], &[0.0], &plan2()).unwrap_err();
    assert!(matches!(err, Error::NonDecomposable { .. }));
    let ratio = ScalarField::new(f / wp.h().expr().clone(), 2);
    assert_abs_diff_eq!(ratio.second_partials(&[0.0, 0.0]).unwrap().get(0, 1), 1.0);
}

#[test]
fn flagship_fiber_dependent_system() {
    let wp = surface("cosh(t)");
    let lambda = parse("cosh(t)*exp(u) - 1", wp.product_metric().coords()).unwrap();
    let r = check_fiber_dependent(
        &wp,
        &flagship_split(),
        &constants(-1.0, -1.0),
        &lambda,
        &plan2(),
        DEFAULT_TOLERANCE,
    )
    .unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.max_abs() <= 1e-7);
    assert_abs_diff_eq!(r.derived["b"], -1.0, epsilon = 1e-12);
    assert!(r.derived["energy_spread"] <= 1e-7);
    assert_eq!(r.lines.len(), 6);
}

#[test]
fn tampered_lambda_fails_on_lambda_line() {
    let wp = surface("cosh(t)");
    let lambda = parse("cosh(t)*exp(u) - 1 + 0.1", wp.product_metric().coords()).unwrap();
    let r = check_fiber_dependent(
        &wp,
        &flagship_split(),
        &constants(-1.0, -1.0),
        &lambda,
        &plan2(),
        DEFAULT_TOLERANCE,
    )
    .unwrap();
    assert!(!r.pass);
    let l = r.line("lambda").unwrap();
    assert!(!l.pass);
    assert_abs_diff_eq!(l.max_abs, 0.1, epsilon = 1e-9);
    assert!(r.lines.iter().filter(|l| !l.pass).count() == 1);
}

#[test]
fn constant_warp_is_rejected() {
    let wp = surface("1");
    let lambda = parse("0", wp.product_metric().coords()).unwrap();
    let split = PotentialSplit {
        beta: Expr::ZERO,
        phi: Expr::var(0),
        anchor: vec![0.0],
    };
    let err =
        check_fiber_dependent(&wp, &split, &constants(0.0, 0.0), &lambda, &plan2(), DEFAULT_TOLERANCE).unwrap_err();
    assert!(matches!(err, Error::TrivialWarp));
}

#[test]
fn gauge_choice_does_not_change_verdict() {
    let wp = surface("cosh(t)");
    let coords = wp.product_metric().coords().to_vec();
    let f = parse("cosh(t)*exp(u)", &coords).unwrap();
    let lambda = parse("cosh(t)*exp(u) - 1", &coords).unwrap();
    let plan = plan2().with_count(40);
    let reference = decompose_potential(&wp, &f, &[0.0], &[0.0], &plan).unwrap();
    let r0 = check_fiber_dependent(
        &wp,
        &reference,
        &constants(-1.0, -1.0),
        &lambda,
        &plan,
        DEFAULT_TOLERANCE,
    )
    .unwrap();
    for (q0, p0) in [(0.8, 0.0), (-1.5, 0.4), (0.3, -1.1)] {
        let split = decompose_potential(&wp, &f, &[q0], &[p0], &plan).unwrap();
        for p in plan.points(wp.product_metric().domain()).unwrap() {
            let a = reconstruction(&wp, &split).eval(&p).unwrap();
            let b = reconstruction(&wp, &reference).eval(&p).unwrap();
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
        let r = check_fiber_dependent(&wp, &split, &constants(-1.0, -1.0), &lambda, &plan, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(r.pass, r0.pass);
        assert!(r.pass);
    }
}

#[test]
fn base_only_examples() {
    let wp = surface("exp(t)");
    let coords = wp.product_metric().coords().to_vec();
    let p = |s: &str| parse(s, &coords).unwrap();
    let r = check_base_only(&wp, &p("exp(t)"), &p("exp(t) - 1"), 0.0, &plan2(), DEFAULT_TOLERANCE).unwrap();
    assert!(r.pass, "{r:?}");
    let r = check_base_only(&wp, &p("0"), &p("-1"), 0.0, &plan2(), DEFAULT_TOLERANCE).unwrap();
    assert!(r.pass, "{r:?}");
    let err = check_base_only(&wp, &p("exp(t) + u"), &p("-1"), 0.0, &plan2(), DEFAULT_TOLERANCE).unwrap_err();
    assert!(matches!(err, Error::FiberDependence { .. }));
    let r = check_base_only(&wp, &p("exp(t)"), &p("exp(t)"), 0.0, &plan2(), DEFAULT_TOLERANCE).unwrap();
    assert!(!r.pass);
}

fn brinkmann(h: &str, fiber: MetricField) -> WarpedProduct {
    let base = MetricField::parse(&["u", "v"], &[(0, 1, "1")], "v > -2", "").unwrap();
    WarpedProduct::parse(base, fiber, h).unwrap()
}

fn improper_plan(dim: usize) -> SamplingPlan {
    let mut b = vec![[-1.0, 1.0], [-1.5, 1.5]];
    b.extend(std::iter::repeat([0.3, 2.5]).take(dim - 2));
    SamplingPlan::new(b)
}

#[test]
fn improper_examples() {
    let wp = brinkmann("2 + v", line("w", "1", "true"));
    let coords = wp.product_metric().coords().to_vec();
    let split = PotentialSplit {
        beta: parse("u", &coords).unwrap(),
        phi: parse("-w^2/2", &["w"]).unwrap(),
        anchor: vec![0.0],
    };
    let r = check_improper(&wp, &split, 1.0, &Expr::ZERO, &improper_plan(3), DEFAULT_TOLERANCE).unwrap();
    assert!(r.pass, "{r:?}");

    let wp = brinkmann("2 + u + v", line("w", "1", "true"));
    let err = check_improper(&wp, &split, 1.0, &Expr::ZERO, &improper_plan(3), DEFAULT_TOLERANCE).unwrap_err();
    match err {
        Error::NotImproper { norm_sq, .. } => assert_abs_diff_eq!(norm_sq, 2.0, epsilon = 1e-12),
        e => panic!("{e}"),
    }

    let sphere = MetricField::diagonal(&["a", "b"], &["1", "sin(a)^2"], "0.2 < a < 2.9", "").unwrap();
    let wp = brinkmann("2 + v", sphere);
    let split = PotentialSplit {
        beta: parse("u", &["u", "v"]).unwrap(),
        phi: parse("cos(a)", &["a", "b"]).unwrap(),
        anchor: vec![0.0, 0.0],
    };
    let r = check_improper(&wp, &split, 1.0, &Expr::ZERO, &improper_plan(4), DEFAULT_TOLERANCE).unwrap();
    let l = r.line("fiber: Ric_F").unwrap();
    assert!(!l.pass);
    assert_abs_diff_eq!(l.max_abs, 1.0, epsilon = 1e-12);
}

#[test]
fn conformal_residual_examples() {
    let g = MetricField::diagonal(&["x", "y"], &["-1", "1"], "true", "").unwrap();
    let phi = g.parse_field("-(1/2)*(-x^2 + y^2)").unwrap();
    let spec = ConformalSpec { c: 0.0, b: 1.0 };
    assert_eq!(sc_residual(&g, &phi, spec, &[0.4, -0.9]).unwrap().max_abs(), 0.0);

    let s = MetricField::diagonal(&["theta", "phi"], &["1", "sin(theta)^2"], "0 < theta < pi", "").unwrap();
    let phi = s.parse_field("cos(theta)").unwrap();
    let spec = ConformalSpec { c: 1.0, b: 0.0 };
    assert!(sc_residual(&s, &phi, spec, &[1.2, 0.1]).unwrap().max_abs() < 1e-14);

    let h = MetricField::diagonal(&["r", "psi"], &["-1", "-sinh(r)^2"], "r > 0", "").unwrap();
    let phi = h.parse_field("cosh(r)").unwrap();
    let plan = SamplingPlan::new(vec![[0.1, 2.0], [-3.0, 3.0]]);
    let r = check_sc(&h, &phi, spec, &plan, DEFAULT_TOLERANCE).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn conformal_constants_examples() {
    let g = surface("cosh(t)").product_metric().clone();
    let f = g.parse_field("cosh(t)*exp(u)").unwrap();
    let fit = recover_conformal_constants(&g, &f, -1.0, &plan2(), DEFAULT_TOLERANCE).unwrap();
    assert!(fit.a0.abs() <= 1e-7);
    assert!(fit.deviation <= 1e-7);
    assert!(fit.report.pass);

    let flat = MetricField::diagonal(&["x", "y"], &["1", "1"], "true", "").unwrap();
    let f = flat.parse_field("(x^2 + y^2)/2").unwrap();
    let fit = recover_conformal_constants(&flat, &f, 0.0, &plan2(), DEFAULT_TOLERANCE).unwrap();
    assert_abs_diff_eq!(fit.a0, -1.0, epsilon = 1e-12);

    let h = surface("exp(t)").product_metric().clone();
    let f = h.parse_field("sinh(t)").unwrap();
    let plan = SamplingPlan::new(vec![[0.0, 0.0], [0.0, 0.0]]).with_count(1);
    match recover_conformal_constants(&h, &f, -1.0, &plan, DEFAULT_TOLERANCE).unwrap_err() {
        Error::NotConformal { spread, .. } => assert_abs_diff_eq!(spread, 1.0, epsilon = 1e-12),
        e => panic!("{e}"),
    }

    let s = MetricField::diagonal(&["theta", "phi"], &["1", "sin(theta)^2"], "0 < theta < pi", "").unwrap();
    let f = s.parse_field("cos(theta)").unwrap();
    let plan = SamplingPlan::new(vec![[0.1, 3.0], [-3.0, 3.0]]);
    assert!(matches!(
        recover_conformal_constants(&s, &f, -1.0, &plan, DEFAULT_TOLERANCE),
        Err(Error::NotEinstein { .. })
    ));
}

#[test]
fn bochner_check_on_sphere() {
    let s = MetricField::diagonal(&["theta", "phi"], &["1", "sin(theta)^2"], "0.1 < theta < 3", "").unwrap();
    let f = s.parse_field("cos(theta) + sin(theta)*cos(phi)").unwrap();
    let plan = SamplingPlan::new(vec![[0.1, 3.0], [-3.0, 3.0]]).with_count(50);
    assert!(check_bochner(&s, &f, &plan, DEFAULT_TOLERANCE).unwrap().pass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sc_residual_is_linear(alpha in -2.0..2.0f64, b1 in -2.0..2.0f64, b2 in -2.0..2.0f64,
                             c in -1.0..1.0f64, x in -1.0..1.0f64, y in 0.2..2.0f64) {
        let g = MetricField::diagonal(&["x", "y"], &["1/y^2", "1/y^2"], "y > 0", "").unwrap();
        let coords = g.coords().to_vec();
        let f1 = parse("x*y + exp(x)", &coords).unwrap();
        let f2 = parse("sin(x)/y", &coords).unwrap();
        let combo = g.field(Expr::Const(alpha) * f1.clone() + f2.clone());
        let p = [x, y];
        let lhs = sc_residual(&g, &combo, ConformalSpec { c, b: alpha * b1 + b2 }, &p).unwrap();
        let r1 = sc_residual(&g, &g.field(f1), ConformalSpec { c, b: b1 }, &p).unwrap();
        let r2 = sc_residual(&g, &g.field(f2), ConformalSpec { c, b: b2 }, &p).unwrap();
        let rhs = r1.scale(alpha).add(&r2);
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-10 * (1.0 + rhs.max_abs()));
    }
}
