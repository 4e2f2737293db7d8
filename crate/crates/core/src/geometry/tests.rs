use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use super::*;
use crate::expr::parse;

fn sphere() -> MetricField {
    MetricField::diagonal(&["theta", "phi"], &["1", "sin(theta)^2"], "0 < theta < pi", "S2").unwrap()
}

fn half_plane() -> MetricField {
    MetricField::diagonal(&["x", "y"], &["1/y^2", "1/y^2"], "y > 0", "H2").unwrap()
}

fn null_plane() -> MetricField {
    MetricField::parse(&["u", "v"], &[(0, 1, "1")], "true", "duv").unwrap()
}

#[test]
fn flat_metric_at() {
    let g = MetricField::diagonal(&["x", "y"], &["1", "1"], "true", "").unwrap();
    let m = g.metric_at(&[3.0, -2.0]).unwrap();
    assert_eq!(m.components.rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert_eq!(m.signature, Signature::new(2, 0));

    let g = MetricField::diagonal(&["x", "y"], &["-1", "1"], "true", "").unwrap();
    let m = g.metric_at(&[0.0, 0.0]).unwrap();
    assert_eq!(m.components.rows(), vec![vec![-1.0, 0.0], vec![0.0, 1.0]]);
    assert_eq!(m.signature.index, 1);
}

#[test]
fn null_coordinates_have_index_one() {
    let m = null_plane().metric_at(&[0.3, 0.7]).unwrap();
    assert_eq!(m.signature.index, 1);
    assert_abs_diff_eq!(m.components.to_matrix().determinant(), -1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(m.inverse[(0, 1)], 1.0, epsilon = 1e-15);
}

#[test]
fn degenerate_and_out_of_domain() {
    let g = MetricField::diagonal(&["x", "y"], &["1", "x^2"], "true", "").unwrap();
    assert!(matches!(g.metric_at(&[0.0, 1.0]), Err(Error::DegenerateMetric { .. })));
    assert!(matches!(
        half_plane().metric_at(&[0.0, -1.0]),
        Err(Error::DomainViolation { .. })
    ));
}

#[test]
fn sphere_christoffel() {
    let gam = sphere().christoffel(&[PI / 4.0, 0.3]).unwrap();
    assert_abs_diff_eq!(gam.get(0, 1, 1), -0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(gam.get(1, 0, 1), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(gam.get(1, 1, 0), 1.0, epsilon = 1e-12);
}

#[test]
fn christoffel_matches_finite_differences_of_components() {
    let g = sphere();
    let p = [0.9, 0.2];
    let h = 1e-6;
    let comp = |t: f64| (t.sin()).powi(2);
    let d = (comp(p[0] + h) - comp(p[0] - h)) / (2.0 * h);
    let gam = g.christoffel(&p).unwrap();
    assert_abs_diff_eq!(gam.get(0, 1, 1), -0.5 * d, epsilon = 1e-8);
}

#[test]
fn half_plane_christoffel_and_ricci() {
    let g = half_plane();
    let gam = g.christoffel(&[0.4, 2.0]).unwrap();
    assert_abs_diff_eq!(gam.get(0, 0, 1), -0.5, epsilon = 1e-12);
    let ric = g.ricci(&[0.4, 2.0]).unwrap();
    assert_abs_diff_eq!(ric.get(0, 0), -0.25, epsilon = 1e-12);
    assert_abs_diff_eq!(ric.get(1, 1), -0.25, epsilon = 1e-12);
    assert_abs_diff_eq!(ric.get(0, 1), 0.0, epsilon = 1e-12);
}

#[test]
fn sphere_ricci() {
    let ric = sphere().ricci(&[PI / 3.0, 1.0]).unwrap();
    assert_abs_diff_eq!(ric.get(0, 0), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(ric.get(1, 1), 0.75, epsilon = 1e-12);
}

#[test]
fn riemann_contracts_to_ricci() {
    let g = sphere();
    let p = [1.1, 0.4];
    let frame = g.frame(&p).unwrap();
    let r = frame.riemann().unwrap();
    let ric = frame.ricci().unwrap();
    for b in 0..2 {
        for d in 0..2 {
            let c: f64 = (0..2).map(|a| r.get(a, b, a, d)).sum();
            assert_abs_diff_eq!(c, ric.get(b, d), epsilon = 1e-12);
        }
    }
}

#[test]
fn flat_minkowski_is_flat() {
    let g = MetricField::diagonal(&["t", "x", "y"], &["-1", "1", "1"], "true", "").unwrap();
    assert_eq!(g.ricci(&[1.0, 2.0, 3.0]).unwrap().max_abs(), 0.0);
    assert_eq!(g.christoffel(&[1.0, 2.0, 3.0]).unwrap().max_abs(), 0.0);
}

#[test]
fn polar_flat_plane_has_vanishing_riemann() {
    let g = MetricField::diagonal(&["r", "t"], &["1", "r^2"], "r > 0", "").unwrap();
    let plan = SamplingPlan::new(vec![[0.1, 3.0], [-3.0, 3.0]]);
    for p in plan.points(g.domain()).unwrap() {
        assert!(g.riemann(&p).unwrap().max_abs() < 1e-9);
    }
}

#[test]
fn gradients_and_norms() {
    let flat = MetricField::diagonal(&["x", "y"], &["1", "1"], "true", "").unwrap();
    let f = flat.parse_field("x").unwrap();
    let grad = flat.gradient(&f, &[0.5, 0.5]).unwrap();
    assert_eq!(grad.components, vec![1.0, 0.0]);
    assert_eq!(flat.norm_sq(&grad, &[0.5, 0.5]).unwrap(), 1.0);

    let g = null_plane();
    let h = g.parse_field("2 + v").unwrap();
    let grad = g.gradient(&h, &[0.1, 0.2]).unwrap();
    assert_eq!(grad.components, vec![1.0, 0.0]);
    assert_eq!(g.norm_sq(&grad, &[0.1, 0.2]).unwrap(), 0.0);
    let m = g.metric_at(&[0.1, 0.2]).unwrap();
    assert_eq!(grad.causal_character(&m.components), CausalCharacter::Lightlike);

    let line = MetricField::diagonal(&["t"], &["1"], "true", "").unwrap();
    let h = line.parse_field("exp(t)").unwrap();
    let grad = line.gradient(&h, &[0.0]).unwrap();
    let n = line.norm_sq(&grad, &[0.0]).unwrap();
    assert_abs_diff_eq!(n, 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(n - h.value(&[0.0]).unwrap().powi(2), 0.0, epsilon = 1e-15);
}

#[test]
fn hessians_and_laplacians() {
    let flat = MetricField::diagonal(&["x", "y"], &["1", "1"], "true", "").unwrap();
    let f = flat.parse_field("(x^2 + y^2)/2").unwrap();
    let hess = flat.hessian(&f, &[0.3, -0.2]).unwrap();
    assert_eq!(hess.rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert_eq!(flat.laplacian(&f, &[0.3, -0.2]).unwrap(), 2.0);

    let s = sphere();
    let phi = s.parse_field("cos(theta)").unwrap();
    let p = [PI / 3.0, 0.5];
    let hess = s.hessian(&phi, &p).unwrap();
    let g = s.metric_at(&p).unwrap().components;
    let expected = g.scale(-(PI / 3.0).cos());
    assert!(hess.sub(&expected).max_abs() < 1e-12);
    assert_abs_diff_eq!(s.laplacian(&phi, &p).unwrap(), -1.0, epsilon = 1e-12);

    let w = MetricField::diagonal(&["t", "u"], &["1", "cosh(t)^2"], "true", "").unwrap();
    let f = w.parse_field("cosh(t)*exp(u)").unwrap();
    let plan = SamplingPlan::new(vec![[-2.0, 2.0], [-2.0, 2.0]]);
    for p in plan.points(w.domain()).unwrap() {
        assert!(w.hessian(&f, &p).unwrap().get(0, 1).abs() < 1e-12);
    }
}

#[test]
fn bochner_on_sphere() {
    let s = sphere();
    let phi = s.parse_field("cos(theta)").unwrap();
    let p = [PI / 2.0, 0.0];
    let x = TangentVector::new(vec![1.0, 0.0]);
    let terms = s.frame(&p).unwrap().bochner(&phi, &x).unwrap();
    assert_abs_diff_eq!(terms.divergence, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(terms.ricci_term, -1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(terms.laplacian_derivative, 2.0, epsilon = 1e-12);
    assert!(terms.residual().abs() < 1e-6);
}

#[test]
fn bochner_on_flat_spaces() {
    let flat = MetricField::diagonal(&["x", "y"], &["1", "1"], "true", "").unwrap();
    let phi = flat.parse_field("sin(x)*exp(y) + x^3*y").unwrap();
    let x = TangentVector::new(vec![0.3, -1.2]);
    assert!(flat.bochner_residual(&phi, &[0.2, 0.4], &x).unwrap().abs() < 1e-6);

    let mink = MetricField::diagonal(&["t", "x", "y"], &["-1", "1", "1"], "true", "").unwrap();
    let phi = mink.parse_field("t^2 - 3*x*y + y^2").unwrap();
    let x = TangentVector::new(vec![1.0, 2.0, 3.0]);
    assert_eq!(mink.bochner_residual(&phi, &[0.5, 0.5, 0.5], &x).unwrap(), 0.0);
}

#[test]
fn sphere_pullback() {
    let c = ["theta", "phi"];
    let emb = ["sin(theta)*cos(phi)", "sin(theta)*sin(phi)", "cos(theta)"].map(|s| parse(s, &c).unwrap());
    let g = pullback_metric(&emb, Signature::new(3, 0), &c, "0 < theta < pi", "").unwrap();
    for p in [[0.4, 1.0], [2.0, -0.3]] {
        let m = g.metric_at(&p).unwrap().components;
        assert_abs_diff_eq!(m.get(0, 0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.get(0, 1), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.get(1, 1), p[0].sin().powi(2), epsilon = 1e-14);
    }
}

#[test]
fn hyperboloid_pullbacks() {
    let c = ["r", "psi"];
    let emb = ["sinh(r)*cos(psi)", "sinh(r)*sin(psi)", "cosh(r)"].map(|s| parse(s, &c).unwrap());
    let g = pullback_metric(&emb, Signature::new(3, 2), &c, "r > 0", "").unwrap();
    let p = [0.7, 0.2];
    let m = g.metric_at(&p).unwrap().components;
    assert_abs_diff_eq!(m.get(0, 0), -1.0, epsilon = 1e-13);
    assert_abs_diff_eq!(m.get(1, 1), -(0.7f64.sinh().powi(2)), epsilon = 1e-13);
    assert!(g.ricci(&p).unwrap().sub(&m).max_abs() < 1e-10);

    let emb = ["cosh(r)", "sinh(r)*cos(psi)", "sinh(r)*sin(psi)"].map(|s| parse(s, &c).unwrap());
    let g = pullback_metric(&emb, Signature::new(3, 1), &c, "r > 0", "").unwrap();
    let plan = SamplingPlan::new(vec![[0.1, 2.0], [-3.0, 3.0]]).with_count(20);
    for p in plan.points(g.domain()).unwrap() {
        let m = g.metric_at(&p).unwrap().components;
        assert!(g.ricci(&p).unwrap().add(&m).max_abs() < 1e-9);
    }
}

#[test]
fn pullback_rejects_mismatched_ambient() {
    let c = ["x"];
    let emb = [parse("x", &c).unwrap()];
    assert!(pullback_metric(&emb, Signature::new(2, 0), &c, "true", "").is_err());
}

#[test]
fn signature_change_detected() {
    let g = MetricField::diagonal(&["x", "y"], &["x", "1"], "x*x > 0.01", "").unwrap();
    let plan = SamplingPlan::new(vec![[-1.0, 1.0], [-1.0, 1.0]]);
    assert!(matches!(g.validate(&plan), Err(Error::SignatureChange { .. })));
    let plan = SamplingPlan::new(vec![[0.2, 1.0], [-1.0, 1.0]]);
    assert_eq!(g.validate(&plan).unwrap(), Signature::new(2, 0));
}

#[test]
fn finite_difference_fallback_agrees() {
    let exact = sphere();
    let fd = sphere().with_depth_limit(Some(1));
    let p = [1.0, 0.5];
    let a = exact.ricci(&p).unwrap();
    let b = fd.ricci(&p).unwrap();
    assert!(a.sub(&b).max_abs() < 1e-6);
}

#[test]
fn spec_roundtrip() {
    let json =
        r#"{"coords": ["t","u"], "components": {"0,0": "1", "1,1": "cosh(t)^2"}, "domain": "true", "label": "w"}"#;
    let spec: MetricSpec = serde_json::from_str(json).unwrap();
    let g = spec.build().unwrap();
    assert_eq!(g.component(0, 1), &Expr::ZERO);
    let again = g.to_spec().build().unwrap();
    assert_eq!(g, again);

    let bad = r#"{"coords": ["t"], "components": {"0,1": "1"}}"#;
    let spec: MetricSpec = serde_json::from_str(bad).unwrap();
    assert!(spec.build().is_err());
}

fn warped_chart() -> MetricField {
    MetricField::diagonal(&["t", "u", "w"], &["-1", "exp(2*t)", "cosh(t)^2*(1 + u^2)"], "true", "").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tensors_are_symmetric(t in -1.5..1.5f64, u in -1.5..1.5f64, w in -1.5..1.5f64) {
        let g = warped_chart();
        let frame = g.frame(&[t, u, w]).unwrap();
        let ric = frame.ricci_matrix().unwrap();
        prop_assert!((&ric - ric.transpose()).amax() < 1e-10);
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(frame.christoffel.get(k, i, j), frame.christoffel.get(k, j, i));
                }
            }
        }
    }

    #[test]
    fn hessian_is_linear(alpha in -3.0..3.0f64, t in -1.0..1.0f64, u in -1.0..1.0f64, w in -1.0..1.0f64) {
        let g = warped_chart();
        let c = g.coords();
        let f1 = parse("sin(t)*u + w^2", c).unwrap();
        let f2 = parse("exp(u)*cosh(w)", c).unwrap();
        let combo = g.field(Expr::Const(alpha) * f1.clone() + f2.clone());
        let p = [t, u, w];
        let lhs = g.hessian(&combo, &p).unwrap();
        let rhs = g.hessian(&g.field(f1), &p).unwrap().scale(alpha).add(&g.hessian(&g.field(f2), &p).unwrap());
        prop_assert!(lhs.sub(&rhs).max_abs() < 1e-10 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn bochner_identity_holds(t in -1.0..1.0f64, u in -1.0..1.0f64, w in -1.0..1.0f64,
                              x0 in -1.0..1.0f64, x1 in -1.0..1.0f64, x2 in -1.0..1.0f64) {
        let g = warped_chart();
        let phi = g.parse_field("t*u*w + cosh(t)*sin(w) + u^2").unwrap();
        let frame = g.frame(&[t, u, w]).unwrap();
        let terms = frame.bochner(&phi, &TangentVector::new(vec![x0, x1, x2])).unwrap();
        let scale = 1.0 + frame.ricci().unwrap().max_abs();
        prop_assert!(terms.residual().abs() <= 1e-6 * scale);
    }
}
