use std::f64::consts::FRAC_PI_2;

use super::*;
use crate::catalog;
use crate::geometry::MetricField;
use crate::sampling::SamplingPlan;
use crate::Error;

fn warp(a: f64, h0: f64, dh0: f64, horizon: f64, step: f64) -> WarpODEProblem {
    WarpODEProblem {
        a,
        sigma: 1.0,
        h0,
        dh0,
        horizon,
        step,
        require_no_zeros: false,
    }
}

#[test]
fn exponential_branch() {
    let sol = solve_warp_ode(&warp(-1.0, 1.0, 1.0, 5.0, 1e-3)).unwrap();
    assert_eq!(sol.family, WarpFamily::Exponential);
    assert!(sol.energy0.abs() < 1e-15);
    assert!(sol.max_relative_error < 1e-6, "{}", sol.max_relative_error);
    assert!(sol.max_energy_drift <= 1e-9, "{}", sol.max_energy_drift);
    let last = sol.samples.last().unwrap();
    assert_eq!(last.t, 5.0);
    assert!((last.h / 5f64.exp() - 1.0).abs() < 1e-6);
}

#[test]
fn cosh_branch() {
    let sol = solve_warp_ode(&warp(-1.0, 1.0, 0.0, 5.0, 1e-3)).unwrap();
    assert_eq!(sol.family, WarpFamily::Cosh);
    assert_eq!(sol.energy0, -1.0);
    assert!(sol.max_relative_error < 1e-6);
    assert!(sol.max_energy_drift <= 1e-8 * 2.0, "{}", sol.max_energy_drift);
}

#[test]
fn oscillatory_branch_crosses_zero() {
    match solve_warp_ode(&warp(1.0, 1.0, 0.0, 5.0, 1e-3)) {
        Err(Error::ZeroCrossing { t }) => assert!((t - FRAC_PI_2).abs() < 1e-6, "{t}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn negative_sigma_flips_branches() {
    // σ = −1, a = 1: h'' = h.
    let mut p = warp(1.0, 2.0, -2.0, 3.0, 1e-3);
    p.sigma = -1.0;
    let sol = solve_warp_ode(&p).unwrap();
    assert_eq!(sol.family, WarpFamily::Exponential);
    assert!(sol.max_relative_error < 1e-6);
    p.dh0 = 3.0;
    assert_eq!(solve_warp_ode(&p).unwrap().family, WarpFamily::Sinh);
}

#[test]
fn warp_input_errors() {
    let mut p = warp(1.0, 1.0, 0.0, 1.0, 1e-3);
    p.require_no_zeros = true;
    assert!(matches!(solve_warp_ode(&p), Err(Error::InvalidInput(_))));
    assert!(matches!(
        solve_warp_ode(&warp(-1.0, 1.0, 0.0, 1.0, 0.0)),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        solve_warp_ode(&warp(-1.0, -1.0, 0.0, 1.0, 1e-3)),
        Err(Error::InvalidInput(_))
    ));
    let mut p = warp(-1.0, 1.0, 0.0, 1.0, 1e-3);
    p.sigma = 0.5;
    assert!(matches!(solve_warp_ode(&p), Err(Error::InvalidInput(_))));
}

#[test]
fn rk4_order() {
    let err = |dt: f64| {
        let sol = solve_warp_ode(&warp(-1.0, 1.0, 1.0, 2.0, dt)).unwrap();
        (sol.samples.last().unwrap().h - 2f64.exp()).abs()
    };
    let (coarse, fine) = (err(0.2), err(0.1));
    assert!(coarse / fine >= 8.0, "{coarse} / {fine}");
}

#[test]
fn sample_count_is_capped() {
    let sol = solve_warp_ode(&warp(-0.01, 1.0, 0.0, 10.0, 1e-4)).unwrap();
    assert_eq!(sol.steps, 100_000);
    assert!(sol.samples.len() <= 10_002);
    assert_eq!(sol.samples.last().unwrap().t, 10.0);
}

#[test]
fn flat_geodesic_is_straight() {
    let g = MetricField::diagonal(&["x", "y"], &["1", "1"], "true", "flat").unwrap();
    let r = geodesic(&g, &[1.0, -2.0], &[0.5, 0.25], 4.0, &GeodesicOptions::default()).unwrap();
    assert_eq!(r.status, GeodesicStatus::Completed);
    assert!((r.end.position[0] - 3.0).abs() < 1e-12);
    assert!((r.end.position[1] + 1.0).abs() < 1e-12);
    assert!(r.max_norm_drift < 1e-14);
}

#[test]
fn sphere_equator_is_great_circle() {
    let entry = catalog::build("sphere_round", None).unwrap();
    let seed = entry.geodesic.clone().unwrap();
    let r = geodesic(&entry.metric, &seed.p0, &seed.v0, 10.0, &GeodesicOptions::default()).unwrap();
    assert_eq!(r.status, GeodesicStatus::Completed);
    assert!((r.end.position[0] - FRAC_PI_2).abs() < 1e-9);
    assert!(r.relative_norm_drift <= 1e-6);
}

#[test]
fn sphere_meridian_stays_accurate() {
    let g = MetricField::diagonal(&["theta", "phi"], &["1", "sin(theta)^2"], "theta > 0 && theta < pi", "").unwrap();
    let r = geodesic(&g, &[FRAC_PI_2, 0.0], &[0.3, 0.8], 10.0, &GeodesicOptions::default()).unwrap();
    assert_eq!(r.status, GeodesicStatus::Completed);
    assert!(r.relative_norm_drift <= 1e-6, "{}", r.relative_norm_drift);
}

#[test]
fn been_busemann_blows_up() {
    let entry = catalog::build("been_busemann", None).unwrap();
    let seed = entry.geodesic.clone().unwrap();
    let r = geodesic(
        &entry.metric,
        &seed.p0,
        &seed.v0,
        seed.horizon,
        &GeodesicOptions::default(),
    )
    .unwrap();
    match r.status {
        GeodesicStatus::BlowUp { s_star, width } => {
            assert!((s_star - 1.0).abs() < 0.01, "{s_star}");
            assert!(width < 0.01);
        }
        other => panic!("{other:?}"),
    }
    // x(s) = ln(1 − s) along the way.
    let row = r.trajectory.iter().find(|row| row.s >= 0.5).unwrap();
    assert!((row.position[0] - (1.0 - row.s).ln()).abs() < 1e-8);
    assert!(r.norm_sq0.abs() < 1e-15);
}

#[test]
fn leaving_the_chart_is_reported() {
    let g = MetricField::diagonal(&["x", "y"], &["1", "1"], "x < 1", "").unwrap();
    let r = geodesic(&g, &[0.0, 0.0], &[1.0, 0.0], 3.0, &GeodesicOptions::default()).unwrap();
    match r.status {
        GeodesicStatus::LeftDomain { s_star, .. } => assert!((s_star - 1.0).abs() < 1e-6),
        other => panic!("{other:?}"),
    }
}

#[test]
fn trajectory_is_decimated() {
    let g = MetricField::diagonal(&["x"], &["1"], "true", "").unwrap();
    let opts = GeodesicOptions {
        step: 1e-3,
        max_rows: 100,
        ..GeodesicOptions::default()
    };
    let r = geodesic(&g, &[0.0], &[1.0], 1.0, &opts).unwrap();
    assert!(r.trajectory.len() <= 100);
    assert_eq!(r.trajectory.last().unwrap().s, 1.0);
    assert_eq!(r.accepted_steps, 1000);
}

#[test]
fn hyperbolic_plane_never_blows_up() {
    let entry = catalog::build("hyperbolic_chart", None).unwrap();
    let seed = entry.geodesic.clone().unwrap();
    let r = geodesic(&entry.metric, &seed.p0, &seed.v0, 20.0, &GeodesicOptions::default()).unwrap();
    assert_eq!(r.status, GeodesicStatus::Completed);
    assert!(r.relative_norm_drift <= 1e-6);
}

fn probe(name: &str) -> CompletenessReport {
    let entry = catalog::build(name, None).unwrap();
    let seed = entry.completeness.clone().unwrap();
    completeness_probe(entry.warped.as_ref().unwrap(), &seed.p0, &entry.sampling, 1e-9).unwrap()
}

#[test]
fn parallel_gradient_probe() {
    let r = probe("parallel_gradient_warp");
    assert!(r.parallel);
    assert_eq!(r.v0.as_deref(), Some(&[-1.0, 0.0][..]));
    assert!((r.t0.unwrap() - 2.0).abs() < 1e-6);
    assert!(r.incomplete_evidence);
    assert_eq!(r.verdict, INCOMPLETE_VERDICT);
}

#[test]
fn brinkmann_probe() {
    let r = probe("brinkmann_improper");
    assert!(r.parallel);
    assert_eq!(r.v0.as_deref(), Some(&[0.0, -1.0][..]));
    assert!((r.t0.unwrap() - 2.0).abs() < 1e-6);
    assert!(r.incomplete_evidence);
}

#[test]
fn cosh_probe_is_inconclusive() {
    let r = probe("cosh_warp");
    assert!(!r.parallel);
    assert!(r.max_base_hessian > 0.1);
    assert!(!r.incomplete_evidence);
    assert!(r.verdict.starts_with("inconclusive"));
}

#[test]
fn probe_checks_dimension() {
    let entry = catalog::build("parallel_gradient_warp", None).unwrap();
    let plan = SamplingPlan::new(vec![[-1.0, 1.0]; 3]);
    assert!(completeness_probe(entry.warped.as_ref().unwrap(), &[0.0], &plan, 1e-9).is_err());
}

#[test]
fn energy_drift_up_to_t10() {
    for (a, sigma, dh0) in [
        (-1.0, 1.0, 1.0),
        (-1.0, 1.0, 0.0),
        (-1.0, 1.0, 2.0),
        (1.0, -1.0, 0.5),
        (-0.25, 1.0, 0.0),
    ] {
        let mut p = warp(a, 1.0, dh0, 10.0, 1e-3);
        p.sigma = sigma;
        let sol = solve_warp_ode(&p).unwrap();
        let bound = 1e-8 * (1.0 + sol.energy0.abs());
        assert!(
            sol.max_energy_drift <= bound,
            "a={a} dh0={dh0}: {} > {bound}",
            sol.max_energy_drift
        );
    }
}
