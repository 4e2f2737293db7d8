//! Dispatch of catalog checks to the engines, with a uniform outcome type.

use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogEntry, CheckKind, GeodesicSeed, HeightFunctionSpec, HeightZeroResult};
use crate::dynamics::{
    completeness_probe, geodesic, solve_warp_ode, CompletenessReport, GeodesicOptions, GeodesicState, GeodesicStatus,
    WarpFamily, WarpODEProblem,
};
use crate::geometry::ScalarField;
use crate::report::{CheckReport, DEFAULT_TOLERANCE};
use crate::sampling::SamplingPlan;
use crate::soliton::{
    check_base_only, check_bochner, check_einstein, check_fiber_dependent, check_improper, check_sc, check_soliton,
    decompose_potential, recover_conformal_constants, PotentialSplit, SolitonData, SolitonMetric,
};
use crate::warped::WarpedProduct;
use crate::{Error, Result};

/// Tolerance used when a job does not set one.
pub fn default_tolerance(kind: CheckKind) -> f64 {
    match kind {
        CheckKind::CrossCheck => 1e-7,
        CheckKind::Sc => 1e-8,
        // Bound on ‖Hess_B h‖ for the parallel test.
        CheckKind::Completeness => 1e-9,
        _ => DEFAULT_TOLERANCE,
    }
}

/// Geodesic speed drift bound, relative.
pub const NORM_DRIFT_BOUND: f64 = 1e-6;
/// Allowed distance between the detected and expected blow-up parameter.
pub const BLOW_UP_WINDOW: f64 = 0.01;
/// Closed-form agreement required of the warp ODE.
pub const WARP_RELATIVE_BOUND: f64 = 1e-6;
pub const WARP_DRIFT_BOUND: f64 = 1e-8;
/// Window around an expected zero of h.
pub const ZERO_CROSSING_WINDOW: f64 = 0.01;
/// Agreement of a recovered a₀ with the expected value.
pub const A0_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicEvidence {
    pub status: GeodesicStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_blow_up: Option<f64>,
    pub end: GeodesicState,
    pub norm_sq0: f64,
    pub relative_norm_drift: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpOdeEvidence {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<WarpFamily>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_energy_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_relative_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_crossing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_zero: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Evidence {
    Residuals(CheckReport),
    Geodesic(GeodesicEvidence),
    Completeness(CompletenessReport),
    WarpOde(WarpOdeEvidence),
    HeightZero(HeightZeroResult),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub check: String,
    pub pass: bool,
    pub evidence: Evidence,
}

impl Outcome {
    fn residuals(check: CheckKind, report: CheckReport) -> Self {
        Outcome {
            check: check.name().into(),
            pass: report.pass,
            evidence: Evidence::Residuals(report),
        }
    }

    /// The residual report, for residual-type checks.
    pub fn report(&self) -> Option<&CheckReport> {
        match &self.evidence {
            Evidence::Residuals(r) => Some(r),
            _ => None,
        }
    }
}

fn missing(entry: &CatalogEntry, what: &str) -> Error {
    Error::InvalidInput(format!("`{}` has no {what}", entry.name))
}

fn warped(entry: &CatalogEntry) -> Result<&WarpedProduct> {
    entry
        .warped
        .as_ref()
        .ok_or_else(|| missing(entry, "warped-product structure"))
}

/// Errors if `entry` lacks the data `kind` needs.
pub fn applicable(entry: &CatalogEntry, kind: CheckKind) -> Result<()> {
    let need = |ok: bool, what: &str| if ok { Ok(()) } else { Err(missing(entry, what)) };
    match kind {
        CheckKind::Soliton => need(entry.soliton.is_some(), "potential and soliton function"),
        CheckKind::FiberDependent => {
            warped(entry)?;
            need(entry.soliton.is_some(), "potential and soliton function")?;
            need(entry.constants.is_some(), "structure constants")?;
            need(
                entry.split.is_some() || entry.anchors.is_some(),
                "split or anchor points",
            )
        }
        CheckKind::BaseOnly => {
            warped(entry)?;
            need(entry.soliton.is_some(), "potential and soliton function")?;
            need(entry.constants.is_some(), "structure constants")
        }
        CheckKind::Improper => {
            warped(entry)?;
            need(entry.soliton.is_some(), "potential and soliton function")?;
            need(entry.constants.and_then(|k| k.b).is_some(), "constant b")
        }
        CheckKind::Sc => need(entry.conformal.is_some(), "conformal field"),
        CheckKind::Einstein => match &entry.warped {
            Some(_) => need(entry.constants.is_some(), "structure constants"),
            None => need(entry.einstein.is_some(), "Einstein constant"),
        },
        CheckKind::ConformalConstants => {
            need(entry.einstein.is_some(), "Einstein constant")?;
            need(entry.conformal.is_some() || entry.soliton.is_some(), "conformal field")
        }
        CheckKind::Bochner => need(entry.bochner_scalar().is_some(), "scalar field"),
        CheckKind::CrossCheck => warped(entry).map(|_| ()),
        CheckKind::Geodesic => need(entry.geodesic.is_some(), "geodesic seed"),
        CheckKind::Completeness => {
            warped(entry)?;
            need(entry.completeness.is_some(), "completeness seed")
        }
    }
}

fn split_of(entry: &CatalogEntry, wp: &WarpedProduct, plan: &SamplingPlan) -> Result<PotentialSplit> {
    if let Some(s) = &entry.split {
        return Ok(s.clone());
    }
    let f = &entry.soliton.as_ref().ok_or_else(|| missing(entry, "potential"))?.f;
    let (fiber, base) = match &entry.anchors {
        Some(a) => (a.fiber.clone(), a.base.clone()),
        None => (vec![0.0; wp.fiber_dim()], vec![0.0; wp.base_dim()]),
    };
    decompose_potential(wp, f, &fiber, &base, plan)
}

/// Run one check of `entry`. Numerical failures come back as an outcome
/// with `pass = false`; errors mean the check could not be evaluated.
pub fn run_check(entry: &CatalogEntry, kind: CheckKind, plan: &SamplingPlan, tolerance: f64) -> Result<Outcome> {
    applicable(entry, kind)?;
    let dim = entry.metric.dim();
    let field = |e: &crate::expr::Expr| ScalarField::new(e.clone(), dim);
    let report = match kind {
        CheckKind::Soliton => {
            let s = entry.soliton.as_ref().expect("checked");
            let metric = match &entry.warped {
                Some(wp) => SolitonMetric::Warped(wp.clone()),
                None => SolitonMetric::Chart(entry.metric.clone()),
            };
            let data = SolitonData {
                metric,
                f: field(&s.f),
                lambda: field(&s.lambda),
            };
            check_soliton(&data, plan, tolerance)?
        }
        CheckKind::FiberDependent => {
            let wp = warped(entry)?;
            let s = entry.soliton.as_ref().expect("checked");
            let split = split_of(entry, wp, plan)?;
            check_fiber_dependent(
                wp,
                &split,
                &entry.constants.expect("checked"),
                &s.lambda,
                plan,
                tolerance,
            )?
        }
        CheckKind::BaseOnly => {
            let wp = warped(entry)?;
            let s = entry.soliton.as_ref().expect("checked");
            check_base_only(
                wp,
                &s.f,
                &s.lambda,
                entry.constants.expect("checked").c,
                plan,
                tolerance,
            )?
        }
        CheckKind::Improper => {
            let wp = warped(entry)?;
            let s = entry.soliton.as_ref().expect("checked");
            let split = split_of(entry, wp, plan)?;
            let b = entry.constants.and_then(|k| k.b).expect("checked");
            check_improper(wp, &split, b, &s.lambda, plan, tolerance)?
        }
        CheckKind::Sc => {
            let c = entry.conformal.as_ref().expect("checked");
            check_sc(&entry.metric, &field(&c.phi), c.spec, plan, tolerance)?
        }
        CheckKind::Einstein => match &entry.warped {
            Some(wp) => {
                let k = entry.constants.expect("checked");
                wp.einstein_check(k.a, k.c, plan, tolerance)?
            }
            None => check_einstein(&entry.metric, entry.einstein.expect("checked"), plan, tolerance)?,
        },
        CheckKind::ConformalConstants => return conformal_constants(entry, plan, tolerance),
        CheckKind::Bochner => {
            let phi = entry.bochner_scalar().expect("checked");
            check_bochner(&entry.metric, &field(phi), plan, tolerance)?
        }
        CheckKind::CrossCheck => {
            let wp = warped(entry)?;
            let f = entry
                .soliton
                .as_ref()
                .map(|s| &s.f)
                .or(entry.bochner_field.as_ref())
                .map(|e| field(e));
            wp.cross_validate(f.as_ref(), plan, tolerance)?
        }
        CheckKind::Geodesic => {
            let seed = entry.geodesic.as_ref().expect("checked");
            return geodesic_outcome(entry, seed);
        }
        CheckKind::Completeness => {
            let wp = warped(entry)?;
            let seed = entry.completeness.as_ref().expect("checked");
            let probe = completeness_probe(wp, &seed.p0, plan, tolerance)?;
            return Ok(Outcome {
                check: kind.name().into(),
                pass: probe.incomplete_evidence == seed.expect_incomplete,
                evidence: Evidence::Completeness(probe),
            });
        }
    };
    Ok(Outcome::residuals(kind, report))
}

fn conformal_constants(entry: &CatalogEntry, plan: &SamplingPlan, tolerance: f64) -> Result<Outcome> {
    let a = entry.einstein.expect("checked");
    let (phi, expected) = match &entry.conformal {
        Some(c) => {
            let from_spec = (c.spec.c == a).then_some(c.spec.b);
            (&c.phi, entry.constants.and_then(|k| k.a0).or(from_spec))
        }
        None => (
            &entry.soliton.as_ref().expect("checked").f,
            entry.constants.and_then(|k| k.a0),
        ),
    };
    let f = ScalarField::new(phi.clone(), entry.metric.dim());
    let fit = recover_conformal_constants(&entry.metric, &f, a, plan, tolerance)?;
    let mut report = fit.report.with_derived("a0", fit.a0);
    if let Some(e) = expected {
        let ok = (fit.a0 - e).abs() <= A0_TOLERANCE;
        report = report.with_derived("expected_a0", e);
        if !ok {
            report.pass = false;
            report = report.with_note(format!("recovered a0 = {} differs from {e}", fit.a0));
        }
    }
    Ok(Outcome::residuals(CheckKind::ConformalConstants, report))
}

/// Integrate the seed geodesic. With an expected blow-up the status must be
/// BlowUp near it; otherwise the geodesic must complete with conserved speed.
pub fn geodesic_outcome(entry: &CatalogEntry, seed: &GeodesicSeed) -> Result<Outcome> {
    let r = geodesic(
        &entry.metric,
        &seed.p0,
        &seed.v0,
        seed.horizon,
        &GeodesicOptions::default(),
    )?;
    let pass = match (seed.blow_up_at, r.status) {
        (Some(s), GeodesicStatus::BlowUp { s_star, .. }) => (s_star - s).abs() <= BLOW_UP_WINDOW,
        (Some(_), _) => false,
        (None, GeodesicStatus::Completed) => r.relative_norm_drift <= NORM_DRIFT_BOUND,
        (None, _) => false,
    };
    Ok(Outcome {
        check: CheckKind::Geodesic.name().into(),
        pass,
        evidence: Evidence::Geodesic(GeodesicEvidence {
            status: r.status,
            expected_blow_up: seed.blow_up_at,
            end: r.end,
            norm_sq0: r.norm_sq0,
            relative_norm_drift: r.relative_norm_drift,
            accepted_steps: r.accepted_steps,
            rejected_steps: r.rejected_steps,
        }),
    })
}

/// Solve the warp ODE. Passes when the solution matches its closed form
/// with bounded energy drift, or, if `expect_zero` is set, when h reaches
/// zero within the window around it.
pub fn warp_ode_outcome(problem: &WarpODEProblem, expect_zero: Option<f64>) -> Result<Outcome> {
    let mut ev = WarpOdeEvidence {
        family: None,
        energy0: None,
        max_energy_drift: None,
        max_relative_error: None,
        final_h: None,
        zero_crossing: None,
        expected_zero: expect_zero,
    };
    let pass = match solve_warp_ode(problem) {
        Ok(sol) => {
            ev.family = Some(sol.family);
            ev.energy0 = Some(sol.energy0);
            ev.max_energy_drift = Some(sol.max_energy_drift);
            ev.max_relative_error = Some(sol.max_relative_error);
            ev.final_h = sol.samples.last().map(|s| s.h);
            expect_zero.is_none()
                && sol.max_relative_error <= WARP_RELATIVE_BOUND
                && sol.max_energy_drift <= WARP_DRIFT_BOUND * (1.0 + sol.energy0.abs())
        }
        Err(Error::ZeroCrossing { t }) => {
            ev.zero_crossing = Some(t);
            expect_zero.is_some_and(|z| (t - z).abs() <= ZERO_CROSSING_WINDOW)
        }
        Err(e) => return Err(e),
    };
    Ok(Outcome {
        check: "warp_ode".into(),
        pass,
        evidence: Evidence::WarpOde(ev),
    })
}

pub fn height_outcome(spec: &HeightFunctionSpec) -> Result<Outcome> {
    let r = crate::catalog::height_zero_classification(spec)?;
    Ok(Outcome {
        check: "height_zero".into(),
        pass: r.consistent,
        evidence: Evidence::HeightZero(r),
    })
}

/// Every check listed on the entry, with the entry's own sampling plan.
pub fn verify_entry(entry: &CatalogEntry) -> Vec<(CheckKind, Result<Outcome>)> {
    entry
        .checks
        .iter()
        .map(|&k| (k, run_check(entry, k, &entry.sampling, default_tolerance(k))))
        .collect()
}
