use serde::{Deserialize, Serialize};

use super::geodesic::{geodesic, GeodesicOptions, GeodesicStatus};
use crate::sampling::SamplingPlan;
use crate::warped::WarpedProduct;
use crate::{Error, Result};

pub const INCOMPLETE_VERDICT: &str = "consistent with incompleteness: warping function vanishes in finite parameter";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest deviation of h∘γ from the fitted line.
    pub max_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub parallel: bool,
    /// max ‖Hess_B h‖ over the samples.
    pub max_base_hessian: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<AffineFit>,
    /// Affine parameter where the fitted h∘γ vanishes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    /// Fiber scale h² at the last integrated point; the product metric
    /// degenerates as it goes to zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fiber_scale_at_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geodesic_status: Option<GeodesicStatus>,
    pub incomplete_evidence: bool,
    pub verdict: String,
}

/// Test whether ∇_B h is parallel and, if so, follow a base geodesic along
/// which h decreases until the affine function h∘γ reaches zero.
pub fn completeness_probe(
    wp: &WarpedProduct,
    p0: &[f64],
    plan: &SamplingPlan,
    tolerance: f64,
) -> Result<CompletenessReport> {
    let base = wp.base();
    let n = base.dim();
    if p0.len() != n {
        return Err(Error::InvalidInput(format!("p0 needs {n} base components")));
    }
    let mut base_plan = plan.clone();
    base_plan.bounds.truncate(n);
    let points = base_plan.points(base.domain())?;
    let h = wp.h();
    let mut max_hess = 0.0f64;
    for p in &points {
        max_hess = max_hess.max(base.hessian(h, p)?.max_abs());
    }
    let mut report = CompletenessReport {
        parallel: max_hess <= tolerance,
        max_base_hessian: max_hess,
        tolerance,
        p0: None,
        v0: None,
        fit: None,
        t0: None,
        fiber_scale_at_end: None,
        geodesic_status: None,
        incomplete_evidence: false,
        verdict: "inconclusive: gradient of the warping function is not parallel".into(),
    };
    if !report.parallel {
        return Ok(report);
    }

    let dh = h.partials(p0)?;
    let (k, dk) = dh.iter().copied().enumerate().fold(
        (0, 0.0f64),
        |best, (i, d)| if d.abs() > best.1.abs() { (i, d) } else { best },
    );
    if dk == 0.0 {
        report.verdict = "inconclusive: warping function is stationary at p0".into();
        return Ok(report);
    }
    let mut v0 = vec![0.0; n];
    v0[k] = -dk.signum();
    let h0 = h.value(p0)?;
    // Twice the linear estimate of the zero, so the fit sees both sides of
    // the crossing only if the chart allows it.
    let horizon = 2.0 * h0 / dk.abs();
    let path = geodesic(base, p0, &v0, horizon, &GeodesicOptions::default())?;

    let mut ts = Vec::new();
    let mut hs = Vec::new();
    for r in &path.trajectory {
        let value = match h.value(&r.position) {
            Ok(v) => v,
            Err(_) => break,
        };
        ts.push(r.s);
        hs.push(value);
        if value <= 0.0 {
            break;
        }
    }
    report.p0 = Some(p0.to_vec());
    report.v0 = Some(v0);
    report.geodesic_status = Some(path.status);
    report.fiber_scale_at_end = hs.last().map(|x| x * x);
    let fit = affine_fit(&ts, &hs);
    report.fit = fit;
    if let Some(fit) = fit {
        if fit.slope < 0.0 && fit.max_deviation <= tolerance * (1.0 + h0.abs()) {
            let t0 = -fit.intercept / fit.slope;
            report.t0 = Some(t0);
            let reached = ts.last().copied().unwrap_or(0.0);
            // The geodesic must get to t0, or stop at the boundary there.
            if reached >= t0 - 1e-6 || path.status.s_star().is_some_and(|s| (s - t0).abs() <= 1e-3) {
                report.incomplete_evidence = true;
                report.verdict = INCOMPLETE_VERDICT.into();
                return Ok(report);
            }
        }
    }
    report.verdict = "inconclusive: warping function does not reach zero along the probe geodesic".into();
    Ok(report)
}

fn affine_fit(ts: &[f64], hs: &[f64]) -> Option<AffineFit> {
    if ts.len() < 2 {
        return None;
    }
    let m = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / m;
    let hm = hs.iter().sum::<f64>() / m;
    let sxx: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(hs).map(|(t, h)| (t - tm) * (h - hm)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = hm - slope * tm;
    let max_deviation = ts
        .iter()
        .zip(hs)
        .map(|(t, h)| (h - (slope * t + intercept)).abs())
        .fold(0.0, f64::max);
    Some(AffineFit {
        slope,
        intercept,
        max_deviation,
    })
}
