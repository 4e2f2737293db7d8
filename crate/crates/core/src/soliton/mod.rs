//! Pointwise checks of the almost-soliton equation Ric + ∇∇f = λg and of
//! the structure equations that characterize it on warped products.

mod systems;

pub use systems::{
    check_base_only, check_fiber_dependent, check_improper, decompose_potential, reconstruction,
    RECONSTRUCTION_TOLERANCE, SEPARABILITY_TOLERANCE,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::geometry::{MetricField, ScalarField, SymTensor2};
use crate::report::{evaluate_lines, CheckReport, Residual};
use crate::sampling::SamplingPlan;
use crate::warped::WarpedProduct;
use crate::{Error, Result};

/// The metric side of a soliton: a plain chart or a warped product, whose
/// block formulas are then used for curvature and Hessians.
#[derive(Clone, Debug)]
pub enum SolitonMetric {
    Chart(MetricField),
    Warped(WarpedProduct),
}

impl SolitonMetric {
    pub fn chart(&self) -> &MetricField {
        match self {
            SolitonMetric::Chart(g) => g,
            SolitonMetric::Warped(wp) => wp.product_metric(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolitonData {
    pub metric: SolitonMetric,
    pub f: ScalarField,
    pub lambda: ScalarField,
}

impl SolitonData {
    pub fn parse(metric: SolitonMetric, f: &str, lambda: &str) -> Result<Self> {
        let chart = metric.chart();
        let f = chart.parse_field(f)?;
        let lambda = chart.parse_field(lambda)?;
        Ok(SolitonData { metric, f, lambda })
    }
}

/// f = β + hφ with β on the base and φ on the fiber, gauge-fixed by φ(q₀) = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSplit {
    /// Expression in base coordinates.
    pub beta: crate::expr::Expr,
    /// Expression in fiber coordinates.
    pub phi: crate::expr::Expr,
    pub anchor: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConstants {
    #[serde(default)]
    pub a: f64,
    /// Optional; checkers re-derive b from the split and report both.
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub a0: Option<f64>,
}

/// Constants of ∇∇φ + (cφ + b)g = 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformalSpec {
    pub c: f64,
    pub b: f64,
}

// (Ric + ∇∇f, g) at `p`.
fn soliton_sides(s: &SolitonData, p: &[f64]) -> Result<(SymTensor2, SymTensor2)> {
    match &s.metric {
        SolitonMetric::Chart(g) => {
            let frame = g.frame(p)?;
            Ok((frame.ricci()?.add(&frame.hessian(&s.f)?), frame.at.components))
        }
        SolitonMetric::Warped(wp) => {
            let w = wp.frame(p)?;
            let g = wp.product_metric().metric_at(p)?.components;
            Ok((w.ricci()?.add(&w.hessian(&s.f)?), g))
        }
    }
}

/// Ric + ∇∇f − λg at `p`.
pub fn soliton_residual(s: &SolitonData, p: &[f64]) -> Result<SymTensor2> {
    let (lhs, g) = soliton_sides(s, p)?;
    Ok(lhs.sub(&g.scale(s.lambda.value(p)?)))
}

pub fn check_soliton(s: &SolitonData, plan: &SamplingPlan, tolerance: f64) -> Result<CheckReport> {
    let chart = s.metric.chart();
    plan.check_dimension(chart.dim())?;
    let points = plan.points(chart.domain())?;
    evaluate_lines(
        "soliton",
        &["soliton: Ric + Hess f = lambda g"],
        &points,
        plan,
        tolerance,
        |p| {
            let (lhs, g) = soliton_sides(s, p)?;
            Ok(vec![Residual::tensor(&lhs, &g.scale(s.lambda.value(p)?))])
        },
    )
}

/// ∇∇φ + (cφ + b)g at `p`.
pub fn sc_residual(g: &MetricField, phi: &ScalarField, spec: ConformalSpec, p: &[f64]) -> Result<SymTensor2> {
    let frame = g.frame(p)?;
    let factor = spec.c * phi.value(p)? + spec.b;
    Ok(frame.hessian(phi)?.add(&frame.g().scale(factor)))
}

pub fn check_sc(
    g: &MetricField,
    phi: &ScalarField,
    spec: ConformalSpec,
    plan: &SamplingPlan,
    tolerance: f64,
) -> Result<CheckReport> {
    plan.check_dimension(g.dim())?;
    let points = plan.points(g.domain())?;
    evaluate_lines(
        "sc",
        &["sc: Hess phi + (c phi + b) g = 0"],
        &points,
        plan,
        tolerance,
        |p| {
            let frame = g.frame(p)?;
            let hess = frame.hessian(phi)?;
            let rhs = frame.g().scale(-(spec.c * phi.value(p)? + spec.b));
            Ok(vec![Residual::tensor(&hess, &rhs)])
        },
    )
    .map(|r| r.with_derived("c", spec.c).with_derived("b", spec.b))
}

/// Bochner identity div(∇∇φ)(X) = Ric(∇φ, X) + X(Δφ) for each coordinate
/// direction X = ∂_k.
pub fn check_bochner(g: &MetricField, phi: &ScalarField, plan: &SamplingPlan, tolerance: f64) -> Result<CheckReport> {
    plan.check_dimension(g.dim())?;
    let points = plan.points(g.domain())?;
    let labels: Vec<String> = g.coords().iter().map(|c| format!("bochner: X = d/d{c}")).collect();
    let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
    evaluate_lines("bochner", &labels, &points, plan, tolerance, |p| {
        let frame = g.frame(p)?;
        (0..g.dim())
            .map(|k| {
                let mut x = vec![0.0; g.dim()];
                x[k] = 1.0;
                let t = frame.bochner(phi, &crate::geometry::TangentVector::new(x))?;
                Ok(Residual::scalar(t.divergence, t.ricci_term + t.laplacian_derivative))
            })
            .collect()
    })
}

fn einstein_lines(
    g: &MetricField,
    a: f64,
    points: &[Vec<f64>],
    plan: &SamplingPlan,
    tolerance: f64,
) -> Result<CheckReport> {
    let dim = g.dim() as f64;
    evaluate_lines(
        "einstein",
        &["einstein: Ric = a(n-1) g"],
        points,
        plan,
        tolerance,
        |p| {
            let frame = g.frame(p)?;
            Ok(vec![Residual::tensor(
                &frame.ricci()?,
                &frame.g().scale(a * (dim - 1.0)),
            )])
        },
    )
    .map(|r| r.with_derived("a", a))
}

/// Ric = a(dim−1)g on a chart.
pub fn check_einstein(g: &MetricField, a: f64, plan: &SamplingPlan, tolerance: f64) -> Result<CheckReport> {
    plan.check_dimension(g.dim())?;
    let points = plan.points(g.domain())?;
    einstein_lines(g, a, &points, plan, tolerance)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConformalFit {
    pub a0: f64,
    /// max |ψ − a f − a₀| over samples.
    pub deviation: f64,
    pub report: CheckReport,
}

/// Spread of the eigenvalues of g⁻¹H around a common real value; zero
/// exactly when H is a multiple of g.
fn proportionality_spread(g_inv: &DMatrix<f64>, hess: &SymTensor2) -> (f64, f64) {
    let m = g_inv * hess.to_matrix();
    let eig = m.complex_eigenvalues();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut im: f64 = 0.0;
    let mut size: f64 = 0.0;
    for z in eig.iter() {
        lo = lo.min(z.re);
        hi = hi.max(z.re);
        im = im.max(z.im.abs());
        size = size.max(z.norm());
    }
    (hi - lo + 2.0 * im, size)
}

/// Verifies Ric = a(dim−1)g, checks that ∇∇f = −ψg pointwise and fits
/// ψ = a f + a₀, i.e. ∇∇f + (af + a₀)g = 0.
pub fn recover_conformal_constants(
    g: &MetricField,
    f: &ScalarField,
    a: f64,
    plan: &SamplingPlan,
    tolerance: f64,
) -> Result<ConformalFit> {
    plan.check_dimension(g.dim())?;
    let points = plan.points(g.domain())?;
    let dim = g.dim() as f64;
    let einstein = einstein_lines(g, a, &points, plan, tolerance)?;
    if !einstein.pass {
        return Err(Error::NotEinstein {
            residual: einstein.max_residual,
            point: einstein.argmax_point,
        });
    }
    let samples = crate::parallel::map(&points, plan.execution, |p| -> Result<_> {
        let frame = g.frame(p)?;
        let hess = frame.hessian(f)?;
        let (spread, size) = proportionality_spread(frame.inverse(), &hess);
        let psi = -frame.trace(&hess) / dim;
        Ok((spread, size, psi, f.value(p)?))
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    for ((spread, size, _, _), p) in samples.iter().zip(&points) {
        if spread / (1.0 + size) > tolerance {
            return Err(Error::NotConformal {
                spread: *spread,
                point: p.clone(),
            });
        }
    }
    let offsets: Vec<f64> = samples.iter().map(|(_, _, psi, fv)| psi - a * fv).collect();
    let a0 = offsets.iter().sum::<f64>() / offsets.len() as f64;
    let fit = evaluate_lines(
        "conformal_constants",
        &["conformal: Hess f + (a f + a0) g = 0"],
        &points,
        plan,
        tolerance,
        |p| {
            let frame = g.frame(p)?;
            let hess = frame.hessian(f)?;
            let rhs = frame.g().scale(-(a * f.value(p)? + a0));
            Ok(vec![Residual::tensor(&hess, &rhs)])
        },
    )?;
    let deviation = offsets.iter().map(|o| (o - a0).abs()).fold(0.0, f64::max);
    let report = einstein
        .absorb(fit)
        .with_derived("a", a)
        .with_derived("a0", a0)
        .with_derived("deviation", deviation);
    let report = CheckReport {
        check: "conformal_constants".into(),
        ..report
    };
    Ok(ConformalFit { a0, deviation, report })
}

#[cfg(test)]
mod tests;
