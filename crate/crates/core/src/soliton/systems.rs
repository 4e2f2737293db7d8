use super::{PotentialSplit, StructureConstants};
use crate::expr::Expr;
use crate::geometry::{CausalCharacter, ScalarField, TangentVector};
use crate::parallel;
use crate::report::{evaluate_lines, CheckReport, Residual};
use crate::sampling::SamplingPlan;
use crate::warped::WarpedProduct;
use crate::{Error, Result};

/// Largest |∂_x∂_y (f/h)| tolerated before a potential is declared
/// non-separable.
pub const SEPARABILITY_TOLERANCE: f64 = 1e-7;
/// Largest |f − β − hφ| tolerated after splitting.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-8;

fn sample(wp: &WarpedProduct, plan: &SamplingPlan) -> Result<Vec<Vec<f64>>> {
    plan.check_dimension(wp.product_metric().dim())?;
    plan.points(wp.product_metric().domain())
}

/// Split a potential on the product chart as f = β + hφ, with the gauge
/// fixed by φ(q₀) = 0 and φ read off along the fiber through `p0`.
pub fn decompose_potential(
    wp: &WarpedProduct,
    f: &Expr,
    q0: &[f64],
    p0: &[f64],
    plan: &SamplingPlan,
) -> Result<PotentialSplit> {
    let n = wp.base_dim();
    let m = wp.fiber_dim();
    if q0.len() != m || p0.len() != n {
        return Err(Error::InvalidInput(format!(
            "anchor points need {m} fiber and {n} base coordinates"
        )));
    }
    let ratio = ScalarField::new(f.clone() / wp.h().expr().clone(), n + m);
    let points = sample(wp, plan)?;
    let mixed = parallel::map(&points, plan.execution, |p| -> Result<f64> {
        let d2 = ratio.second_partials(p)?;
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for y in n..n + m {
                worst = worst.max(d2.get(x, y).abs());
            }
        }
        Ok(worst)
    });
    for (r, p) in mixed.into_iter().zip(&points) {
        let r = r?;
        if !(r <= SEPARABILITY_TOLERANCE) {
            return Err(Error::NonDecomposable {
                residual: r,
                point: p.clone(),
            });
        }
    }

    let mut along_fiber = f.clone();
    for (i, &x) in p0.iter().enumerate() {
        along_fiber = along_fiber.substitute(i, x);
    }
    let mut at_anchor = along_fiber.clone();
    for (k, &y) in q0.iter().enumerate() {
        at_anchor = at_anchor.substitute(n + k, y);
    }
    let h0 = wp.h().value(p0)?;
    let phi = ((along_fiber - at_anchor) / Expr::Const(h0)).remap(&|v| v - n);
    let mut beta = f.clone();
    for (k, &y) in q0.iter().enumerate() {
        beta = beta.substitute(n + k, y);
    }
    let split = PotentialSplit {
        beta,
        phi,
        anchor: q0.to_vec(),
    };

    let recon = reconstruction(wp, &split);
    let errors = parallel::map(&points, plan.execution, |p| -> Result<f64> {
        Ok((f.eval(p)? - recon.eval(p)?).abs())
    });
    for (e, p) in errors.into_iter().zip(&points) {
        let e = e?;
        if !(e <= RECONSTRUCTION_TOLERANCE * (1.0 + f.eval(p)?.abs())) {
            return Err(Error::NonDecomposable {
                residual: e,
                point: p.clone(),
            });
        }
    }
    Ok(split)
}

/// β + hφ as an expression on the product chart.
pub fn reconstruction(wp: &WarpedProduct, split: &PotentialSplit) -> Expr {
    let n = wp.base_dim();
    split.beta.clone() + wp.h().expr().clone() * split.phi.remap(&|v| v + n)
}

/// b = −tr_F(∇∇φ + cφ g_F)/m at a fiber point.
fn derive_b(wp: &WarpedProduct, phi: &ScalarField, c: f64, q: &[f64]) -> Result<f64> {
    let frame = wp.fiber().frame(q)?;
    let m = wp.fiber_dim() as f64;
    Ok(-(frame.laplacian(phi)? + m * c * phi.value(q)?) / m)
}

/// The fiber-dependent structure system, λ formula and energy relation.
/// The constant b is re-derived from the split so the verdict does not
/// depend on the gauge of (β, φ).
pub fn check_fiber_dependent(
    wp: &WarpedProduct,
    split: &PotentialSplit,
    k: &StructureConstants,
    lambda: &Expr,
    plan: &SamplingPlan,
    tolerance: f64,
) -> Result<CheckReport> {
    if wp.is_trivial() {
        return Err(Error::TrivialWarp);
    }
    let n = wp.base_dim();
    let m = wp.fiber_dim();
    let beta = ScalarField::new(split.beta.clone(), n);
    let phi = ScalarField::new(split.phi.clone(), m);
    let lambda = ScalarField::new(lambda.clone(), n + m);
    let points = sample(wp, plan)?;
    let q = &points
        .first()
        .ok_or_else(|| Error::Sampling("no sample points".into()))?[n..];
    let b = derive_b(wp, &phi, k.c, q)?;
    let (a, c) = (k.a, k.c);
    let (nf, mf) = (n as f64, m as f64);
    let labels = [
        "system 1: Hess_B h + a h g_B = 0",
        "system 2: Ric_B + Hess_B beta = (h^-1 (grad h)beta - b/h + (n-1)a) g_B",
        "system 3: Hess_F phi + (c phi + b) g_F = 0",
        "system 4: Ric_F = (m-1) c g_F",
        "lambda: lambda = h^-1 (grad h)beta - b/h + (m+n-1)a - a h phi",
        "relation: |grad h|^2 + a h^2 = c",
    ];
    let mut report = evaluate_lines("fiber_dependent", &labels, &points, plan, tolerance, |p| {
        let w = wp.frame(p)?;
        let (pb, pf) = wp.split(p);
        let h = w.h;
        let g_b = w.base.g();
        let g_f = w.fiber.g();
        let phi_v = phi.value(pf)?;
        let dh_beta = w.grad_h_dot(&beta.partials(pb)?);
        let s1 = w.hess_h.add(&g_b.scale(a * h));
        let lhs2 = w.base.ricci()?.add(&w.base.hessian(&beta)?);
        let rhs2 = g_b.scale(dh_beta / h - b / h + (nf - 1.0) * a);
        let hess_phi = w.fiber.hessian(&phi)?;
        let rhs3 = g_f.scale(-(c * phi_v + b));
        let rhs4 = g_f.scale((mf - 1.0) * c);
        let lambda_formula = dh_beta / h - b / h + (mf + nf - 1.0) * a - a * h * phi_v;
        Ok(vec![
            Residual::tensor(&s1, &s1.scale(0.0)),
            Residual::tensor(&lhs2, &rhs2),
            Residual::tensor(&hess_phi, &rhs3),
            Residual::tensor(&w.fiber.ricci()?, &rhs4),
            Residual::scalar(lambda.value(p)?, lambda_formula),
            Residual::scalar(w.grad_h_sq + a * h * h, c),
        ])
    })?;
    // (c − |∇h|²)/h² must be the constant a on a passing instance.
    let energies = parallel::map(&points, plan.execution, |p| -> Result<f64> {
        let w = wp.frame(p)?;
        Ok((c - w.grad_h_sq) / (w.h * w.h))
    });
    let energies = energies.into_iter().collect::<Result<Vec<_>>>()?;
    let lo = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    report = report
        .with_derived("a", a)
        .with_derived("b", b)
        .with_derived("c", c)
        .with_derived("energy_spread", hi - lo);
    if let Some(given) = k.b {
        if (given - b).abs() > tolerance * (1.0 + b.abs()) {
            report = report.with_note(format!(
                "supplied b = {given} differs from b = {b} derived from the split"
            ));
        }
    }
    Ok(report)
}

/// The base-only structure system. `f` and `lambda` are expressions on the
/// product chart that must not involve fiber coordinates.
pub fn check_base_only(
    wp: &WarpedProduct,
    f: &Expr,
    lambda: &Expr,
    c: f64,
    plan: &SamplingPlan,
    tolerance: f64,
) -> Result<CheckReport> {
    let n = wp.base_dim();
    for (what, e) in [("potential", f), ("soliton function", lambda)] {
        if e.variables().iter().any(|&v| v >= n) {
            return Err(Error::FiberDependence { what: what.into() });
        }
    }
    let f = ScalarField::new(f.clone(), n);
    let lambda = ScalarField::new(lambda.clone(), n);
    let mf = wp.fiber_dim() as f64;
    let points = sample(wp, plan)?;
    let labels = [
        "system 1: Ric_B + Hess_B f - m/h Hess_B h = lambda g_B",
        "system 2: lambda h^2 = h (grad h)f - (m-1)|grad h|^2 - h Lap h + c(m-1)",
        "system 3: Ric_F = c(m-1) g_F",
    ];
    evaluate_lines("base_only", &labels, &points, plan, tolerance, |p| {
        let w = wp.frame(p)?;
        let (pb, _) = wp.split(p);
        let h = w.h;
        let lam = lambda.value(pb)?;
        let lhs1 = w.base.ricci()?.add(&w.base.hessian(&f)?).sub(&w.hess_h.scale(mf / h));
        let dh_f = w.grad_h_dot(&f.partials(pb)?);
        let rhs2 = h * dh_f - (mf - 1.0) * w.grad_h_sq - h * w.laplacian_h + c * (mf - 1.0);
        Ok(vec![
            Residual::tensor(&lhs1, &w.base.g().scale(lam)),
            Residual::scalar(lam * h * h, rhs2),
            Residual::tensor(&w.fiber.ricci()?, &w.fiber.g().scale(c * (mf - 1.0))),
        ])
    })
    .map(|r| r.with_derived("c", c))
}

/// The improper case: ∇h lightlike and parallel on a base of dimension at
/// least two, Ricci-flat fiber, and the reduced soliton system.
pub fn check_improper(
    wp: &WarpedProduct,
    split: &PotentialSplit,
    b: f64,
    lambda: &Expr,
    plan: &SamplingPlan,
    tolerance: f64,
) -> Result<CheckReport> {
    let n = wp.base_dim();
    let m = wp.fiber_dim();
    if n < 2 {
        return Err(Error::InvalidInput(
            "the improper case needs a base of dimension at least 2".into(),
        ));
    }
    if wp.is_trivial() {
        return Err(Error::TrivialWarp);
    }
    let points = sample(wp, plan)?;
    for p in &points {
        let w = wp.frame(p)?;
        let grad = TangentVector::new(w.base.raise(&w.dh).components);
        if grad.causal_character(w.base.g()) != CausalCharacter::Lightlike {
            return Err(Error::NotImproper {
                norm_sq: w.grad_h_sq,
                point: p.clone(),
            });
        }
    }
    let beta = ScalarField::new(split.beta.clone(), n);
    let phi = ScalarField::new(split.phi.clone(), m);
    let lambda = ScalarField::new(lambda.clone(), n + m);
    let labels = [
        "lightlike: |grad h|^2 = 0",
        "parallel: Hess_B h = 0",
        "fiber: Ric_F = 0",
        "fiber: Hess_F phi + b g_F = 0",
        "lambda: lambda = ((grad h)beta - b)/h",
        "base: Ric_B + Hess_B beta = lambda g_B",
    ];
    evaluate_lines("improper", &labels, &points, plan, tolerance, |p| {
        let w = wp.frame(p)?;
        let (pb, _) = wp.split(p);
        let lam = lambda.value(p)?;
        let dh_beta = w.grad_h_dot(&beta.partials(pb)?);
        let zero_b = w.hess_h.scale(0.0);
        let ric_f = w.fiber.ricci()?;
        let lhs_base = w.base.ricci()?.add(&w.base.hessian(&beta)?);
        Ok(vec![
            Residual::zero(w.grad_h_sq),
            Residual::tensor(&w.hess_h, &zero_b),
            Residual::tensor(&ric_f, &ric_f.scale(0.0)),
            Residual::tensor(&w.fiber.hessian(&phi)?, &w.fiber.g().scale(-b)),
            Residual::scalar(lam, (dh_beta - b) / w.h),
            Residual::tensor(&lhs_base, &w.base.g().scale(lam)),
        ])
    })
    .map(|r| r.with_derived("b", b))
}
