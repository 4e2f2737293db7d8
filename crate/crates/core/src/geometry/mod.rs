//! Single-chart semi-Riemannian metrics and the operators built on them.
//!
//! Metric components are expressions in the chart coordinates; all of their
//! derivatives are taken symbolically. Curvature at a point is assembled from
//! exact first and second partials of `g`, so the results carry no
//! finite-difference noise unless a depth limit is configured, in which case
//! derivatives of the Christoffel symbols fall back to central differences.

mod field;
mod spec;
mod tensor;

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

pub use field::ScalarField;
pub use spec::MetricSpec;
pub(crate) use tensor::{packed, packed_len};
pub use tensor::{CausalCharacter, Christoffel, Riemann, Signature, SymTensor2, TangentVector, LIGHTLIKE_TOLERANCE};

use crate::expr::{Domain, Expr};
use crate::parallel;
use crate::sampling::SamplingPlan;
use crate::{Error, Result};

/// Threshold on |det g| after each row is scaled to unit max-norm.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

const FD_STEP: f64 = 1e-4;

#[derive(Debug)]
pub struct MetricField {
    coords: Vec<String>,
    components: Vec<Expr>,
    domain: Domain,
    label: String,
    first: Vec<Vec<Expr>>,
    second: OnceLock<Vec<Vec<Expr>>>,
    depth_limit: Option<usize>,
}

impl Clone for MetricField {
    fn clone(&self) -> Self {
        MetricField {
            coords: self.coords.clone(),
            components: self.components.clone(),
            domain: self.domain.clone(),
            label: self.label.clone(),
            first: self.first.clone(),
            second: self.second.clone(),
            depth_limit: self.depth_limit,
        }
    }
}

impl PartialEq for MetricField {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && self.components == other.components && self.domain == other.domain
    }
}

/// Metric data at a single point.
#[derive(Clone, Debug)]
pub struct MetricAt {
    pub components: SymTensor2,
    pub inverse: DMatrix<f64>,
    pub signature: Signature,
    /// Determinant after row scaling.
    pub scaled_det: f64,
}

impl MetricField {
    /// `components` holds the upper triangle row by row: g_00, g_01, …, g_11, ….
    pub fn new(coords: Vec<String>, components: Vec<Expr>, domain: Domain, label: impl Into<String>) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::InvalidInput("metric needs at least one coordinate".into()));
        }
        if components.len() != packed_len(n) {
            return Err(Error::InvalidInput(format!(
                "expected {} metric components for dimension {n}, got {}",
                packed_len(n),
                components.len()
            )));
        }
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(Error::InvalidInput(format!("duplicate coordinate `{c}`")));
            }
        }
        if let Some(v) = components.iter().flat_map(|c| c.variables()).find(|&v| v >= n) {
            return Err(Error::InvalidInput(format!(
                "component refers to coordinate index {v} outside dimension {n}"
            )));
        }
        let first = (0..n)
            .map(|k| components.iter().map(|c| c.derivative(k)).collect())
            .collect();
        Ok(MetricField {
            coords,
            components,
            domain,
            label: label.into(),
            first,
            second: OnceLock::new(),
            depth_limit: None,
        })
    }

    /// Diagonal metric from component strings.
    pub fn diagonal(coords: &[&str], diag: &[&str], domain: &str, label: &str) -> Result<Self> {
        let entries: Vec<(usize, usize, &str)> = diag.iter().enumerate().map(|(i, s)| (i, i, *s)).collect();
        MetricField::parse(coords, &entries, domain, label)
    }

    /// Metric from `(i, j, expression)` entries; unspecified components are zero.
    pub fn parse(coords: &[&str], entries: &[(usize, usize, &str)], domain: &str, label: &str) -> Result<Self> {
        let n = coords.len();
        let mut comps = vec![Expr::ZERO; packed_len(n)];
        for &(i, j, src) in entries {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!("component ({i},{j}) out of range")));
            }
            comps[packed(n, i, j)] = crate::expr::parse(src, coords)?;
        }
        let names = coords.iter().map(|s| s.to_string()).collect();
        MetricField::new(names, comps, Domain::parse(domain, coords)?, label)
    }

    /// Use central differences for ∂Γ when a component tree is deeper than `limit`.
    pub fn with_depth_limit(mut self, limit: Option<usize>) -> Self {
        self.depth_limit = limit;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[packed(self.dim(), i, j)]
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn field(&self, expr: Expr) -> ScalarField {
        ScalarField::new(expr, self.dim())
    }

    /// Parse a scalar over this chart's coordinates.
    pub fn parse_field(&self, source: &str) -> Result<ScalarField> {
        Ok(self.field(crate::expr::parse(source, &self.coords)?))
    }

    fn uses_finite_differences(&self) -> bool {
        match self.depth_limit {
            Some(limit) => self.components.iter().any(|c| c.depth() > limit),
            None => false,
        }
    }

    // second[packed(m, i)][packed(a, b)] = ∂_m ∂_i g_ab
    fn second_exprs(&self) -> &[Vec<Expr>] {
        self.second.get_or_init(|| {
            let n = self.dim();
            let mut out = vec![Vec::new(); packed_len(n)];
            for m in 0..n {
                for i in m..n {
                    out[packed(n, m, i)] = self.first[i].iter().map(|e| e.derivative(m)).collect();
                }
            }
            out
        })
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, chart has {}",
                p.len(),
                self.dim()
            )));
        }
        if !self.domain.contains(p) {
            return Err(Error::DomainViolation {
                point: p.to_vec(),
                reason: format!("outside `{}`", self.domain.source()),
            });
        }
        Ok(())
    }

    fn eval_packed(&self, exprs: &[Expr], p: &[f64]) -> Result<SymTensor2> {
        let n = self.dim();
        let mut t = SymTensor2::zeros(n);
        for i in 0..n {
            for j in i..n {
                t.set(i, j, exprs[packed(n, i, j)].eval(p)?);
            }
        }
        Ok(t)
    }

    pub fn metric_at(&self, p: &[f64]) -> Result<MetricAt> {
        self.check_point(p)?;
        let g = self.eval_packed(&self.components, p)?;
        let m = g.to_matrix();
        let mut scaled = m.clone();
        for mut row in scaled.row_iter_mut() {
            let s = row.amax();
            if s > 0.0 {
                row /= s;
            }
        }
        let scaled_det = scaled.determinant();
        if !(scaled_det.abs() >= DEGENERACY_THRESHOLD) {
            return Err(Error::DegenerateMetric {
                point: p.to_vec(),
                det: scaled_det.abs(),
            });
        }
        let inverse = m.clone().try_inverse().ok_or_else(|| Error::DegenerateMetric {
            point: p.to_vec(),
            det: scaled_det.abs(),
        })?;
        let eig = SymmetricEigen::new(m);
        let index = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
        Ok(MetricAt {
            components: g,
            inverse,
            signature: Signature::new(self.dim(), index),
            scaled_det,
        })
    }

    pub fn frame(&self, p: &[f64]) -> Result<Frame<'_>> {
        let at = self.metric_at(p)?;
        let n = self.dim();
        let dg = (0..n)
            .map(|k| self.eval_packed(&self.first[k], p))
            .collect::<Result<Vec<_>>>()?;
        let mut christoffel = Christoffel::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        let lowered = dg[i].get(j, l) + dg[j].get(i, l) - dg[l].get(i, j);
                        s += at.inverse[(k, l)] * lowered;
                    }
                    christoffel.set(k, i, j, 0.5 * s);
                    christoffel.set(k, j, i, 0.5 * s);
                }
            }
        }
        Ok(Frame {
            metric: self,
            point: p.to_vec(),
            at,
            dg,
            christoffel,
        })
    }

    pub fn christoffel(&self, p: &[f64]) -> Result<Christoffel> {
        Ok(self.frame(p)?.christoffel)
    }

    pub fn riemann(&self, p: &[f64]) -> Result<Riemann> {
        self.frame(p)?.riemann()
    }

    pub fn ricci(&self, p: &[f64]) -> Result<SymTensor2> {
        self.frame(p)?.ricci()
    }

    pub fn gradient(&self, f: &ScalarField, p: &[f64]) -> Result<TangentVector> {
        self.frame(p)?.gradient(f)
    }

    pub fn norm_sq(&self, v: &TangentVector, p: &[f64]) -> Result<f64> {
        Ok(self.metric_at(p)?.components.apply(&v.components, &v.components))
    }

    pub fn hessian(&self, f: &ScalarField, p: &[f64]) -> Result<SymTensor2> {
        self.frame(p)?.hessian(f)
    }

    pub fn laplacian(&self, f: &ScalarField, p: &[f64]) -> Result<f64> {
        self.frame(p)?.laplacian(f)
    }

    pub fn bochner_residual(&self, phi: &ScalarField, p: &[f64], x: &TangentVector) -> Result<f64> {
        Ok(self.frame(p)?.bochner(phi, x)?.residual())
    }

    /// Nondegeneracy and constant signature at every sampled point.
    pub fn validate(&self, plan: &SamplingPlan) -> Result<Signature> {
        plan.check_dimension(self.dim())?;
        let points = plan.points(&self.domain)?;
        let sigs = parallel::map(&points, plan.execution, |p| self.metric_at(p).map(|m| m.signature));
        let mut first: Option<(Signature, &Vec<f64>)> = None;
        for (p, s) in points.iter().zip(sigs) {
            let s = s?;
            match first {
                None => first = Some((s, p)),
                Some((f, fp)) if f != s => {
                    return Err(Error::SignatureChange {
                        first: f.index,
                        first_point: fp.clone(),
                        second: s.index,
                        second_point: p.clone(),
                    })
                }
                _ => {}
            }
        }
        first
            .map(|(s, _)| s)
            .ok_or_else(|| Error::Sampling("no sample points".into()))
    }
}

/// Induced metric Σ_a ε_a ∂_iψ^a ∂_jψ^a of an embedding into ℝ^N with
/// signature `ambient` (negative directions first).
pub fn pullback_metric(
    embedding: &[Expr],
    ambient: Signature,
    coords: &[&str],
    domain: &str,
    label: &str,
) -> Result<MetricField> {
    if embedding.len() != ambient.dimension {
        return Err(Error::InvalidInput(format!(
            "embedding has {} components, ambient space has dimension {}",
            embedding.len(),
            ambient.dimension
        )));
    }
    let n = coords.len();
    let signs = ambient.signs();
    let jac: Vec<Vec<Expr>> = embedding
        .iter()
        .map(|psi| (0..n).map(|i| psi.derivative(i)).collect())
        .collect();
    let mut comps = vec![Expr::ZERO; packed_len(n)];
    for i in 0..n {
        for j in i..n {
            let mut sum = Expr::ZERO;
            for (a, row) in jac.iter().enumerate() {
                sum = sum + Expr::Const(signs[a]) * row[i].clone() * row[j].clone();
            }
            comps[packed(n, i, j)] = sum;
        }
    }
    let names = coords.iter().map(|s| s.to_string()).collect();
    MetricField::new(names, comps, Domain::parse(domain, coords)?, label)
}

/// Terms of the Bochner identity div(∇∇φ)(X) = Ric(∇φ, X) + X(Δφ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BochnerTerms {
    pub divergence: f64,
    pub ricci_term: f64,
    pub laplacian_derivative: f64,
}

impl BochnerTerms {
    pub fn residual(&self) -> f64 {
        self.divergence - self.ricci_term - self.laplacian_derivative
    }
}

/// Geometry of a metric evaluated at one point.
#[derive(Clone, Debug)]
pub struct Frame<'a> {
    metric: &'a MetricField,
    pub point: Vec<f64>,
    pub at: MetricAt,
    dg: Vec<SymTensor2>,
    pub christoffel: Christoffel,
}

impl Frame<'_> {
    pub fn g(&self) -> &SymTensor2 {
        &self.at.components
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.at.inverse
    }

    fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// ∂_m g^{kl} = −g^{ka} ∂_m g_ab g^{bl}.
    fn inverse_derivative(&self, m: usize) -> DMatrix<f64> {
        let inv = &self.at.inverse;
        -(inv * self.dg[m].to_matrix() * inv)
    }

    /// `out[m]` holds ∂_m Γ^k_ij.
    pub fn christoffel_derivatives(&self) -> Result<Vec<Christoffel>> {
        if self.metric.uses_finite_differences() {
            return self.christoffel_derivatives_fd();
        }
        let n = self.dim();
        let second = self.metric.second_exprs();
        // ddg[packed(m, i)] = ∂_m ∂_i g
        let ddg = second
            .iter()
            .map(|exprs| self.metric.eval_packed(exprs, &self.point))
            .collect::<Result<Vec<_>>>()?;
        let dd = |m: usize, i: usize, a: usize, b: usize| ddg[packed(n, m, i)].get(a, b);
        let inv = &self.at.inverse;
        let mut out = Vec::with_capacity(n);
        for m in 0..n {
            let dinv = self.inverse_derivative(m);
            let mut d = Christoffel::zeros(n);
            for k in 0..n {
                for i in 0..n {
                    for j in i..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            let lowered = self.dg[i].get(j, l) + self.dg[j].get(i, l) - self.dg[l].get(i, j);
                            let dlowered = dd(m, i, j, l) + dd(m, j, i, l) - dd(m, l, i, j);
                            s += dinv[(k, l)] * lowered + inv[(k, l)] * dlowered;
                        }
                        d.set(k, i, j, 0.5 * s);
                        d.set(k, j, i, 0.5 * s);
                    }
                }
            }
            out.push(d);
        }
        Ok(out)
    }

    fn christoffel_derivatives_fd(&self) -> Result<Vec<Christoffel>> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n);
        for m in 0..n {
            let h = FD_STEP * self.point[m].abs().max(1.0);
            let mut hi = self.point.clone();
            let mut lo = self.point.clone();
            hi[m] += h;
            lo[m] -= h;
            let mut d = self.metric.christoffel(&hi)?;
            d.axpy(-1.0, &self.metric.christoffel(&lo)?);
            let mut scaled = Christoffel::zeros(n);
            scaled.axpy(1.0 / (2.0 * h), &d);
            out.push(scaled);
        }
        Ok(out)
    }

    pub fn riemann(&self) -> Result<Riemann> {
        let n = self.dim();
        let d = self.christoffel_derivatives()?;
        let gam = &self.christoffel;
        let mut r = Riemann::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for dd in 0..n {
                        let mut v = d[c].get(a, dd, b) - d[dd].get(a, c, b);
                        for e in 0..n {
                            v += gam.get(a, c, e) * gam.get(e, dd, b) - gam.get(a, dd, e) * gam.get(e, c, b);
                        }
                        r.set(a, b, c, dd, v);
                    }
                }
            }
        }
        Ok(r)
    }

    /// Ricci tensor before symmetrization (for diagnostics).
    pub fn ricci_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let d = self.christoffel_derivatives()?;
        let gam = &self.christoffel;
        Ok(DMatrix::from_fn(n, n, |i, j| {
            let mut s = 0.0;
            for k in 0..n {
                s += d[k].get(k, i, j) - d[i].get(k, k, j);
                for l in 0..n {
                    s += gam.get(k, k, l) * gam.get(l, i, j) - gam.get(k, i, l) * gam.get(l, k, j);
                }
            }
            s
        }))
    }

    pub fn ricci(&self) -> Result<SymTensor2> {
        Ok(SymTensor2::from_matrix(&self.ricci_matrix()?))
    }

    pub fn scalar_curvature(&self) -> Result<f64> {
        Ok(self.trace(&self.ricci()?))
    }

    /// g^{ij} T_ij.
    pub fn trace(&self, t: &SymTensor2) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.at.inverse[(i, j)] * t.get(i, j);
            }
        }
        s
    }

    pub fn raise(&self, covector: &[f64]) -> TangentVector {
        let n = self.dim();
        TangentVector::new(
            (0..n)
                .map(|i| (0..n).map(|j| self.at.inverse[(i, j)] * covector[j]).sum())
                .collect(),
        )
    }

    pub fn gradient(&self, f: &ScalarField) -> Result<TangentVector> {
        Ok(self.raise(&f.partials(&self.point)?))
    }

    pub fn norm_sq(&self, v: &TangentVector) -> f64 {
        self.g().apply(&v.components, &v.components)
    }

    /// g(∇f₁, ∇f₂) = g^{ij} ∂_i f₁ ∂_j f₂.
    pub fn inner_gradients(&self, f1: &ScalarField, f2: &ScalarField) -> Result<f64> {
        let a = f1.partials(&self.point)?;
        let b = f2.partials(&self.point)?;
        Ok(self.inner_covectors(&a, &b))
    }

    pub fn inner_covectors(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.at.inverse[(i, j)] * a[i] * b[j];
            }
        }
        s
    }

    /// Hessian from precomputed partials of f at this point.
    pub fn hessian_from_partials(&self, first: &[f64], second: &SymTensor2) -> SymTensor2 {
        let n = self.dim();
        SymTensor2::from_fn(n, |i, j| {
            let mut s = second.get(i, j);
            for k in 0..n {
                s -= self.christoffel.get(k, i, j) * first[k];
            }
            s
        })
    }

    pub fn hessian(&self, f: &ScalarField) -> Result<SymTensor2> {
        let first = f.partials(&self.point)?;
        let second = f.second_partials(&self.point)?;
        Ok(self.hessian_from_partials(&first, &second))
    }

    pub fn laplacian(&self, f: &ScalarField) -> Result<f64> {
        Ok(self.trace(&self.hessian(f)?))
    }

    pub fn bochner(&self, phi: &ScalarField, x: &TangentVector) -> Result<BochnerTerms> {
        let n = self.dim();
        let p = &self.point;
        let d1 = phi.partials(p)?;
        let d2 = phi.second_partials(p)?;
        let d3 = phi.third_partials(p)?;
        let dgam = self.christoffel_derivatives()?;
        let gam = &self.christoffel;
        let hess = self.hessian_from_partials(&d1, &d2);
        let ric = self.ricci()?;
        let inv = &self.at.inverse;

        // dh[(i*n + k)*n + j] = ∂_i Hess_kj
        let mut dh = vec![0.0; n * n * n];
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    let mut v = d3[(i * n + k) * n + j];
                    for l in 0..n {
                        v -= dgam[i].get(l, k, j) * d1[l] + gam.get(l, k, j) * d2.get(i, l);
                    }
                    dh[(i * n + k) * n + j] = v;
                }
            }
        }
        let mut divergence = 0.0;
        for j in 0..n {
            let mut div_j = 0.0;
            for i in 0..n {
                for k in 0..n {
                    let mut cov = dh[(i * n + k) * n + j];
                    for l in 0..n {
                        cov -= gam.get(l, i, k) * hess.get(l, j) + gam.get(l, i, j) * hess.get(k, l);
                    }
                    div_j += inv[(i, k)] * cov;
                }
            }
            divergence += div_j * x.components[j];
        }
        let grad = self.raise(&d1);
        let ricci_term = ric.apply(&grad.components, &x.components);
        let mut laplacian_derivative = 0.0;
        for m in 0..n {
            let dinv = self.inverse_derivative(m);
            let mut dlap = 0.0;
            for i in 0..n {
                for j in 0..n {
                    dlap += dinv[(i, j)] * hess.get(i, j) + inv[(i, j)] * dh[(m * n + i) * n + j];
                }
            }
            laplacian_derivative += x.components[m] * dlap;
        }
        Ok(BochnerTerms {
            divergence,
            ricci_term,
            laplacian_derivative,
        })
    }
}

#[cfg(test)]
mod tests;
