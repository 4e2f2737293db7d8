//! Warped products B ×_h F with metric g_B ⊕ h² g_F.
//!
//! Product coordinates are the base coordinates followed by the fiber
//! coordinates. Curvature and Hessians are assembled from base and fiber data
//! by the standard block formulas; the full product chart is kept alongside
//! so every block formula can be checked against a direct computation.

mod spec;

pub use spec::{FiberSpec, WarpedProductSpec};

use crate::expr::{Domain, Expr};
use crate::geometry::{packed, packed_len, Frame, MetricField, ScalarField, Signature, SymTensor2};
use crate::report::{evaluate_lines, CheckReport, Residual};
use crate::sampling::SamplingPlan;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct WarpedProduct {
    base: MetricField,
    fiber: MetricField,
    h: ScalarField,
    product: MetricField,
}

impl WarpedProduct {
    /// `h` is an expression in the base coordinates.
    pub fn new(base: MetricField, fiber: MetricField, h: Expr) -> Result<Self> {
        let n = base.dim();
        if h.variables().iter().any(|&v| v >= n) {
            return Err(Error::FiberDependence {
                what: "warping function".into(),
            });
        }
        if let Some(c) = fiber.coords().iter().find(|c| base.coords().contains(c)) {
            return Err(Error::InvalidInput(format!(
                "coordinate `{c}` appears in both base and fiber"
            )));
        }
        let product = product_chart(&base, &fiber, &h)?;
        Ok(WarpedProduct {
            h: ScalarField::new(h, n),
            base,
            fiber,
            product,
        })
    }

    pub fn parse(base: MetricField, fiber: MetricField, h: &str) -> Result<Self> {
        let h = crate::expr::parse(h, base.coords())?;
        WarpedProduct::new(base, fiber, h)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.product = self.product.with_label(label);
        self
    }

    pub fn base(&self) -> &MetricField {
        &self.base
    }

    pub fn fiber(&self) -> &MetricField {
        &self.fiber
    }

    pub fn h(&self) -> &ScalarField {
        &self.h
    }

    /// n = dim B.
    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    /// m = dim F.
    pub fn fiber_dim(&self) -> usize {
        self.fiber.dim()
    }

    /// True when every partial of h simplifies to zero.
    pub fn is_trivial(&self) -> bool {
        (0..self.base_dim()).all(|i| self.h.expr().derivative(i).is_zero())
    }

    pub fn product_metric(&self) -> &MetricField {
        &self.product
    }

    pub fn split<'p>(&self, p: &'p [f64]) -> (&'p [f64], &'p [f64]) {
        p.split_at(self.base_dim())
    }

    fn check_positive(&self, p: &[f64]) -> Result<f64> {
        let (pb, _) = self.split(p);
        let h = self.h.value(pb)?;
        if !(h > 0.0) {
            return Err(Error::DomainViolation {
                point: p.to_vec(),
                reason: format!("warping function is {h}, not positive"),
            });
        }
        Ok(h)
    }

    /// Positivity of h and the product-metric invariants at every sample.
    pub fn validate(&self, plan: &SamplingPlan) -> Result<Signature> {
        plan.check_dimension(self.product.dim())?;
        for p in plan.points(self.product.domain())? {
            self.check_positive(&p)?;
        }
        self.product.validate(plan)
    }

    pub fn frame(&self, p: &[f64]) -> Result<WarpedFrame<'_>> {
        if p.len() != self.product.dim() {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, product has {}",
                p.len(),
                self.product.dim()
            )));
        }
        let h = self.check_positive(p)?;
        let (pb, pf) = self.split(p);
        let base = self.base.frame(pb)?;
        let fiber = self.fiber.frame(pf)?;
        let dh = self.h.partials(pb)?;
        let hess_h = base.hessian(&self.h)?;
        let laplacian_h = base.trace(&hess_h);
        let grad_h_sq = base.inner_covectors(&dh, &dh);
        Ok(WarpedFrame {
            wp: self,
            point: p.to_vec(),
            base,
            fiber,
            h,
            dh,
            hess_h,
            laplacian_h,
            grad_h_sq,
        })
    }

    pub fn warped_ricci(&self, p: &[f64]) -> Result<SymTensor2> {
        self.frame(p)?.ricci()
    }

    pub fn warped_hessian(&self, f: &ScalarField, p: &[f64]) -> Result<SymTensor2> {
        self.frame(p)?.hessian(f)
    }

    /// Parse a scalar over the product coordinates.
    pub fn parse_field(&self, source: &str) -> Result<ScalarField> {
        self.product.parse_field(source)
    }

    /// Checks that the product is Einstein with Ric = a(m+n−1) g through the
    /// base, fiber and warping-function conditions. A one-dimensional base
    /// uses the ODE form Hess h + a h g_B = 0, |∇h|² + a h² = c.
    pub fn einstein_check(&self, a: f64, c: f64, plan: &SamplingPlan, tolerance: f64) -> Result<CheckReport> {
        plan.check_dimension(self.product.dim())?;
        let points = plan.points(self.product.domain())?;
        let n = self.base_dim() as f64;
        let m = self.fiber_dim() as f64;
        let k = a * (m + n - 1.0);
        let one_dim = self.base_dim() == 1;
        let labels: &[&str] = if one_dim {
            &[
                "ode: Hess_B h + a h g_B = 0",
                "energy: |grad h|^2 + a h^2 = c",
                "fiber: Ric_F = c(m-1) g_F",
                "product: Ric = a(m+n-1) g",
            ]
        } else {
            &[
                "base: Ric_B - m/h Hess_B h = a(m+n-1) g_B",
                "relation: h Lap h + (m-1)|grad h|^2 + a(m+n-1) h^2 = c(m-1)",
                "fiber: Ric_F = c(m-1) g_F",
                "product: Ric = a(m+n-1) g",
            ]
        };
        evaluate_lines("einstein", labels, &points, plan, tolerance, |p| {
            let w = self.frame(p)?;
            let g_b = w.base.g();
            let g_f = w.fiber.g();
            let ric_f = w.fiber.ricci()?;
            let fiber = Residual::tensor(&ric_f, &g_f.scale(c * (m - 1.0)));
            let (first, second) = if one_dim {
                (
                    Residual::tensor(&w.hess_h, &g_b.scale(-a * w.h)),
                    Residual::scalar(w.grad_h_sq + a * w.h * w.h, c),
                )
            } else {
                let ric_b = w.base.ricci()?;
                let lhs = ric_b.sub(&w.hess_h.scale(m / w.h));
                (
                    Residual::tensor(&lhs, &g_b.scale(k)),
                    Residual::scalar(
                        w.h * w.laplacian_h + (m - 1.0) * w.grad_h_sq + k * w.h * w.h,
                        c * (m - 1.0),
                    ),
                )
            };
            let g = self.product.metric_at(p)?.components;
            let product = Residual::tensor(&w.ricci_with(&ric_f)?, &g.scale(k));
            Ok(vec![first, second, fiber, product])
        })
        .map(|r| r.with_derived("a", a).with_derived("c", c))
    }

    /// Closed-form Ricci (and Hessian of `f`, if given) against the direct
    /// product-chart computation.
    pub fn cross_validate(&self, f: Option<&ScalarField>, plan: &SamplingPlan, tolerance: f64) -> Result<CheckReport> {
        plan.check_dimension(self.product.dim())?;
        let points = plan.points(self.product.domain())?;
        let mut labels = vec!["ricci: block formula = chart", "mixed: chart Ric(X, U) = 0"];
        if f.is_some() {
            labels.push("hessian: block formula = chart");
        }
        evaluate_lines("warped_cross_check", &labels, &points, plan, tolerance, |p| {
            let w = self.frame(p)?;
            let direct = self.product.frame(p)?;
            let ric = direct.ricci()?;
            let n = self.base_dim();
            let mixed = (0..n)
                .flat_map(|i| (n..ric.dim()).map(move |j| (i, j)))
                .map(|(i, j)| ric.get(i, j).abs())
                .fold(0.0, f64::max);
            let mut out = vec![Residual::tensor(&w.ricci()?, &ric), Residual::zero(mixed)];
            if let Some(f) = f {
                out.push(Residual::tensor(&w.hessian(f)?, &direct.hessian(f)?));
            }
            Ok(out)
        })
    }
}

fn product_chart(base: &MetricField, fiber: &MetricField, h: &Expr) -> Result<MetricField> {
    let n = base.dim();
    let m = fiber.dim();
    let dim = n + m;
    let h2 = h.clone().powi(2);
    let mut comps = vec![Expr::ZERO; packed_len(dim)];
    for i in 0..n {
        for j in i..n {
            comps[packed(dim, i, j)] = base.component(i, j).clone();
        }
    }
    let shift = |v: usize| v + n;
    for i in 0..m {
        for j in i..m {
            comps[packed(dim, n + i, n + j)] = h2.clone() * fiber.component(i, j).remap(&shift);
        }
    }
    let coords = base.coords().iter().chain(fiber.coords()).cloned().collect();
    let domain: Domain = base.domain().and_shifted(fiber.domain(), n);
    let label = match (base.label(), fiber.label()) {
        ("", "") => String::new(),
        (b, f) => format!("{b} x_h {f}"),
    };
    MetricField::new(coords, comps, domain, label)
}

/// Base and fiber geometry of a warped product at one product point.
#[derive(Clone, Debug)]
pub struct WarpedFrame<'a> {
    pub wp: &'a WarpedProduct,
    pub point: Vec<f64>,
    pub base: Frame<'a>,
    pub fiber: Frame<'a>,
    pub h: f64,
    /// Base partials of h.
    pub dh: Vec<f64>,
    pub hess_h: SymTensor2,
    pub laplacian_h: f64,
    pub grad_h_sq: f64,
}

impl WarpedFrame<'_> {
    pub fn ricci(&self) -> Result<SymTensor2> {
        self.ricci_with(&self.fiber.ricci()?)
    }

    fn ricci_with(&self, ric_f: &SymTensor2) -> Result<SymTensor2> {
        let n = self.wp.base_dim();
        let m = self.wp.fiber_dim() as f64;
        let base = self.base.ricci()?.sub(&self.hess_h.scale(m / self.h));
        let warp = self.h * self.laplacian_h + (m - 1.0) * self.grad_h_sq;
        let fiber = ric_f.sub(&self.fiber.g().scale(warp));
        let mut out = SymTensor2::zeros(n + self.wp.fiber_dim());
        out.set_block(0, &base);
        out.set_block(n, &fiber);
        Ok(out)
    }

    /// g_B(∇h, ∇_B f) from the base partials of f.
    pub fn grad_h_dot(&self, base_partials: &[f64]) -> f64 {
        self.base.inner_covectors(&self.dh, base_partials)
    }

    pub fn hessian(&self, f: &ScalarField) -> Result<SymTensor2> {
        let n = self.wp.base_dim();
        let m = self.wp.fiber_dim();
        let d1 = f.partials(&self.point)?;
        let d2 = f.second_partials(&self.point)?;
        let mut out = SymTensor2::zeros(n + m);
        let base = self.base.hessian_from_partials(&d1[..n], &d2.block(0, n));
        out.set_block(0, &base);
        for x in 0..n {
            for y in 0..m {
                out.set(x, n + y, d2.get(x, n + y) - self.dh[x] / self.h * d1[n + y]);
            }
        }
        let shift = self.h * self.grad_h_dot(&d1[..n]);
        let fiber = self
            .fiber
            .hessian_from_partials(&d1[n..], &d2.block(n, m))
            .add(&self.fiber.g().scale(shift));
        out.set_block(n, &fiber);
        Ok(out)
    }
}

#[cfg(test)]
mod tests;
