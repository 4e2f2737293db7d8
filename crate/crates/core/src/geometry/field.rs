use std::sync::OnceLock;

use super::tensor::{packed, packed_len, SymTensor2};
use crate::expr::Expr;
use crate::Result;

/// A scalar function on a chart with its partial derivatives built once on
/// demand and shared across evaluations.
#[derive(Clone, Debug)]
pub struct ScalarField {
    expr: Expr,
    dim: usize,
    first: OnceLock<Vec<Expr>>,
    second: OnceLock<Vec<Expr>>,
    third: OnceLock<Vec<Expr>>,
}

impl ScalarField {
    pub fn new(expr: Expr, dim: usize) -> Self {
        ScalarField {
            expr,
            dim,
            first: OnceLock::new(),
            second: OnceLock::new(),
            third: OnceLock::new(),
        }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn first_exprs(&self) -> &[Expr] {
        self.first
            .get_or_init(|| (0..self.dim).map(|i| self.expr.derivative(i)).collect())
    }

    fn second_exprs(&self) -> &[Expr] {
        self.second.get_or_init(|| {
            let first = self.first_exprs();
            let n = self.dim;
            let mut out = vec![Expr::ZERO; packed_len(n)];
            for i in 0..n {
                for j in i..n {
                    out[packed(n, i, j)] = first[i].derivative(j);
                }
            }
            out
        })
    }

    // third[(i*n + j)*n + k] = ∂_i ∂_j ∂_k f
    fn third_exprs(&self) -> &[Expr] {
        self.third.get_or_init(|| {
            let second = self.second_exprs();
            let n = self.dim;
            let mut out = Vec::with_capacity(n * n * n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out.push(second[packed(n, j, k)].derivative(i));
                    }
                }
            }
            out
        })
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        Ok(self.expr.eval(p)?)
    }

    pub fn partials(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.first_exprs().iter().map(|e| Ok(e.eval(p)?)).collect()
    }

    pub fn second_partials(&self, p: &[f64]) -> Result<SymTensor2> {
        let second = self.second_exprs();
        let mut t = SymTensor2::zeros(self.dim);
        for i in 0..self.dim {
            for j in i..self.dim {
                t.set(i, j, second[packed(self.dim, i, j)].eval(p)?);
            }
        }
        Ok(t)
    }

    pub fn third_partials(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.third_exprs().iter().map(|e| Ok(e.eval(p)?)).collect()
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.expr.variables().contains(&var)
    }
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.expr == other.expr
    }
}
