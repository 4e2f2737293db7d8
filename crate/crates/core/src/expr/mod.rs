//! Scalar expressions over chart coordinates.
//!
//! An [`Expr`] refers to coordinates by position, so the same tree can be
//! evaluated at any point of the chart it was parsed against. Derivatives are
//! exact: [`Expr::derivative`] applies the chain, product and quotient rules
//! and the result is again an [`Expr`]. The constructors fold constants and
//! drop `x*0`, `x*1` and `x+0` so repeated differentiation stays bounded.

mod domain;
mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;
use std::ops;

use thiserror::Error;

pub use domain::{Comparison, Domain};
pub use parse::parse;
pub use print::Printed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("`{coordinate}` is not a coordinate of this chart")]
    UnknownCoordinate { coordinate: String },
    #[error("{func} is undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

/// Built-in unary functions. `Sign` is produced by differentiating `abs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Abs,
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> Result<f64, ExprError> {
        let domain = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(ExprError::Domain {
                    func: self.name(),
                    arg: x,
                })
            }
        };
        let y = match self {
            Func::Exp => x.exp(),
            Func::Log => {
                domain(x > 0.0)?;
                x.ln()
            }
            Func::Sqrt => {
                domain(x >= 0.0)?;
                x.sqrt()
            }
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Abs => x.abs(),
            Func::Sign => {
                domain(x != 0.0)?;
                x.signum()
            }
        };
        finite(y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Exponent is always a constant; variable exponents are rewritten as
    /// `exp(g*log(f))` by [`Expr::pow`].
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Index into the chart's coordinate list.
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

fn finite(y: f64) -> Result<f64, ExprError> {
    if y.is_finite() {
        Ok(y)
    } else {
        Err(ExprError::NonFinite)
    }
}

impl Expr {
    pub const ZERO: Expr = Expr::Const(0.0);
    pub const ONE: Expr = Expr::Const(1.0);

    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn var(index: usize) -> Expr {
        Expr::Var(index)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        if let Some(c) = arg.as_const() {
            if let Ok(y) = func.apply(c) {
                return Expr::Const(y);
            }
        }
        Expr::Call(func, Box::new(arg))
    }

    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }

    pub fn log(self) -> Expr {
        Expr::call(Func::Log, self)
    }

    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }

    pub fn sin(self) -> Expr {
        Expr::call(Func::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::call(Func::Cos, self)
    }

    pub fn sinh(self) -> Expr {
        Expr::call(Func::Sinh, self)
    }

    pub fn cosh(self) -> Expr {
        Expr::call(Func::Cosh, self)
    }

    /// `base^exponent`. Non-constant exponents become `exp(exponent*log(base))`,
    /// which restricts the base to positive values at evaluation time.
    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        match exponent.as_const() {
            Some(0.0) => Expr::ONE,
            Some(1.0) => base,
            Some(n) => {
                if let Some(b) = base.as_const() {
                    if let Ok(y) = pow_value(b, n) {
                        return Expr::Const(y);
                    }
                }
                Expr::Binary(BinOp::Pow, Box::new(base), Box::new(Expr::Const(n)))
            }
            None => (exponent * base.log()).exp(),
        }
    }

    pub fn powi(self, n: i32) -> Expr {
        Expr::pow(self, Expr::Const(f64::from(n)))
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(i) => Ok(point[*i]),
            Expr::Neg(a) => Ok(-a.eval(point)?),
            Expr::Binary(op, a, b) => {
                let x = a.eval(point)?;
                let y = b.eval(point)?;
                match op {
                    BinOp::Add => finite(x + y),
                    BinOp::Sub => finite(x - y),
                    BinOp::Mul => finite(x * y),
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(ExprError::Domain {
                                func: "division",
                                arg: y,
                            });
                        }
                        finite(x / y)
                    }
                    BinOp::Pow => pow_value(x, y),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(point)?),
        }
    }

    /// Exact partial derivative with respect to coordinate `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::ZERO,
            Expr::Var(i) => {
                if *i == var {
                    Expr::ONE
                } else {
                    Expr::ZERO
                }
            }
            Expr::Neg(a) => -a.derivative(var),
            Expr::Binary(op, a, b) => {
                let da = a.derivative(var);
                match op {
                    BinOp::Add => da + b.derivative(var),
                    BinOp::Sub => da - b.derivative(var),
                    BinOp::Mul => {
                        let db = b.derivative(var);
                        da * (**b).clone() + (**a).clone() * db
                    }
                    BinOp::Div => {
                        let db = b.derivative(var);
                        if db.is_zero() {
                            da / (**b).clone()
                        } else {
                            (da * (**b).clone() - (**a).clone() * db) / (**b).clone().powi(2)
                        }
                    }
                    BinOp::Pow => {
                        // exponent is constant by construction
                        let n = b.as_const().unwrap_or(f64::NAN);
                        Expr::Const(n) * Expr::pow((**a).clone(), Expr::Const(n - 1.0)) * da
                    }
                }
            }
            Expr::Call(f, a) => {
                let da = a.derivative(var);
                if da.is_zero() {
                    return Expr::ZERO;
                }
                let u = (**a).clone();
                let outer = match f {
                    Func::Exp => u.exp(),
                    Func::Log => return da / u,
                    Func::Sqrt => return da / (Expr::Const(2.0) * u.sqrt()),
                    Func::Sin => u.cos(),
                    Func::Cos => -u.sin(),
                    Func::Tan => return da / u.cos().powi(2),
                    Func::Sinh => u.cosh(),
                    Func::Cosh => u.sinh(),
                    Func::Tanh => return da / u.cosh().powi(2),
                    Func::Abs => Expr::call(Func::Sign, u),
                    Func::Sign => return Expr::ZERO,
                };
                outer * da
            }
        }
    }

    /// Replace coordinate `var` by a constant and re-fold.
    pub fn substitute(&self, var: usize, value: f64) -> Expr {
        self.rebuild(&|i| {
            if i == var {
                Some(Expr::Const(value))
            } else {
                None
            }
        })
    }

    /// Renumber coordinates, e.g. to lift a fiber expression into product coordinates.
    pub fn remap(&self, map: &dyn Fn(usize) -> usize) -> Expr {
        self.rebuild(&|i| Some(Expr::Var(map(i))))
    }

    fn rebuild(&self, leaf: &dyn Fn(usize) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => leaf(*i).unwrap_or(Expr::Var(*i)),
            Expr::Neg(a) => -a.rebuild(leaf),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.rebuild(leaf), b.rebuild(leaf));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => Expr::pow(a, b),
                }
            }
            Expr::Call(f, a) => Expr::call(*f, a.rebuild(leaf)),
        }
    }

    pub fn variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(i) => {
                out.insert(*i);
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Render with coordinate names; the output re-parses to an equivalent tree.
    pub fn display<'a>(&'a self, coords: &'a [String]) -> Printed<'a> {
        Printed::new(self, coords)
    }
}

fn pow_value(base: f64, exponent: f64) -> Result<f64, ExprError> {
    let y = if exponent.fract() == 0.0 && exponent.abs() <= f64::from(i32::MAX) {
        base.powi(exponent as i32)
    } else {
        if base < 0.0 {
            return Err(ExprError::Domain { func: "pow", arg: base });
        }
        base.powf(exponent)
    };
    finite(y)
}

fn fold(a: &Expr, b: &Expr, f: impl Fn(f64, f64) -> f64) -> Option<Expr> {
    let y = f(a.as_const()?, b.as_const()?);
    y.is_finite().then_some(Expr::Const(y))
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        if let Some(c) = fold(&self, &rhs, |x, y| x + y) {
            return c;
        }
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        Expr::Binary(BinOp::Add, Box::new(self), Box::new(rhs))
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        if let Some(c) = fold(&self, &rhs, |x, y| x - y) {
            return c;
        }
        if rhs.is_zero() {
            return self;
        }
        if self.is_zero() {
            return -rhs;
        }
        Expr::Binary(BinOp::Sub, Box::new(self), Box::new(rhs))
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        if let Some(c) = fold(&self, &rhs, |x, y| x * y) {
            return c;
        }
        if self.is_zero() || rhs.is_zero() {
            return Expr::ZERO;
        }
        if self.is_one() {
            return rhs;
        }
        if rhs.is_one() {
            return self;
        }
        if self.as_const() == Some(-1.0) {
            return -rhs;
        }
        if rhs.as_const() == Some(-1.0) {
            return -self;
        }
        Expr::Binary(BinOp::Mul, Box::new(self), Box::new(rhs))
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        if rhs.as_const() != Some(0.0) {
            if let Some(c) = fold(&self, &rhs, |x, y| x / y) {
                return c;
            }
            if self.is_zero() {
                return Expr::ZERO;
            }
        }
        if rhs.is_one() {
            return self;
        }
        Expr::Binary(BinOp::Div, Box::new(self), Box::new(rhs))
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(a) => *a,
            other => Expr::Neg(Box::new(other)),
        }
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::Const(value)
    }
}

impl fmt::Display for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Index of `name` in `coords`.
pub fn coordinate_index(coords: &[String], name: &str) -> Result<usize, ExprError> {
    coords
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| ExprError::UnknownCoordinate {
            coordinate: name.to_string(),
        })
}

/// Derivative with respect to a named coordinate.
pub fn differentiate(e: &Expr, coords: &[String], var: &str) -> Result<Expr, ExprError> {
    Ok(e.derivative(coordinate_index(coords, var)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn central_difference(e: &Expr, var: usize, p: &[f64], step: f64) -> f64 {
        let mut hi = p.to_vec();
        let mut lo = p.to_vec();
        hi[var] += step;
        lo[var] -= step;
        (e.eval(&hi).unwrap() - e.eval(&lo).unwrap()) / (2.0 * step)
    }

    #[test]
    fn parses_and_evaluates_product() {
        let c = names(&["t", "u"]);
        let e = parse("cosh(t)*exp(u)", &c).unwrap();
        // cosh(1) from the series definition, independent of f64::cosh
        let cosh1 = (1f64.exp() + (-1f64).exp()) / 2.0;
        assert!((e.eval(&[1.0, 0.0]).unwrap() - cosh1).abs() < 1e-12);
        assert!((cosh1 - 1.5430806348).abs() < 1e-10);
    }

    #[test]
    fn zero_literal_is_constant() {
        let e = parse("0", &names(&["x"])).unwrap();
        assert_eq!(e, Expr::Const(0.0));
    }

    #[test]
    fn malformed_input_reports_offset_of_star() {
        let err = parse("x1 + * x2", &names(&["x1", "x2"])).unwrap_err();
        match err {
            ExprError::Syntax { offset, .. } => assert_eq!(offset, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_and_arity() {
        let c = names(&["x"]);
        assert!(matches!(
            parse("x + y", &c),
            Err(ExprError::UnknownIdentifier { ref name, offset: 4 }) if name == "y"
        ));
        assert!(matches!(
            parse("sin(x, x)", &c),
            Err(ExprError::Arity {
                expected: 1,
                found: 2,
                ..
            })
        ));
        assert!(matches!(
            parse("pow(x)", &c),
            Err(ExprError::Arity {
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert!(matches!(parse("foo(x)", &c), Err(ExprError::UnknownIdentifier { .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        let c = names(&["x"]);
        let eval = |s: &str, x: f64| parse(s, &c).unwrap().eval(&[x]).unwrap();
        assert_eq!(eval("-x^2", 3.0), -9.0);
        assert_eq!(eval("2^3^2", 0.0), 512.0);
        assert_eq!(eval("8/4/2", 0.0), 1.0);
        assert_eq!(eval("1-2-3", 0.0), -4.0);
        assert_eq!(eval("2*-x", 3.0), -6.0);
        assert_eq!(eval("1.5e2 + pi - pi", 0.0), 150.0);
        assert!((eval("e", 0.0) - std::f64::consts::E).abs() < 1e-15);
        assert!(parse("x^-2", &c).is_err());
    }

    #[test]
    fn derivative_examples() {
        let c = names(&["t", "u"]);
        let e = parse("cosh(t)*exp(u)", &c).unwrap();
        let d = differentiate(&e, &c, "t").unwrap();
        assert_eq!(d.eval(&[0.0, 0.0]).unwrap(), 0.0);
        let expected = parse("sinh(t)*exp(u)", &c).unwrap();
        for p in [[0.3, -0.2], [1.1, 0.7]] {
            assert!((d.eval(&p).unwrap() - expected.eval(&p).unwrap()).abs() < 1e-14);
        }

        let x = names(&["x"]);
        let sq = parse("x^2", &x).unwrap();
        assert_eq!(sq.derivative(0).eval(&[3.0]).unwrap(), 6.0);

        let th = names(&["θ"]);
        let s = parse("sin(θ)^2", &th).unwrap();
        let p = [std::f64::consts::FRAC_PI_4];
        let exact = s.derivative(0).eval(&p).unwrap();
        let fd = central_difference(&s, 0, &p, 1e-5);
        assert!((exact - 1.0).abs() < 1e-12);
        assert!((exact - fd).abs() < 1e-8);
    }

    #[test]
    fn abs_derivative_is_sign_and_fails_at_zero() {
        let c = names(&["x"]);
        let d = parse("abs(x)", &c).unwrap().derivative(0);
        assert_eq!(d.eval(&[-2.0]).unwrap(), -1.0);
        assert!(matches!(d.eval(&[0.0]), Err(ExprError::Domain { .. })));
    }

    #[test]
    fn variable_exponent_requires_positive_base() {
        let c = names(&["x", "y"]);
        let e = parse("pow(x, y)", &c).unwrap();
        assert!((e.eval(&[2.0, 3.0]).unwrap() - 8.0).abs() < 1e-12);
        assert!(e.eval(&[-2.0, 2.0]).is_err());
        let dy = e.derivative(1).eval(&[2.0, 3.0]).unwrap();
        assert!((dy - 8.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn non_finite_evaluation_is_an_error() {
        let c = names(&["x"]);
        assert!(parse("1/x", &c).unwrap().eval(&[0.0]).is_err());
        assert!(parse("log(x)", &c).unwrap().eval(&[-1.0]).is_err());
        assert!(parse("exp(x)", &c).unwrap().eval(&[1e5]).is_err());
    }

    #[test]
    fn simplifier_drops_trivial_terms() {
        let c = names(&["x", "y"]);
        let e = parse("x*0 + y + 0", &c).unwrap();
        assert_eq!(e, Expr::Var(1));
        let d = parse("x*y", &c).unwrap().derivative(0);
        assert_eq!(d, Expr::Var(1));
    }

    #[test]
    fn substitution_folds_constants() {
        let c = names(&["t", "u"]);
        let e = parse("cosh(t)*exp(u)", &c).unwrap();
        assert_eq!(e.substitute(1, 0.0), Expr::Call(Func::Cosh, Box::new(Expr::Var(0))));
    }

    // Random polynomial/trigonometric trees over three coordinates.
    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-3.0f64..3.0).prop_map(|c| Expr::Const((c * 100.0).round() / 100.0)),
            (0usize..3).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                inner.clone().prop_map(|a| a.sin()),
                inner.clone().prop_map(|a| a.cos()),
                inner.clone().prop_map(|a| a.powi(2)),
                inner.prop_map(|a| -a),
            ]
        })
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference(
            e in arb_expr(),
            p in proptest::collection::vec(-1.5f64..1.5, 3),
            var in 0usize..3,
        ) {
            let exact = e.derivative(var).eval(&p).unwrap();
            let fd = central_difference(&e, var, &p, 1e-5);
            prop_assert!((exact - fd).abs() <= 1e-6 * (1.0 + exact.abs()), "{exact} vs {fd}");
        }

        #[test]
        fn mixed_partials_commute(
            e in arb_expr(),
            p in proptest::collection::vec(-1.5f64..1.5, 3),
        ) {
            let xy = e.derivative(0).derivative(1).eval(&p).unwrap();
            let yx = e.derivative(1).derivative(0).eval(&p).unwrap();
            prop_assert!((xy - yx).abs() <= 1e-9 * (1.0 + xy.abs().max(yx.abs())));
        }

        #[test]
        fn printed_tree_reparses_equivalently(
            e in arb_expr(),
            p in proptest::collection::vec(-1.5f64..1.5, 3),
        ) {
            let c = vec!["x".to_string(), "y".to_string(), "z".to_string()];
            let text = e.display(&c).to_string();
            let back = parse(&text, &c).unwrap();
            let (a, b) = (e.eval(&p).unwrap(), back.eval(&p).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{text}: {a} vs {b}");
        }
    }
}
