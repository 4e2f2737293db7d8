use std::fmt;

use super::{BinOp, Expr};

/// Display adapter produced by [`Expr::display`].
pub struct Printed<'a> {
    expr: &'a Expr,
    coords: &'a [String],
}

impl<'a> Printed<'a> {
    pub(super) fn new(expr: &'a Expr, coords: &'a [String]) -> Self {
        Printed { expr, coords }
    }
}

// Binding strength, loosest first: sums, products, unary minus, powers, atoms.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if c.is_sign_negative() => UNARY,
        Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => ATOM,
        Expr::Neg(_) => UNARY,
        Expr::Binary(op, ..) => match op {
            BinOp::Add | BinOp::Sub => SUM,
            BinOp::Mul | BinOp::Div => PRODUCT,
            BinOp::Pow => POWER,
        },
    }
}

fn write(e: &Expr, coords: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let child = |c: &Expr, min: u8, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        if precedence(c) < min {
            f.write_str("(")?;
            write(c, coords, f)?;
            f.write_str(")")
        } else {
            write(c, coords, f)
        }
    };
    match e {
        Expr::Const(c) => write!(f, "{c}"),
        Expr::Var(i) => match coords.get(*i) {
            Some(name) => f.write_str(name),
            None => write!(f, "x{i}"),
        },
        Expr::Neg(a) => {
            f.write_str("-")?;
            child(a, POWER, f)
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write(a, coords, f)?;
            f.write_str(")")
        }
        Expr::Binary(op, a, b) => {
            let (sym, left, right) = match op {
                BinOp::Add => ("+", SUM, PRODUCT),
                BinOp::Sub => ("-", SUM, PRODUCT),
                BinOp::Mul => ("*", PRODUCT, UNARY),
                BinOp::Div => ("/", PRODUCT, UNARY),
                BinOp::Pow => ("^", ATOM, POWER),
            };
            // a right operand of `*` or `/` may itself start with unary minus,
            // but must not be another product (left associativity)
            let right =
                if matches!(op, BinOp::Mul | BinOp::Div) && matches!(**b, Expr::Binary(BinOp::Mul | BinOp::Div, ..)) {
                    ATOM
                } else {
                    right
                };
            child(a, left, f)?;
            f.write_str(sym)?;
            child(b, right, f)
        }
    }
}

impl fmt::Display for Printed<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write(self.expr, self.coords, f)
    }
}
