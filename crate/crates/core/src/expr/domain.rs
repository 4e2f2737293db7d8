use super::{parse, Expr, ExprError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    Less,
    LessEq,
    Greater,
    GreaterEq,
}

impl Comparison {
    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparison::Less => lhs < rhs,
            Comparison::LessEq => lhs <= rhs,
            Comparison::Greater => lhs > rhs,
            Comparison::GreaterEq => lhs >= rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Clause {
    lhs: Expr,
    op: Comparison,
    rhs: Expr,
}

/// Chart domain: a conjunction of strict or non-strict inequalities between
/// expressions, e.g. `"0.001 < theta < 3.14 && r > 0"`, or `"true"`.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    source: String,
    clauses: Vec<Clause>,
}

impl Default for Domain {
    fn default() -> Self {
        Domain::all()
    }
}

fn split_comparisons(text: &str) -> Vec<(&str, Option<Comparison>)> {
    let mut parts = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        let (op, width) = match (bytes[i], bytes.get(i + 1)) {
            (b'<', Some(b'=')) => (Some(Comparison::LessEq), 2),
            (b'>', Some(b'=')) => (Some(Comparison::GreaterEq), 2),
            (b'<', _) => (Some(Comparison::Less), 1),
            (b'>', _) => (Some(Comparison::Greater), 1),
            _ => (None, 1),
        };
        if let Some(op) = op {
            parts.push((&text[start..i], Some(op)));
            start = i + width;
        }
        i += width;
    }
    parts.push((&text[start..], None));
    parts
}

impl Domain {
    pub fn all() -> Domain {
        Domain {
            source: "true".into(),
            clauses: Vec::new(),
        }
    }

    pub fn parse<S: AsRef<str>>(source: &str, coords: &[S]) -> Result<Domain, ExprError> {
        let trimmed = source.trim();
        if trimmed.is_empty() || trimmed == "true" || trimmed == "all" {
            return Ok(Domain::all());
        }
        let mut clauses = Vec::new();
        for conjunct in trimmed.split("&&") {
            let chain = split_comparisons(conjunct);
            if chain.len() < 2 {
                return Err(ExprError::Syntax {
                    offset: 0,
                    message: format!("`{}` is not a comparison", conjunct.trim()),
                });
            }
            let exprs = chain
                .iter()
                .map(|(text, _)| parse(text, coords))
                .collect::<Result<Vec<_>, _>>()?;
            for (k, (_, op)) in chain.iter().enumerate() {
                if let Some(op) = op {
                    clauses.push(Clause {
                        lhs: exprs[k].clone(),
                        op: *op,
                        rhs: exprs[k + 1].clone(),
                    });
                }
            }
        }
        Ok(Domain {
            source: trimmed.to_string(),
            clauses,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_all(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Points where a clause cannot be evaluated are outside the domain.
    pub fn contains(&self, point: &[f64]) -> bool {
        self.clauses
            .iter()
            .all(|c| match (c.lhs.eval(point), c.rhs.eval(point)) {
                (Ok(l), Ok(r)) => c.op.holds(l, r),
                _ => false,
            })
    }

    /// Conjunction with `other`, whose coordinates are shifted by `offset`.
    /// Coordinate names are preserved across the shift, so the textual form
    /// stays valid in the combined chart.
    pub fn and_shifted(&self, other: &Domain, offset: usize) -> Domain {
        let shift = |i: usize| i + offset;
        let mut clauses = self.clauses.clone();
        clauses.extend(other.clauses.iter().map(|c| Clause {
            lhs: c.lhs.remap(&shift),
            op: c.op,
            rhs: c.rhs.remap(&shift),
        }));
        let source = match (self.is_all(), other.is_all()) {
            (true, true) => "true".to_string(),
            (false, true) => self.source.clone(),
            (true, false) => other.source.clone(),
            (false, false) => format!("{} && {}", self.source, other.source),
        };
        Domain { source, clauses }
    }
}
