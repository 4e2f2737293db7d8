//! Per-equation residual reports.
//!
//! Every checker evaluates a fixed list of equations at each sample point.
//! A line records the largest absolute residual and the largest normalized
//! residual `|lhs - rhs| / (1 + max(|lhs|, |rhs|))`, with the point where the
//! normalized maximum occurred. A line passes when its normalized maximum is
//! within tolerance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::SymTensor2;
use crate::parallel;
use crate::sampling::SamplingPlan;
use crate::Result;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual {
    pub abs: f64,
    pub scale: f64,
}

impl Residual {
    pub fn scalar(lhs: f64, rhs: f64) -> Self {
        Residual {
            abs: (lhs - rhs).abs(),
            scale: lhs.abs().max(rhs.abs()),
        }
    }

    pub fn tensor(lhs: &SymTensor2, rhs: &SymTensor2) -> Self {
        Residual {
            abs: lhs.sub(rhs).max_abs(),
            scale: lhs.max_abs().max(rhs.max_abs()),
        }
    }

    /// A quantity that should vanish, with no natural right-hand side.
    pub fn zero(value: f64) -> Self {
        Residual::scalar(value, 0.0)
    }

    pub fn normalized(&self) -> f64 {
        self.abs / (1.0 + self.scale)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualLine {
    pub label: String,
    pub max_abs: f64,
    pub max_normalized: f64,
    pub argmax_point: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub pass: bool,
    /// Largest normalized residual over all lines.
    pub max_residual: f64,
    pub argmax_point: Vec<f64>,
    pub tolerance: f64,
    pub seed: u64,
    pub samples: usize,
    pub lines: Vec<ResidualLine>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub derived: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn line(&self, label_prefix: &str) -> Option<&ResidualLine> {
        self.lines.iter().find(|l| l.label.starts_with(label_prefix))
    }

    pub fn max_abs(&self) -> f64 {
        self.lines.iter().map(|l| l.max_abs).fold(0.0, f64::max)
    }

    pub fn with_derived(mut self, key: &str, value: f64) -> Self {
        self.derived.insert(key.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Merge another report's lines into this one (used when a check has a
    /// prerequisite stage sampled separately).
    pub fn absorb(mut self, other: CheckReport) -> Self {
        self.lines.extend(other.lines);
        self.derived.extend(other.derived);
        self.notes.extend(other.notes);
        self.recompute();
        self
    }

    fn recompute(&mut self) {
        self.pass = self.lines.iter().all(|l| l.pass);
        let worst = self.lines.iter().fold(None::<&ResidualLine>, |best, l| match best {
            Some(b) if b.max_normalized >= l.max_normalized => Some(b),
            _ => Some(l),
        });
        if let Some(w) = worst {
            self.max_residual = w.max_normalized;
            self.argmax_point = w.argmax_point.clone();
        }
    }
}

/// Evaluate `eval` at every point and fold per-line maxima in sample order.
pub fn evaluate_lines<F>(
    check: &str,
    labels: &[&str],
    points: &[Vec<f64>],
    plan: &SamplingPlan,
    tolerance: f64,
    eval: F,
) -> Result<CheckReport>
where
    F: Fn(&[f64]) -> Result<Vec<Residual>> + Sync + Send,
{
    let results = parallel::map(points, plan.execution, |p| eval(p));
    let mut lines: Vec<ResidualLine> = labels
        .iter()
        .map(|l| ResidualLine {
            label: l.to_string(),
            max_abs: 0.0,
            max_normalized: 0.0,
            argmax_point: Vec::new(),
            pass: true,
        })
        .collect();
    for (p, r) in points.iter().zip(results) {
        let residuals = r?;
        debug_assert_eq!(residuals.len(), lines.len());
        for (line, res) in lines.iter_mut().zip(residuals) {
            line.max_abs = line.max_abs.max(res.abs);
            let n = res.normalized();
            if line.argmax_point.is_empty() || n > line.max_normalized || n.is_nan() {
                line.max_normalized = if n.is_nan() { f64::INFINITY } else { n };
                line.argmax_point = p.clone();
            }
        }
    }
    for line in &mut lines {
        line.pass = line.max_normalized <= tolerance;
    }
    let mut report = CheckReport {
        check: check.to_string(),
        pass: true,
        max_residual: 0.0,
        argmax_point: Vec::new(),
        tolerance,
        seed: plan.seed,
        samples: points.len(),
        lines,
        derived: BTreeMap::new(),
        notes: Vec::new(),
    };
    report.recompute();
    Ok(report)
}
