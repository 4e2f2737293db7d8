use serde::{Deserialize, Serialize};

use crate::geometry::{MetricField, LIGHTLIKE_TOLERANCE};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub s: f64,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GeodesicStatus {
    Completed,
    /// The geodesic is not extendable past s* ∈ [s_star, s_star + width].
    BlowUp {
        s_star: f64,
        width: f64,
    },
    LeftDomain {
        s_star: f64,
        width: f64,
    },
}

impl GeodesicStatus {
    pub fn s_star(&self) -> Option<f64> {
        match self {
            GeodesicStatus::Completed => None,
            GeodesicStatus::BlowUp { s_star, .. } | GeodesicStatus::LeftDomain { s_star, .. } => Some(*s_star),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub s: f64,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub norm_sq: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicOptions {
    /// Nominal step, also the ceiling for regrowth after halving.
    pub step: f64,
    /// Local error target for step doubling, mixed absolute/relative.
    pub tolerance: f64,
    pub max_halvings: u32,
    pub blow_up_norm: f64,
    pub max_rows: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            step: 1e-2,
            tolerance: 1e-11,
            max_halvings: 30,
            blow_up_norm: 1e8,
            max_rows: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicResult {
    pub status: GeodesicStatus,
    pub end: GeodesicState,
    pub norm_sq0: f64,
    pub max_norm_drift: f64,
    /// Drift divided by |norm_sq0|; equal to the absolute drift for null
    /// initial data.
    pub relative_norm_drift: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub trajectory: Vec<TrajectoryRow>,
}

struct System<'a> {
    g: &'a MetricField,
    n: usize,
}

impl System<'_> {
    fn rhs(&self, y: &[f64]) -> Result<Vec<f64>> {
        let (x, v) = y.split_at(self.n);
        let acc = self.g.christoffel(x)?.acceleration(v);
        let mut out = v.to_vec();
        out.extend(acc);
        Ok(out)
    }

    fn rk4(&self, y: &[f64], h: f64) -> Result<Vec<f64>> {
        let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, d)| x + s * d).collect() };
        let k1 = self.rhs(y)?;
        let k2 = self.rhs(&axpy(y, 0.5 * h, &k1))?;
        let k3 = self.rhs(&axpy(y, 0.5 * h, &k2))?;
        let k4 = self.rhs(&axpy(y, h, &k3))?;
        let next: Vec<f64> = (0..y.len())
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite state".into()));
        }
        // The end point must itself be a valid chart point.
        self.g.metric_at(&next[..self.n])?;
        Ok(next)
    }

    fn norm_sq(&self, y: &[f64]) -> Result<f64> {
        let (x, v) = y.split_at(self.n);
        Ok(self.g.metric_at(x)?.components.apply(v, v))
    }
}

enum StepFailure {
    Chart,
    Accuracy,
}

/// Integrate ẍ^k + Γ^k_ij ẋ^i ẋ^j = 0 from (p₀, v₀) over [0, T].
pub fn geodesic(
    g: &MetricField,
    p0: &[f64],
    v0: &[f64],
    horizon: f64,
    opts: &GeodesicOptions,
) -> Result<GeodesicResult> {
    let n = g.dim();
    if p0.len() != n || v0.len() != n {
        return Err(Error::InvalidInput(format!("p0 and v0 need {n} components")));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() || !(opts.step > 0.0) {
        return Err(Error::InvalidInput("need a finite T >= 0 and step > 0".into()));
    }
    let sys = System { g, n };
    let mut y: Vec<f64> = p0.iter().chain(v0).copied().collect();
    let norm_sq0 = sys.norm_sq(&y)?;
    let mut s = 0.0;
    let mut level = 0u32;
    let mut drift = 0.0f64;
    let mut rows = vec![row(0.0, &y, n, norm_sq0)];
    let (mut accepted, mut rejected) = (0usize, 0usize);

    let status = loop {
        if s >= horizon {
            break GeodesicStatus::Completed;
        }
        if y.iter().map(|x| x * x).sum::<f64>().sqrt() > opts.blow_up_norm {
            break GeodesicStatus::BlowUp {
                s_star: s,
                width: opts.step * 0.5f64.powi(level as i32),
            };
        }
        let h = (opts.step * 0.5f64.powi(level as i32)).min(horizon - s);
        match attempt(&sys, &y, h, opts.tolerance) {
            Ok((next, err)) => {
                s = if h == horizon - s { horizon } else { s + h };
                y = next;
                accepted += 1;
                let nsq = sys.norm_sq(&y)?;
                drift = drift.max((nsq - norm_sq0).abs());
                rows.push(row(s, &y, n, nsq));
                if err < 1.0 / 32.0 && level > 0 {
                    level -= 1;
                }
            }
            Err(kind) => {
                rejected += 1;
                level += 1;
                if level > opts.max_halvings {
                    let width = 2.0 * h;
                    break match kind {
                        StepFailure::Chart => GeodesicStatus::LeftDomain { s_star: s, width },
                        StepFailure::Accuracy => GeodesicStatus::BlowUp { s_star: s, width },
                    };
                }
            }
        }
    };

    let relative = if norm_sq0.abs() > LIGHTLIKE_TOLERANCE {
        drift / norm_sq0.abs()
    } else {
        drift
    };
    Ok(GeodesicResult {
        status,
        end: GeodesicState {
            s,
            position: y[..n].to_vec(),
            velocity: y[n..].to_vec(),
        },
        norm_sq0,
        max_norm_drift: drift,
        relative_norm_drift: relative,
        accepted_steps: accepted,
        rejected_steps: rejected,
        trajectory: decimate(rows, opts.max_rows),
    })
}

/// One full step against two half steps; returns the half-step result and
/// the scaled error estimate.
fn attempt(sys: &System<'_>, y: &[f64], h: f64, tol: f64) -> Result<(Vec<f64>, f64), StepFailure> {
    let full = sys.rk4(y, h).map_err(|_| StepFailure::Chart)?;
    let mid = sys.rk4(y, 0.5 * h).map_err(|_| StepFailure::Chart)?;
    let two = sys.rk4(&mid, 0.5 * h).map_err(|_| StepFailure::Chart)?;
    let err = full
        .iter()
        .zip(&two)
        .map(|(a, b)| (a - b).abs() / 15.0 / (tol * (1.0 + b.abs())))
        .fold(0.0, f64::max);
    if err > 1.0 {
        return Err(StepFailure::Accuracy);
    }
    Ok((two, err))
}

fn row(s: f64, y: &[f64], n: usize, norm_sq: f64) -> TrajectoryRow {
    TrajectoryRow {
        s,
        position: y[..n].to_vec(),
        velocity: y[n..].to_vec(),
        norm_sq,
    }
}

fn decimate(rows: Vec<TrajectoryRow>, max_rows: usize) -> Vec<TrajectoryRow> {
    if rows.len() <= max_rows || max_rows < 2 {
        return rows;
    }
    let stride = (rows.len() - 1) / (max_rows - 1) + 1;
    let last = rows.len() - 1;
    rows.into_iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i == last)
        .map(|(_, r)| r)
        .collect()
}
