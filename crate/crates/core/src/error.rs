use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("metric is degenerate at {point:?} (|det| = {det:e} after row scaling)")]
    DegenerateMetric { point: Vec<f64>, det: f64 },
    #[error("domain violation at {point:?}: {reason}")]
    DomainViolation { point: Vec<f64>, reason: String },
    #[error("signature changes inside the chart: index {first} at {first_point:?} but {second} at {second_point:?}")]
    SignatureChange {
        first: usize,
        first_point: Vec<f64>,
        second: usize,
        second_point: Vec<f64>,
    },
    #[error("potential does not split as beta + h*phi: residual {residual:e} at {point:?}")]
    NonDecomposable { residual: f64, point: Vec<f64> },
    #[error("warping function is constant")]
    TrivialWarp,
    #[error("{what} depends on fiber coordinates")]
    FiberDependence { what: String },
    #[error("gradient of the warping function is not lightlike: |grad h|^2 = {norm_sq:e} at {point:?}")]
    NotImproper { norm_sq: f64, point: Vec<f64> },
    #[error("metric is not Einstein with the given constant: residual {residual:e} at {point:?}")]
    NotEinstein { residual: f64, point: Vec<f64> },
    #[error("Hessian is not proportional to the metric: spread {spread:e} at {point:?}")]
    NotConformal { spread: f64, point: Vec<f64> },
    #[error("quadric is empty: {0}")]
    EmptyQuadric(String),
    #[error("warping function reaches zero at t = {t}")]
    ZeroCrossing { t: f64 },
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
