//! Registry of model spaces and soliton instances, each bundled with the
//! constants it is expected to satisfy and the checks it must pass.

mod entries;
mod height;

pub use height::{height_combinations, height_zero_classification, HeightFunctionSpec, HeightZeroResult, QuadricKind};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::expr::Expr;
use crate::geometry::{MetricField, MetricSpec};
use crate::sampling::SamplingPlan;
use crate::soliton::{ConformalSpec, PotentialSplit, StructureConstants};
use crate::warped::{WarpedProduct, WarpedProductSpec};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Soliton,
    FiberDependent,
    BaseOnly,
    Improper,
    Sc,
    Einstein,
    ConformalConstants,
    Bochner,
    CrossCheck,
    Geodesic,
    Completeness,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Soliton => "soliton",
            CheckKind::FiberDependent => "fiber_dependent",
            CheckKind::BaseOnly => "base_only",
            CheckKind::Improper => "improper",
            CheckKind::Sc => "sc",
            CheckKind::Einstein => "einstein",
            CheckKind::ConformalConstants => "conformal_constants",
            CheckKind::Bochner => "bochner",
            CheckKind::CrossCheck => "cross_check",
            CheckKind::Geodesic => "geodesic",
            CheckKind::Completeness => "completeness",
        }
    }
}

/// Potential and soliton function on the entry's chart.
#[derive(Clone, Debug, PartialEq)]
pub struct SolitonSpec {
    pub f: Expr,
    pub lambda: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConformalPair {
    pub phi: Expr,
    pub spec: ConformalSpec,
}

/// Anchor points fixing the gauge of f = β + hφ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchors {
    pub fiber: Vec<f64>,
    pub base: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSeed {
    pub p0: Vec<f64>,
    pub v0: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Expected blow-up parameter; `None` means the geodesic must complete.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blow_up_at: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletenessSeed {
    /// Base point the probe shoots from.
    pub p0: Vec<f64>,
    pub expect_incomplete: bool,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub params: Value,
    /// The full chart; the product chart for warped entries.
    pub metric: MetricField,
    pub warped: Option<WarpedProduct>,
    pub soliton: Option<SolitonSpec>,
    pub conformal: Option<ConformalPair>,
    pub constants: Option<StructureConstants>,
    /// Normalized Einstein constant a with Ric = a(dim−1)g.
    pub einstein: Option<f64>,
    pub anchors: Option<Anchors>,
    /// Explicit split, for entries where it is part of the data.
    pub split: Option<PotentialSplit>,
    /// Extra scalar for the Bochner check when there is no conformal field.
    pub bochner_field: Option<Expr>,
    pub geodesic: Option<GeodesicSeed>,
    pub completeness: Option<CompletenessSeed>,
    pub sampling: SamplingPlan,
    pub checks: Vec<CheckKind>,
}

impl CatalogEntry {
    fn new(name: &str, description: &str, params: Value, metric: MetricField, sampling: SamplingPlan) -> Self {
        CatalogEntry {
            name: name.into(),
            description: description.into(),
            params,
            metric,
            warped: None,
            soliton: None,
            conformal: None,
            constants: None,
            einstein: None,
            anchors: None,
            split: None,
            bochner_field: None,
            geodesic: None,
            completeness: None,
            sampling,
            checks: Vec::new(),
        }
    }

    fn warped(name: &str, description: &str, params: Value, wp: WarpedProduct, sampling: SamplingPlan) -> Self {
        let wp = wp.with_label(name);
        let mut e = CatalogEntry::new(name, description, params, wp.product_metric().clone(), sampling);
        e.warped = Some(wp);
        e
    }

    fn checks(mut self, checks: &[CheckKind]) -> Self {
        self.checks = checks.to_vec();
        self
    }

    /// Scalar for Bochner checks: the explicit field, else the conformal
    /// field, else the potential.
    pub fn bochner_scalar(&self) -> Option<&Expr> {
        self.bochner_field
            .as_ref()
            .or(self.conformal.as_ref().map(|c| &c.phi))
            .or(self.soliton.as_ref().map(|s| &s.f))
    }

    pub fn to_doc(&self) -> EntryDoc {
        let coords = self.metric.coords();
        let show = |e: &Expr| e.display(coords).to_string();
        let (fiber_coords, base_coords) = match &self.warped {
            Some(wp) => (wp.fiber().coords().to_vec(), wp.base().coords().to_vec()),
            None => (Vec::new(), Vec::new()),
        };
        EntryDoc {
            name: self.name.clone(),
            description: self.description.clone(),
            params: self.params.clone(),
            metric: self.metric.to_spec(),
            warped: self.warped.as_ref().map(WarpedProduct::to_spec),
            soliton: self.soliton.as_ref().map(|s| SolitonDoc {
                f: show(&s.f),
                lambda: show(&s.lambda),
            }),
            conformal: self.conformal.as_ref().map(|c| ConformalDoc {
                phi: show(&c.phi),
                c: c.spec.c,
                b: c.spec.b,
            }),
            constants: self.constants,
            einstein: self.einstein,
            anchors: self.anchors.clone(),
            split: self.split.as_ref().map(|s| SplitDoc {
                beta: s.beta.display(&base_coords).to_string(),
                phi: s.phi.display(&fiber_coords).to_string(),
            }),
            bochner_field: self.bochner_field.as_ref().map(show),
            geodesic: self.geodesic.clone(),
            completeness: self.completeness.clone(),
            sampling: self.sampling.clone(),
            checks: self.checks.clone(),
        }
    }
}

/// JSON view of an entry, as printed by `catalog emit`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub name: String,
    pub description: String,
    pub params: Value,
    pub metric: MetricSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warped: Option<WarpedProductSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub soliton: Option<SolitonDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conformal: Option<ConformalDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<StructureConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub einstein: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Anchors>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bochner_field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geodesic: Option<GeodesicSeed>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub completeness: Option<CompletenessSeed>,
    pub sampling: SamplingPlan,
    pub checks: Vec<CheckKind>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonDoc {
    pub f: String,
    pub lambda: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalDoc {
    pub phi: String,
    pub c: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitDoc {
    pub beta: String,
    pub phi: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub defaults: Value,
}

type Builder = fn(&Value) -> Result<CatalogEntry>;

struct Registered {
    name: &'static str,
    description: &'static str,
    defaults: fn() -> Value,
    build: Builder,
}

fn registry() -> &'static [Registered] {
    entries::REGISTRY
}

pub fn names() -> Vec<&'static str> {
    registry().iter().map(|r| r.name).collect()
}

pub fn list() -> Vec<CatalogInfo> {
    registry()
        .iter()
        .map(|r| CatalogInfo {
            name: r.name,
            description: r.description,
            defaults: (r.defaults)(),
        })
        .collect()
}

/// Build an entry; `params` overrides the defaults key by key.
pub fn build(name: &str, params: Option<&Value>) -> Result<CatalogEntry> {
    let reg = registry()
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| Error::UnknownEntry(name.to_string()))?;
    let mut merged = (reg.defaults)();
    match params {
        None | Some(Value::Null) => {}
        Some(Value::Object(over)) => {
            let obj = merged.as_object_mut().expect("defaults are objects");
            for (k, v) in over {
                if !obj.contains_key(k) {
                    return Err(Error::InvalidInput(format!("`{name}` has no parameter `{k}`")));
                }
                obj.insert(k.clone(), v.clone());
            }
        }
        Some(other) => {
            return Err(Error::InvalidInput(format!(
                "parameters must be an object, got {other}"
            )))
        }
    }
    (reg.build)(&merged)
}

/// An instance given directly in a configuration rather than by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineEntry {
    #[serde(default = "inline_name")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warped: Option<WarpedProductSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soliton: Option<SolitonDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal: Option<ConformalDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<StructureConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub einstein: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Anchors>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bochner_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geodesic: Option<GeodesicSeed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completeness: Option<CompletenessSeed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingPlan>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckKind>,
}

fn inline_name() -> String {
    "inline".into()
}

impl InlineEntry {
    pub fn build(&self) -> Result<CatalogEntry> {
        let sampling = self.sampling.clone().unwrap_or_else(|| SamplingPlan::new(Vec::new()));
        let mut e = match (&self.metric, &self.warped) {
            (Some(m), None) => CatalogEntry::new(&self.name, "", Value::Null, MetricField::from_spec(m)?, sampling),
            (None, Some(w)) => CatalogEntry::warped(&self.name, "", Value::Null, w.build()?, sampling),
            _ => {
                return Err(Error::InvalidInput(
                    "inline instance needs exactly one of `metric` and `warped`".into(),
                ))
            }
        };
        let coords = e.metric.coords().to_vec();
        let parse = |src: &str| crate::expr::parse(src, &coords).map_err(Error::from);
        if let Some(s) = &self.soliton {
            e.soliton = Some(SolitonSpec {
                f: parse(&s.f)?,
                lambda: parse(&s.lambda)?,
            });
        }
        if let Some(c) = &self.conformal {
            e.conformal = Some(ConformalPair {
                phi: parse(&c.phi)?,
                spec: ConformalSpec { c: c.c, b: c.b },
            });
        }
        if let Some(s) = &self.split {
            let wp = e
                .warped
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("`split` needs a warped instance".into()))?;
            e.split = Some(PotentialSplit {
                beta: crate::expr::parse(&s.beta, wp.base().coords())?,
                phi: crate::expr::parse(&s.phi, wp.fiber().coords())?,
                anchor: vec![0.0; wp.fiber_dim()],
            });
        }
        if let Some(b) = &self.bochner_field {
            e.bochner_field = Some(parse(b)?);
        }
        e.constants = self.constants;
        e.einstein = self.einstein;
        e.anchors = self.anchors.clone();
        e.geodesic = self.geodesic.clone();
        e.completeness = self.completeness.clone();
        e.checks = self.checks.clone();
        Ok(e)
    }
}

pub fn emit(name: &str, params: Option<&Value>) -> Result<Value> {
    Ok(serde_json::to_value(build(name, params)?.to_doc())?)
}
