use serde::{Deserialize, Serialize};

use super::WarpedProduct;
use crate::geometry::{MetricField, MetricSpec};
use crate::Result;

/// JSON form `{ "base": <metric>, "fiber": <metric or warped product>, "h": "cosh(t)" }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpedProductSpec {
    pub base: MetricSpec,
    pub fiber: FiberSpec,
    pub h: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FiberSpec {
    Warped(Box<WarpedProductSpec>),
    Metric(MetricSpec),
}

impl FiberSpec {
    pub fn build(&self) -> Result<MetricField> {
        match self {
            FiberSpec::Metric(m) => m.build(),
            FiberSpec::Warped(w) => Ok(w.build()?.product_metric().clone()),
        }
    }
}

impl WarpedProductSpec {
    pub fn build(&self) -> Result<WarpedProduct> {
        let wp = WarpedProduct::parse(self.base.build()?, self.fiber.build()?, &self.h)?;
        Ok(if self.label.is_empty() {
            wp
        } else {
            wp.with_label(self.label.clone())
        })
    }
}

impl WarpedProduct {
    pub fn to_spec(&self) -> WarpedProductSpec {
        WarpedProductSpec {
            base: self.base.to_spec(),
            fiber: FiberSpec::Metric(self.fiber.to_spec()),
            h: self.h.expr().display(self.base.coords()).to_string(),
            label: self.product.label().to_string(),
        }
    }
}
