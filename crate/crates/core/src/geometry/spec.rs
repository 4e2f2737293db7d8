use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{packed, packed_len, MetricField};
use crate::expr::{self, Domain, Expr};
use crate::{Error, Result};

/// JSON form of a metric. Components are keyed `"i,j"`; omitted entries are
/// zero and `"j,i"` may be used in place of `"i,j"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub coords: Vec<String>,
    pub components: BTreeMap<String, String>,
    #[serde(default = "default_domain")]
    pub domain: String,
    #[serde(default)]
    pub label: String,
}

fn default_domain() -> String {
    "true".into()
}

fn parse_key(key: &str, n: usize) -> Result<(usize, usize)> {
    let bad = || Error::InvalidInput(format!("component key `{key}` is not `i,j` with i, j < {n}"));
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    let i: usize = a.trim().parse().map_err(|_| bad())?;
    let j: usize = b.trim().parse().map_err(|_| bad())?;
    if i >= n || j >= n {
        return Err(bad());
    }
    Ok((i, j))
}

impl MetricSpec {
    pub fn build(&self) -> Result<MetricField> {
        let n = self.coords.len();
        let mut comps = vec![None::<Expr>; packed_len(n)];
        for (key, src) in &self.components {
            let (i, j) = parse_key(key, n)?;
            let slot = &mut comps[packed(n, i, j)];
            if slot.is_some() {
                return Err(Error::InvalidInput(format!("component ({i},{j}) given twice")));
            }
            *slot = Some(expr::parse(src, &self.coords)?);
        }
        let comps = comps.into_iter().map(|c| c.unwrap_or(Expr::ZERO)).collect();
        let domain = Domain::parse(&self.domain, &self.coords)?;
        MetricField::new(self.coords.clone(), comps, domain, self.label.clone())
    }
}

impl MetricField {
    pub fn to_spec(&self) -> MetricSpec {
        let n = self.dim();
        let mut components = BTreeMap::new();
        for i in 0..n {
            for j in i..n {
                let c = self.component(i, j);
                if !c.is_zero() {
                    components.insert(format!("{i},{j}"), c.display(self.coords()).to_string());
                }
            }
        }
        MetricSpec {
            coords: self.coords().to_vec(),
            components,
            domain: self.domain().source().to_string(),
            label: self.label().to_string(),
        }
    }

    pub fn from_spec(spec: &MetricSpec) -> Result<MetricField> {
        spec.build()
    }
}
