use std::f64::consts::PI;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{Anchors, CatalogEntry, CheckKind, CompletenessSeed, ConformalPair, GeodesicSeed, Registered, SolitonSpec};
use crate::expr::{parse, Expr};
use crate::geometry::{pullback_metric, MetricField, Signature};
use crate::sampling::SamplingPlan;
use crate::soliton::{ConformalSpec, PotentialSplit, StructureConstants};
use crate::warped::WarpedProduct;
use crate::{Error, Result};

use CheckKind::*;

/// Chart margin keeping polar angles away from the coordinate singularities.
pub const ANGLE_MARGIN: f64 = 1e-3;

pub(super) static REGISTRY: &[Registered] = &[
    Registered {
        name: "semi_euclidean",
        description: "flat R^n with index eps and the quadratic conformal field -(b/2) sum eps_j x_j^2 + A.x + A_last",
        defaults: || json!({"n": 2, "eps": 0, "b": 1.0, "A": null, "A_last": 0.0}),
        build: semi_euclidean,
    },
    Registered {
        name: "sphere_round",
        description: "round n-sphere of radius r in polar angles, height function cos(theta1)",
        defaults: || json!({"n": 2, "r": 1.0}),
        build: sphere_round,
    },
    Registered {
        name: "pseudosphere_chart",
        description: "S^2_2 of curvature c as -(1/c)(dr^2 + sinh(r)^2 dpsi^2), pulled back from R^3_2",
        defaults: || json!({"c": 1.0}),
        build: pseudosphere_chart,
    },
    Registered {
        name: "hyperbolic_chart",
        description: "hyperbolic plane H^2(-1) as the upper half-plane or the upper hyperboloid sheet",
        defaults: || json!({"model": "half_plane"}),
        build: hyperbolic_chart,
    },
    Registered {
        name: "exp_warp",
        description: "sigma dt^2 + A^2 exp(2 sqrt|a| t) sigma du^2 with sigma = -sgn a; Einstein with c = 0",
        defaults: || json!({"a": -1.0, "A": 1.0}),
        build: exp_warp,
    },
    Registered {
        name: "cosh_warp",
        description: "sigma dt^2 + (c/a) cosh(sqrt|a| t + B)^2 sigma du^2 with sigma = -sgn a; needs c/a > 0",
        defaults: || json!({"a": -1.0, "c": -1.0, "B": 0.0}),
        build: cosh_warp,
    },
    Registered {
        name: "flagship_soliton",
        description: "dt^2 + cosh(t)^2 du^2 with f = cosh(t) exp(u), lambda = f - 1 (fiber-dependent)",
        defaults: || json!({}),
        build: flagship_soliton,
    },
    Registered {
        name: "base_only_soliton",
        description: "dt^2 + exp(2t) du^2 with f = exp(t), lambda = exp(t) - 1 (base-only)",
        defaults: || json!({}),
        build: base_only_soliton,
    },
    Registered {
        name: "brinkmann_improper",
        description: "base du dv (v > -2), h = 2 + v, fiber dw^2, beta = u, phi = -w^2/2, b = 1, lambda = 0",
        defaults: || json!({}),
        build: brinkmann_improper,
    },
    Registered {
        name: "been_busemann",
        description: "dx^2 - exp(2x) dy^2, geodesically incomplete along null geodesics",
        defaults: || json!({}),
        build: been_busemann,
    },
    Registered {
        name: "parallel_gradient_warp",
        description: "flat (x, y) base with x > -2, h = 2 + x, fiber dw^2",
        defaults: || json!({}),
        build: parallel_gradient_warp,
    },
    Registered {
        name: "hyperbolic_flat_warp",
        description: "half-plane base warped by (1 + x^2 + y^2)/(2y) over a flat 2-dimensional fiber",
        defaults: || json!({}),
        build: hyperbolic_flat_warp,
    },
];

fn params<T: DeserializeOwned>(name: &str, v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::InvalidInput(format!("`{name}` parameters: {e}")))
}

fn out_of_range(name: &str, msg: &str) -> Error {
    Error::InvalidInput(format!("`{name}`: {msg}"))
}

/// Literal for embedding in expression source; negatives are parenthesized.
fn lit(x: f64) -> String {
    if x < 0.0 {
        format!("({x})")
    } else {
        format!("{x}")
    }
}

fn plan(bounds: &[[f64; 2]]) -> SamplingPlan {
    SamplingPlan::new(bounds.to_vec())
}

fn line(coord: &str, component: &str, domain: &str) -> Result<MetricField> {
    MetricField::diagonal(&[coord], &[component], domain, "")
}

fn sign_of(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SemiEuclidean {
    n: usize,
    eps: usize,
    b: f64,
    #[serde(rename = "A")]
    a: Option<Vec<f64>>,
    #[serde(rename = "A_last")]
    a_last: f64,
}

fn semi_euclidean(v: &Value) -> Result<CatalogEntry> {
    let name = "semi_euclidean";
    let p: SemiEuclidean = params(name, v)?;
    if p.n == 0 || p.eps > p.n {
        return Err(out_of_range(name, "need n >= 1 and 0 <= eps <= n"));
    }
    let a = p.a.unwrap_or_else(|| vec![0.0; p.n]);
    if a.len() != p.n {
        return Err(out_of_range(name, "A must have n components"));
    }
    let coords: Vec<String> = (1..=p.n).map(|i| format!("x{i}")).collect();
    let refs: Vec<&str> = coords.iter().map(String::as_str).collect();
    let signs = Signature::new(p.n, p.eps).signs();
    let diag: Vec<String> = signs.iter().map(|s| lit(*s)).collect();
    let diag: Vec<&str> = diag.iter().map(String::as_str).collect();
    let metric = MetricField::diagonal(&refs, &diag, "true", &format!("R^{}_{}", p.n, p.eps))?;
    let mut terms = vec![format!("-({}/2)*(", lit(p.b))];
    let quad: Vec<String> = signs
        .iter()
        .zip(&coords)
        .map(|(s, x)| format!("{}*{x}^2", lit(*s)))
        .collect();
    terms.push(quad.join(" + "));
    terms.push(")".into());
    for (ai, x) in a.iter().zip(&coords) {
        terms.push(format!(" + {}*{x}", lit(*ai)));
    }
    terms.push(format!(" + {}", lit(p.a_last)));
    let phi = parse(&terms.concat(), &refs)?;
    let params = json!({"n": p.n, "eps": p.eps, "b": p.b, "A": a, "A_last": p.a_last});
    let mut e = CatalogEntry::new(
        name,
        REGISTRY[0].description,
        params,
        metric,
        plan(&vec![[-2.0, 2.0]; p.n]),
    )
    .checks(&[Sc, Einstein, Bochner, Geodesic]);
    e.conformal = Some(ConformalPair {
        phi,
        spec: ConformalSpec { c: 0.0, b: p.b },
    });
    e.einstein = Some(0.0);
    e.geodesic = Some(GeodesicSeed {
        p0: vec![0.0; p.n],
        v0: (0..p.n).map(|i| 1.0 / (i + 1) as f64).collect(),
        horizon: 20.0,
        blow_up_at: None,
    });
    Ok(e)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SphereRound {
    n: usize,
    r: f64,
}

fn sphere_round(v: &Value) -> Result<CatalogEntry> {
    let name = "sphere_round";
    let p: SphereRound = params(name, v)?;
    if p.n < 2 || !(p.r > 0.0) {
        return Err(out_of_range(name, "need n >= 2 and r > 0"));
    }
    let angles: Vec<String> = if p.n == 2 {
        vec!["theta".into()]
    } else {
        (1..p.n).map(|i| format!("theta{i}")).collect()
    };
    let mut coords = angles.clone();
    coords.push("phi".into());
    let refs: Vec<&str> = coords.iter().map(String::as_str).collect();
    let r2 = lit(p.r * p.r);
    let mut diag = Vec::with_capacity(p.n);
    let mut prefix = String::new();
    for a in &angles {
        diag.push(format!("{r2}{prefix}"));
        prefix.push_str(&format!("*sin({a})^2"));
    }
    diag.push(format!("{r2}{prefix}"));
    let diag: Vec<&str> = diag.iter().map(String::as_str).collect();
    let lo = ANGLE_MARGIN;
    let hi = PI - ANGLE_MARGIN;
    let domain: Vec<String> = angles.iter().map(|a| format!("{lo} < {a} < {hi}")).collect();
    let metric = MetricField::diagonal(&refs, &diag, &domain.join(" && "), &format!("S^{}({})", p.n, p.r))?;
    let mut bounds = vec![[lo, hi]; p.n - 1];
    bounds.push([-PI, PI]);
    let c = 1.0 / (p.r * p.r);
    let mut e = CatalogEntry::new(
        name,
        REGISTRY[1].description,
        json!({"n": p.n, "r": p.r}),
        metric,
        plan(&bounds),
    )
    .checks(&[Sc, Einstein, ConformalConstants, Bochner, Geodesic]);
    e.conformal = Some(ConformalPair {
        phi: parse(&format!("cos({})", angles[0]), &refs)?,
        spec: ConformalSpec { c, b: 0.0 },
    });
    e.einstein = Some(c);
    let mut p0 = vec![PI / 2.0; p.n - 1];
    p0.push(0.0);
    let mut v0 = vec![0.0; p.n];
    v0[p.n - 1] = 1.0 / p.r;
    e.geodesic = Some(GeodesicSeed {
        p0,
        v0,
        horizon: 20.0,
        blow_up_at: None,
    });
    Ok(e)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Curvature {
    c: f64,
}

fn pseudosphere_chart(v: &Value) -> Result<CatalogEntry> {
    let name = "pseudosphere_chart";
    let p: Curvature = params(name, v)?;
    if !(p.c > 0.0) {
        return Err(out_of_range(name, "need c > 0"));
    }
    let coords = ["r", "psi"];
    let s = lit(1.0 / p.c.sqrt());
    let emb = [
        format!("{s}*sinh(r)*cos(psi)"),
        format!("{s}*sinh(r)*sin(psi)"),
        format!("{s}*cosh(r)"),
    ]
    .iter()
    .map(|src| parse(src, &coords))
    .collect::<std::result::Result<Vec<_>, _>>()?;
    let metric = pullback_metric(&emb, Signature::new(3, 2), &coords, "r > 0", &format!("S^2_2({})", p.c))?;
    let mut e = CatalogEntry::new(
        name,
        REGISTRY[2].description,
        json!({"c": p.c}),
        metric,
        plan(&[[0.1, 2.0], [-PI, PI]]),
    )
    .checks(&[Sc, Einstein, ConformalConstants, Bochner]);
    e.conformal = Some(ConformalPair {
        phi: emb[2].clone(),
        spec: ConformalSpec { c: p.c, b: 0.0 },
    });
    e.einstein = Some(p.c);
    Ok(e)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Hyperbolic {
    model: String,
}

fn hyperbolic_chart(v: &Value) -> Result<CatalogEntry> {
    let name = "hyperbolic_chart";
    let p: Hyperbolic = params(name, v)?;
    let (metric, phi, bounds, seed) = match p.model.as_str() {
        "half_plane" => {
            let coords = ["x", "y"];
            let g = MetricField::diagonal(&coords, &["1/y^2", "1/y^2"], "y > 0", "H^2 half-plane")?;
            let phi = parse("(1 + x^2 + y^2)/(2*y)", &coords)?;
            let seed = GeodesicSeed {
                p0: vec![0.0, 1.0],
                v0: vec![0.15, 0.2],
                horizon: 20.0,
                blow_up_at: None,
            };
            (g, phi, [[-2.0, 2.0], [0.2, 3.0]], seed)
        }
        "hyperboloid" => {
            let coords = ["r", "psi"];
            let emb = ["cosh(r)", "sinh(r)*cos(psi)", "sinh(r)*sin(psi)"]
                .iter()
                .map(|src| parse(src, &coords))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let g = pullback_metric(&emb, Signature::new(3, 1), &coords, "r > 0", "H^2 hyperboloid")?;
            let seed = GeodesicSeed {
                p0: vec![1.0, 0.0],
                v0: vec![0.0, 0.5 / 1.0f64.sinh()],
                horizon: 20.0,
                blow_up_at: None,
            };
            (g, emb[0].clone(), [[0.1, 2.0], [-PI, PI]], seed)
        }
        other => {
            return Err(out_of_range(
                name,
                &format!("model must be `half_plane` or `hyperboloid`, not `{other}`"),
            ))
        }
    };
    let mut e = CatalogEntry::new(
        name,
        REGISTRY[3].description,
        json!({"model": p.model}),
        metric,
        plan(&bounds),
    )
    .checks(&[Sc, Einstein, ConformalConstants, Bochner, Geodesic]);
    e.conformal = Some(ConformalPair {
        phi,
        spec: ConformalSpec { c: -1.0, b: 0.0 },
    });
    e.einstein = Some(-1.0);
    e.geodesic = Some(seed);
    Ok(e)
}

/// One-dimensional base and fiber, both with metric sign σ = −sgn a.
fn one_dimensional_warp(a: f64, h: &str) -> Result<WarpedProduct> {
    let sigma = lit(-sign_of(a));
    WarpedProduct::parse(line("t", &sigma, "true")?, line("u", &sigma, "true")?, h)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpWarp {
    a: f64,
    #[serde(rename = "A")]
    amplitude: f64,
}

/// Warping function A e^{√|a| t}.
pub fn exp_warp_h(a: f64, amplitude: f64) -> Expr {
    Expr::Const(amplitude) * (Expr::Const(a.abs().sqrt()) * Expr::var(0)).exp()
}

/// Warping function √(c/a) cosh(√|a| t + B).
pub fn cosh_warp_h(a: f64, c: f64, shift: f64) -> Expr {
    Expr::Const((c / a).sqrt()) * (Expr::Const(a.abs().sqrt()) * Expr::var(0) + Expr::Const(shift)).cosh()
}

fn exp_warp(v: &Value) -> Result<CatalogEntry> {
    let name = "exp_warp";
    let p: ExpWarp = params(name, v)?;
    if p.a == 0.0 || !p.a.is_finite() || !(p.amplitude > 0.0) {
        return Err(out_of_range(name, "need a != 0 and A > 0"));
    }
    let k = p.a.abs().sqrt();
    let sigma = -sign_of(p.a);
    let base = line("t", &lit(sigma), "true")?;
    let fiber = line("u", &lit(sigma), "true")?;
    let wp = WarpedProduct::new(base, fiber, exp_warp_h(p.a, p.amplitude))?;
    let coords = wp.product_metric().coords().to_vec();
    let f = parse(&format!("{}*exp({}*t)", lit(p.amplitude / k), lit(k)), &coords)?;
    let lambda = Expr::Const(p.a) * (Expr::ONE - f.clone());
    let mut e = CatalogEntry::warped(
        name,
        REGISTRY[4].description,
        json!({"a": p.a, "A": p.amplitude}),
        wp,
        plan(&[[-2.0, 2.0], [-2.0, 2.0]]),
    )
    .checks(&[Einstein, CrossCheck, Sc, Soliton, BaseOnly, ConformalConstants, Bochner]);
    e.constants = Some(StructureConstants {
        a: p.a,
        c: 0.0,
        a0: Some(0.0),
        b: None,
    });
    e.einstein = Some(p.a);
    e.conformal = Some(ConformalPair {
        phi: f.clone(),
        spec: ConformalSpec { c: p.a, b: 0.0 },
    });
    e.soliton = Some(SolitonSpec { f, lambda });
    Ok(e)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoshWarp {
    a: f64,
    c: f64,
    #[serde(rename = "B")]
    shift: f64,
}

fn cosh_warp(v: &Value) -> Result<CatalogEntry> {
    let name = "cosh_warp";
    let p: CoshWarp = params(name, v)?;
    if p.a == 0.0 || !(p.c / p.a > 0.0) || !p.shift.is_finite() {
        return Err(out_of_range(name, "need a != 0 and c of the same sign as a"));
    }
    let sigma = -sign_of(p.a);
    let base = line("t", &lit(sigma), "true")?;
    let fiber = line("u", &lit(sigma), "true")?;
    let wp = WarpedProduct::new(base, fiber, cosh_warp_h(p.a, p.c, p.shift))?;
    let coords = wp.product_metric().coords().to_vec();
    let mut e = CatalogEntry::warped(
        name,
        REGISTRY[5].description,
        json!({"a": p.a, "c": p.c, "B": p.shift}),
        wp,
        plan(&[[-2.0, 2.0], [-2.0, 2.0]]),
    )
    .checks(&[Einstein, CrossCheck, Bochner, Completeness]);
    e.constants = Some(StructureConstants {
        a: p.a,
        c: p.c,
        ..Default::default()
    });
    e.einstein = Some(p.a);
    e.bochner_field = Some(parse("cosh(t)*u^2 + sin(t*u)", &coords)?);
    e.completeness = Some(CompletenessSeed {
        p0: vec![0.0],
        expect_incomplete: false,
    });
    Ok(e)
}

fn flagship_soliton(_: &Value) -> Result<CatalogEntry> {
    let name = "flagship_soliton";
    let wp = one_dimensional_warp(-1.0, "cosh(t)")?;
    let coords = wp.product_metric().coords().to_vec();
    let f = parse("cosh(t)*exp(u)", &coords)?;
    let lambda = parse("cosh(t)*exp(u) - 1", &coords)?;
    let mut e = CatalogEntry::warped(
        name,
        REGISTRY[6].description,
        json!({}),
        wp,
        plan(&[[-2.0, 2.0], [-2.0, 2.0]]),
    )
    .checks(&[
        Soliton,
        FiberDependent,
        Einstein,
        ConformalConstants,
        CrossCheck,
        Sc,
        Bochner,
    ]);
    e.constants = Some(StructureConstants {
        a: -1.0,
        b: Some(-1.0),
        c: -1.0,
        a0: Some(0.0),
    });
    e.einstein = Some(-1.0);
    e.conformal = Some(ConformalPair {
        phi: f.clone(),
        spec: ConformalSpec { c: -1.0, b: 0.0 },
    });
    e.soliton = Some(SolitonSpec { f, lambda });
    e.anchors = Some(Anchors {
        fiber: vec![0.0],
        base: vec![0.0],
    });
    Ok(e)
}

fn base_only_soliton(_: &Value) -> Result<CatalogEntry> {
    let name = "base_only_soliton";
    let wp = one_dimensional_warp(-1.0, "exp(t)")?;
    let coords = wp.product_metric().coords().to_vec();
    let f = parse("exp(t)", &coords)?;
    let lambda = parse("exp(t) - 1", &coords)?;
    let mut e = CatalogEntry::warped(
        name,
        REGISTRY[7].description,
        json!({}),
        wp,
        plan(&[[-2.0, 2.0], [-2.0, 2.0]]),
    )
    .checks(&[Soliton, BaseOnly, Einstein, ConformalConstants, CrossCheck, Sc, Bochner]);
    e.constants = Some(StructureConstants {
        a: -1.0,
        b: None,
        c: 0.0,
        a0: Some(0.0),
    });
    e.einstein = Some(-1.0);
    e.conformal = Some(ConformalPair {
        phi: f.clone(),
        spec: ConformalSpec { c: -1.0, b: 0.0 },
    });
    e.soliton = Some(SolitonSpec { f, lambda });
    Ok(e)
}

fn brinkmann_improper(_: &Value) -> Result<CatalogEntry> {
    let name = "brinkmann_improper";
    let base = MetricField::parse(&["u", "v"], &[(0, 1, "1")], "v > -2", "")?;
    let wp = WarpedProduct::parse(base, line("w", "1", "true")?, "2 + v")?;
    let coords = wp.product_metric().coords().to_vec();
    let split = PotentialSplit {
        beta: parse("u", &["u", "v"])?,
        phi: parse("-w^2/2", &["w"])?,
        anchor: vec![0.0],
    };
    let f = parse("u - (2 + v)*w^2/2", &coords)?;
    let mut e = CatalogEntry::warped(
        name,
        REGISTRY[8].description,
        json!({}),
        wp,
        plan(&[[-1.0, 1.0], [-1.5, 1.5], [-1.0, 1.0]]),
    )
    .checks(&[Improper, Soliton, CrossCheck, Bochner, Completeness]);
    e.constants = Some(StructureConstants {
        a: 0.0,
        b: Some(1.0),
        c: 0.0,
        a0: None,
    });
    e.soliton = Some(SolitonSpec { f, lambda: Expr::ZERO });
    e.split = Some(split);
    e.completeness = Some(CompletenessSeed {
        p0: vec![0.0, 0.0],
        expect_incomplete: true,
    });
    Ok(e)
}

fn been_busemann(_: &Value) -> Result<CatalogEntry> {
    let name = "been_busemann";
    let wp = WarpedProduct::parse(line("x", "1", "true")?, line("y", "-1", "true")?, "exp(x)")?;
    let coords = wp.product_metric().coords().to_vec();
    let mut e = CatalogEntry::warped(
        name,
        REGISTRY[9].description,
        json!({}),
        wp,
        plan(&[[-2.0, 2.0], [-2.0, 2.0]]),
    )
    .checks(&[Einstein, CrossCheck, Bochner, Geodesic]);
    e.constants = Some(StructureConstants {
        a: -1.0,
        c: 0.0,
        ..Default::default()
    });
    e.einstein = Some(-1.0);
    e.bochner_field = Some(parse("x^2*y + exp(y)", &coords)?);
    e.geodesic = Some(GeodesicSeed {
        p0: vec![0.0, 0.0],
        v0: vec![-1.0, 1.0],
        horizon: 2.0,
        blow_up_at: Some(1.0),
    });
    Ok(e)
}

fn parallel_gradient_warp(_: &Value) -> Result<CatalogEntry> {
    let name = "parallel_gradient_warp";
    let base = MetricField::diagonal(&["x", "y"], &["1", "1"], "x > -2", "")?;
    let wp = WarpedProduct::parse(base, line("w", "1", "true")?, "2 + x")?;
    let coords = wp.product_metric().coords().to_vec();
    let mut e = CatalogEntry::warped(
        name,
        REGISTRY[10].description,
        json!({}),
        wp,
        plan(&[[-1.5, 2.0], [-2.0, 2.0], [-2.0, 2.0]]),
    )
    .checks(&[Einstein, CrossCheck, Bochner, Completeness]);
    e.constants = Some(StructureConstants {
        a: 0.0,
        c: 1.0,
        ..Default::default()
    });
    e.einstein = Some(0.0);
    e.bochner_field = Some(parse("x*y*w + exp(w)*y", &coords)?);
    e.completeness = Some(CompletenessSeed {
        p0: vec![0.0, 0.0],
        expect_incomplete: true,
    });
    Ok(e)
}

fn hyperbolic_flat_warp(_: &Value) -> Result<CatalogEntry> {
    let name = "hyperbolic_flat_warp";
    let base = MetricField::diagonal(&["x", "y"], &["1/y^2", "1/y^2"], "y > 0", "")?;
    let fiber = MetricField::diagonal(&["w1", "w2"], &["1", "1"], "true", "")?;
    let wp = WarpedProduct::parse(base, fiber, "(1 + x^2 + y^2)/(2*y)")?;
    let coords = wp.product_metric().coords().to_vec();
    let mut e = CatalogEntry::warped(
        name,
        REGISTRY[11].description,
        json!({}),
        wp,
        plan(&[[-1.0, 1.0], [0.3, 2.0], [-1.0, 1.0], [-1.0, 1.0]]),
    )
    .checks(&[CrossCheck, Bochner]);
    e.bochner_field = Some(parse("x*w1 + (1 + x^2 + y^2)/(2*y)*(w1^2 - w2) + y^2", &coords)?);
    Ok(e)
}
