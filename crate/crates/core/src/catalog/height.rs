use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{CausalCharacter, Signature, SymTensor2, TangentVector};
use crate::{Error, Result};

pub const HEIGHT_SAMPLES: usize = 10_000;
/// |φ_A| below this counts as a sampled zero.
pub const ZERO_WITNESS: f64 = 1e-6;
const RHO_MAX: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadricKind {
    /// ⟨x, x⟩ = r².
    Pseudosphere,
    /// ⟨x, x⟩ = −r².
    Pseudohyperbolic,
}

/// Height function x ↦ ⟨A, x⟩ on a quadric of dimension n in ℝ^{n+1}
/// with `ambient_index` negative directions (listed first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeightFunctionSpec {
    pub n: usize,
    pub ambient_index: usize,
    pub kind: QuadricKind,
    #[serde(default = "unit_radius")]
    pub radius: f64,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    /// Defaults to the sampling default seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn unit_radius() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightZeroResult {
    pub causal: CausalCharacter,
    /// The criterion: true when φ_A is predicted to have no zeros.
    pub predicted_no_zeros: bool,
    pub sampled_min_abs: f64,
    /// φ_A changes sign within one connected component of the sample.
    pub sign_change: bool,
    pub consistent: bool,
    pub samples: usize,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn height_zero_classification(spec: &HeightFunctionSpec) -> Result<HeightZeroResult> {
    let dim = spec.n + 1;
    let nu = spec.ambient_index;
    if spec.a.len() != dim {
        return Err(Error::InvalidInput(format!("A needs {dim} components")));
    }
    if spec.a.iter().all(|x| *x == 0.0) {
        return Err(Error::InvalidInput("A must be nonzero".into()));
    }
    if nu > dim || !(spec.radius > 0.0) {
        return Err(Error::InvalidInput("need ambient index <= n + 1 and radius > 0".into()));
    }
    let positive = dim - nu;
    // The factor scaled by cosh ρ must have at least one direction.
    let (cosh_dim, sinh_dim) = match spec.kind {
        QuadricKind::Pseudosphere => (positive, nu),
        QuadricKind::Pseudohyperbolic => (nu, positive),
    };
    if cosh_dim == 0 {
        return Err(Error::EmptyQuadric(format!(
            "{:?} of dimension {} in index-{nu} space",
            spec.kind, spec.n
        )));
    }
    let signature = Signature::new(dim, nu);
    let g = SymTensor2::from_fn(dim, |i, j| if i == j { signature.signs()[i] } else { 0.0 });
    let causal = TangentVector::new(spec.a.clone()).causal_character(&g);
    let predicted_no_zeros = match spec.kind {
        QuadricKind::Pseudosphere => {
            nu == spec.n && matches!(causal, CausalCharacter::Spacelike | CausalCharacter::Lightlike)
        }
        QuadricKind::Pseudohyperbolic => {
            nu == 1 && matches!(causal, CausalCharacter::Timelike | CausalCharacter::Lightlike)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or(crate::sampling::DEFAULT_SEED));
    let r = spec.radius;
    let inner = |x: &[f64]| -> f64 { g.apply(&spec.a, x) };
    let mut min_abs = f64::INFINITY;
    // Sign seen so far per component; a one-dimensional cosh factor splits
    // the quadric into the two sheets ±.
    let mut seen = [[false; 2]; 2];
    for k in 0..HEIGHT_SAMPLES {
        let rho = RHO_MAX * k as f64 / (HEIGHT_SAMPLES - 1) as f64;
        let c_dir = unit_vector(cosh_dim, &mut rng);
        let s_dir = if sinh_dim > 0 {
            unit_vector(sinh_dim, &mut rng)
        } else {
            Vec::new()
        };
        let c_part = c_dir.iter().map(|d| r * rho.cosh() * d);
        let s_part = s_dir.iter().map(|d| r * rho.sinh() * d);
        let x: Vec<f64> = match spec.kind {
            QuadricKind::Pseudosphere => s_part.chain(c_part).collect(),
            QuadricKind::Pseudohyperbolic => c_part.chain(s_part).collect(),
        };
        let v = inner(&x);
        min_abs = min_abs.min(v.abs());
        let component = usize::from(cosh_dim == 1 && c_dir[0] < 0.0);
        if v != 0.0 {
            seen[component][usize::from(v > 0.0)] = true;
        }
    }
    let sign_change = seen.iter().any(|s| s[0] && s[1]);
    let consistent = if predicted_no_zeros {
        min_abs > 0.0 && !sign_change
    } else {
        sign_change || min_abs < ZERO_WITNESS
    };
    Ok(HeightZeroResult {
        causal,
        predicted_no_zeros,
        sampled_min_abs: min_abs,
        sign_change,
        consistent,
        samples: HEIGHT_SAMPLES,
    })
}

/// All nonempty (quadric, ambient index, causal type) combinations at
/// dimension `n`, with A = e_{n+1}, e_1 or e_1 + e_{n+1}.
pub fn height_combinations(n: usize) -> Vec<HeightFunctionSpec> {
    let dim = n + 1;
    let mut out = Vec::new();
    for kind in [QuadricKind::Pseudosphere, QuadricKind::Pseudohyperbolic] {
        for nu in 0..=dim {
            let nonempty = match kind {
                QuadricKind::Pseudosphere => nu < dim,
                QuadricKind::Pseudohyperbolic => nu > 0,
            };
            if !nonempty {
                continue;
            }
            let mut candidates = Vec::new();
            if nu < dim {
                let mut a = vec![0.0; dim];
                a[dim - 1] = 1.0;
                candidates.push(a);
            }
            if nu > 0 {
                let mut a = vec![0.0; dim];
                a[0] = 1.0;
                candidates.push(a);
            }
            if nu > 0 && nu < dim {
                let mut a = vec![0.0; dim];
                a[0] = 1.0;
                a[dim - 1] = 1.0;
                candidates.push(a);
            }
            for a in candidates {
                out.push(HeightFunctionSpec {
                    n,
                    ambient_index: nu,
                    kind,
                    radius: 1.0,
                    a,
                    seed: None,
                });
            }
        }
    }
    out
}
