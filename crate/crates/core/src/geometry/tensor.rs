use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Index of `(i, j)` in packed upper-triangular storage.
pub(crate) fn packed(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

pub(crate) fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Symmetric rank-2 tensor at a point; only the upper triangle is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor2 {
    n: usize,
    data: Vec<f64>,
}

impl SymTensor2 {
    pub fn zeros(n: usize) -> Self {
        SymTensor2 {
            n,
            data: vec![0.0; packed_len(n)],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = SymTensor2::zeros(n);
        for i in 0..n {
            for j in i..n {
                t.data[packed(n, i, j)] = f(i, j);
            }
        }
        t
    }

    /// Symmetrizes by averaging `(i, j)` and `(j, i)`.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        SymTensor2::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed(self.n, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[packed(self.n, i, j)] = value;
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn add(&self, other: &SymTensor2) -> SymTensor2 {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymTensor2) -> SymTensor2 {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> SymTensor2 {
        SymTensor2 {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    fn zip(&self, other: &SymTensor2, f: impl Fn(f64, f64) -> f64) -> SymTensor2 {
        assert_eq!(self.n, other.n, "tensor dimensions differ");
        SymTensor2 {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    /// `T(v, w)`.
    pub fn apply(&self, v: &[f64], w: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j) * v[i] * w[j];
            }
        }
        s
    }

    /// Copy `block` into rows/columns starting at `offset`.
    pub fn set_block(&mut self, offset: usize, block: &SymTensor2) {
        for i in 0..block.n {
            for j in i..block.n {
                self.set(offset + i, offset + j, block.get(i, j));
            }
        }
    }

    pub fn block(&self, offset: usize, len: usize) -> SymTensor2 {
        SymTensor2::from_fn(len, |i, j| self.get(offset + i, offset + j))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Christoffel symbols of the second kind, `get(k, i, j)` = Γ^k_ij.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub(crate) fn zeros(n: usize) -> Self {
        Christoffel {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub(crate) fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        self.data[(k * self.n + i) * self.n + j] = value;
    }

    pub(crate) fn axpy(&mut self, a: f64, other: &Christoffel) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Geodesic acceleration -Γ^k_ij v^i v^j.
    pub fn acceleration(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..self.n {
                    for j in 0..self.n {
                        s += self.get(k, i, j) * v[i] * v[j];
                    }
                }
                -s
            })
            .collect()
    }
}

/// Riemann tensor R^a_bcd with the convention
/// R^a_bcd = ∂_c Γ^a_db − ∂_d Γ^a_cb + Γ^a_ce Γ^e_db − Γ^a_de Γ^e_cb,
/// so that Ric_bd = R^a_bad and the unit sphere has Ric = (n-1)g.
#[derive(Clone, Debug, PartialEq)]
pub struct Riemann {
    n: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub(crate) fn zeros(n: usize) -> Self {
        Riemann {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[((a * self.n + b) * self.n + c) * self.n + d]
    }

    pub(crate) fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        self.data[((a * self.n + b) * self.n + c) * self.n + d] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub dimension: usize,
    /// Number of negative eigenvalues.
    pub index: usize,
}

impl Signature {
    pub fn new(dimension: usize, index: usize) -> Self {
        Signature { dimension, index }
    }

    /// Diagonal signs with the negative directions first.
    pub fn signs(&self) -> Vec<f64> {
        (0..self.dimension)
            .map(|i| if i < self.index { -1.0 } else { 1.0 })
            .collect()
    }
}

pub const LIGHTLIKE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalCharacter {
    Spacelike,
    Timelike,
    Lightlike,
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(components: Vec<f64>) -> Self {
        TangentVector { components }
    }

    pub fn euclidean_norm_sq(&self) -> f64 {
        self.components.iter().map(|x| x * x).sum()
    }

    /// Lightlike when |g(v,v)| ≤ 1e-9·‖v‖² in the coordinate Euclidean norm.
    pub fn causal_character(&self, g: &SymTensor2) -> CausalCharacter {
        let e = self.euclidean_norm_sq();
        if e == 0.0 {
            return CausalCharacter::Zero;
        }
        let q = g.apply(&self.components, &self.components);
        if q.abs() <= LIGHTLIKE_TOLERANCE * e {
            CausalCharacter::Lightlike
        } else if q > 0.0 {
            CausalCharacter::Spacelike
        } else {
            CausalCharacter::Timelike
        }
    }
}
