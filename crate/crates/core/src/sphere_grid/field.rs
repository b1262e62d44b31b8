use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// One real value per grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(len: usize, c: f64) -> Self {
        Self {
            values: vec![c; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.values.iter()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len(), "field length mismatch");
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for ScalarField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

/// `n` frame components per node (a tangent vector field).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    dim: usize,
    values: Vec<f64>,
}

impl VectorField {
    pub(crate) fn from_raw(dim: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len() % dim, 0);
        Self { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Frame-component Euclidean norm squared at each node.
    pub fn norm_squared(&self) -> ScalarField {
        ScalarField::new(
            (0..self.len())
                .map(|i| self.at(i).iter().map(|v| v * v).sum())
                .collect(),
        )
    }

    pub fn component(&self, a: usize) -> ScalarField {
        ScalarField::new((0..self.len()).map(|i| self.at(i)[a]).collect())
    }
}

/// A symmetric `n×n` matrix per node, components in the node's orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    dim: usize,
    values: Vec<f64>,
}

impl TensorField {
    pub(crate) fn from_raw(dim: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len() % (dim * dim), 0);
        Self { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / (self.dim * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize, a: usize, b: usize) -> f64 {
        self.values[i * self.dim * self.dim + a * self.dim + b]
    }

    pub fn at(&self, i: usize) -> &[f64] {
        let s = self.dim * self.dim;
        &self.values[i * s..(i + 1) * s]
    }

    pub fn matrix(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, self.at(i))
    }

    pub fn trace(&self) -> ScalarField {
        ScalarField::new(
            (0..self.len())
                .map(|i| (0..self.dim).map(|a| self.get(i, a, a)).sum())
                .collect(),
        )
    }

    /// Builds a field by evaluating a per-node matrix closure; the result is
    /// symmetrized from the upper triangle.
    pub fn from_fn(dim: usize, len: usize, mut f: impl FnMut(usize) -> DMatrix<f64>) -> Self {
        let mut values = vec![0.0; len * dim * dim];
        for i in 0..len {
            let m = f(i);
            for a in 0..dim {
                for b in a..dim {
                    let v = m[(a, b)];
                    values[i * dim * dim + a * dim + b] = v;
                    values[i * dim * dim + b * dim + a] = v;
                }
            }
        }
        Self { dim, values }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut gap = 0.0f64;
        for i in 0..self.len() {
            for a in 0..self.dim {
                for b in a + 1..self.dim {
                    gap = gap.max((self.get(i, a, b) - self.get(i, b, a)).abs());
                }
            }
        }
        gap
    }
}
