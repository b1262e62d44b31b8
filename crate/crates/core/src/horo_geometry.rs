//! Geometry of horospherical support functions.
//!
//! A uniformly h-convex hypersurface in `ℍⁿ⁺¹` is described by `φ > 1` on
//! `Sⁿ`. Everything here is a per-node map built from the discrete gradient
//! and Hessian of `φ`:
//!
//! ```text
//! A[φ] = D²φ − |Dφ|²/(2φ)·g + ½(φ − 1/φ)·g
//! X(x) = ½φ(x,1) + ½(|Dφ|²/φ + 1/φ)(−x,1) + (Dφ,0)
//! ν(x) = X(x) − (1/φ)(−x,1)
//! ```
//!
//! The embedding is written so that a geodesic sphere `φ ≡ eʳ` sits at
//! `(sinh r·x, cosh r)`, i.e. the node `x` is the outward direction of the
//! surface point it parametrizes. For even `φ` this is the antipodally
//! relabelled form of the other common convention, with the same image.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::binomial;
use crate::sphere_grid::{ScalarField, SphereGrid, TensorField, VectorField};
use crate::symfunc::{sigma_k, SymVec};

/// An even-or-not scalar field `φ > 1` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportFunction {
    phi: ScalarField,
    even: bool,
}

impl SupportFunction {
    /// Checks `φ > 1 + floor` at every node and records whether `φ` is exactly
    /// even under the grid's antipodal pairing.
    pub fn new(grid: &SphereGrid, phi: ScalarField, floor: f64) -> Result<Self> {
        if phi.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} values, grid has {} nodes",
                phi.len(),
                grid.len()
            )));
        }
        check_phi(&phi, floor)?;
        let even = grid.antipodal_gap(&phi) == 0.0;
        Ok(Self { phi, even })
    }

    /// Projects onto even functions first, then validates.
    pub fn new_even(grid: &SphereGrid, phi: &ScalarField, floor: f64) -> Result<Self> {
        Self::new(grid, grid.project_even(phi), floor)
    }

    pub fn constant(grid: &SphereGrid, c: f64) -> Result<Self> {
        Self::new(grid, ScalarField::constant(grid.len(), c), 0.0)
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn into_field(self) -> ScalarField {
        self.phi
    }
}

pub(crate) fn check_phi(phi: &ScalarField, floor: f64) -> Result<()> {
    for (node, &value) in phi.iter().enumerate() {
        if !(value > 1.0 + floor) || !value.is_finite() {
            return Err(Error::PhiNotAboveOne { node, value });
        }
    }
    Ok(())
}

/// `φ`, `Dφ`, `D²φ` evaluated once and shared by the geometric maps.
#[derive(Debug, Clone)]
pub struct Jet {
    pub phi: ScalarField,
    pub grad: VectorField,
    pub hess: TensorField,
}

impl Jet {
    pub fn of(grid: &SphereGrid, phi: &ScalarField) -> Self {
        Self {
            phi: phi.clone(),
            grad: grid.gradient(phi),
            hess: grid.hessian(phi),
        }
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn grad_sq(&self, i: usize) -> f64 {
        self.grad.at(i).iter().map(|v| v * v).sum()
    }

    /// `A[φ]` at node `i`.
    pub fn tensor_a_at(&self, i: usize) -> DMatrix<f64> {
        let n = self.grad.dim();
        let p = self.phi[i];
        let shift = -self.grad_sq(i) / (2.0 * p) + 0.5 * (p - 1.0 / p);
        let mut m = self.hess.matrix(i);
        for a in 0..n {
            m[(a, a)] += shift;
        }
        m
    }

    pub fn tensor_a(&self) -> TensorField {
        TensorField::from_fn(self.grad.dim(), self.len(), |i| self.tensor_a_at(i))
    }
}

/// The tensor `A[φ]` together with the support function it came from.
#[derive(Debug, Clone)]
pub struct HorosphericalTensor<'a> {
    pub a: TensorField,
    pub source: &'a SupportFunction,
}

impl HorosphericalTensor<'_> {
    /// Smallest eigenvalue of `A` at each node.
    pub fn min_eigenvalues(&self) -> ScalarField {
        ScalarField::new((0..self.a.len()).map(|i| min_eig(self.a.matrix(i))).collect())
    }

    pub fn trace(&self) -> ScalarField {
        self.a.trace()
    }
}

pub(crate) fn min_eig(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub(crate) fn sorted_eigs(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// A vector `(y, y0)` in Minkowski space `ℝⁿ⁺¹'¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiPoint {
    pub y: Vec<f64>,
    pub y0: f64,
}

impl MinkowskiPoint {
    pub fn new(y: Vec<f64>, y0: f64) -> Self {
        Self { y, y0 }
    }

    /// `⟨(y,y0),(z,z0)⟩ = y·z − y0·z0`.
    pub fn lorentz(&self, other: &Self) -> f64 {
        self.y.iter().zip(&other.y).map(|(a, b)| a * b).sum::<f64>() - self.y0 * other.y0
    }

    pub fn lorentz_sq(&self) -> f64 {
        self.lorentz(self)
    }
}

pub fn tensor_a<'a>(grid: &SphereGrid, phi: &'a SupportFunction) -> HorosphericalTensor<'a> {
    HorosphericalTensor {
        a: Jet::of(grid, phi.phi()).tensor_a(),
        source: phi,
    }
}

/// `min_i λ_min(A[φ](x_i))`; positive certifies discrete uniform h-convexity.
pub fn hconvexity_margin(grid: &SphereGrid, phi: &SupportFunction) -> f64 {
    margin_of(&Jet::of(grid, phi.phi()))
}

pub(crate) fn margin_of(jet: &Jet) -> f64 {
    (0..jet.len())
        .map(|i| min_eig(jet.tensor_a_at(i)))
        .fold(f64::INFINITY, f64::min)
}

/// The hypersurface point `X(x)` at every node.
pub fn embed(grid: &SphereGrid, phi: &SupportFunction) -> Vec<MinkowskiPoint> {
    let jet = Jet::of(grid, phi.phi());
    (0..grid.len()).map(|i| embed_at(grid, &jet, i)).collect()
}

fn embed_at(grid: &SphereGrid, jet: &Jet, i: usize) -> MinkowskiPoint {
    let x = grid.node(i);
    let p = jet.phi[i];
    let s = 0.5 * (jet.grad_sq(i) / p + 1.0 / p);
    let dphi = grid.to_ambient(i, jet.grad.at(i));
    let y = x
        .iter()
        .zip(&dphi)
        .map(|(xc, dc)| 0.5 * p * xc - s * xc + dc)
        .collect();
    MinkowskiPoint::new(y, 0.5 * p + s)
}

/// Outward unit normal `ν = X − (1/φ)(−x, 1)`.
pub fn normal(grid: &SphereGrid, phi: &SupportFunction) -> Vec<MinkowskiPoint> {
    let jet = Jet::of(grid, phi.phi());
    (0..grid.len())
        .map(|i| {
            let mut v = embed_at(grid, &jet, i);
            let inv = 1.0 / jet.phi[i];
            for (yc, xc) in v.y.iter_mut().zip(grid.node(i)) {
                *yc += inv * xc;
            }
            v.y0 -= inv;
            v
        })
        .collect()
}

/// Hyperbolic curvature radii: ascending eigenvalues of `φA[φ]` per node.
pub fn curvature_radii(grid: &SphereGrid, phi: &SupportFunction) -> Result<Vec<SymVec<f64>>> {
    let jet = Jet::of(grid, phi.phi());
    (0..grid.len())
        .map(|i| {
            let eig = sorted_eigs(jet.tensor_a_at(i) * jet.phi[i]);
            if !(eig[0] > 0.0) {
                return Err(Error::NotHConvex {
                    node: i,
                    min_eig: eig[0] / jet.phi[i],
                });
            }
            SymVec::new(eig)
        })
        .collect()
}

/// Principal curvatures `κ_i = 1 + 1/𝓡_i`.
pub fn principal_curvatures(radii: &SymVec<f64>) -> Vec<f64> {
    radii.as_slice().iter().map(|r| 1.0 + 1.0 / r).collect()
}

/// `det A[φ]`, the density of the induced area against the round measure.
pub fn area_element(grid: &SphereGrid, phi: &SupportFunction) -> Result<ScalarField> {
    let jet = Jet::of(grid, phi.phi());
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let m = jet.tensor_a_at(i);
        let lmin = min_eig(m.clone());
        if !(lmin > 0.0) {
            return Err(Error::NotHConvex { node: i, min_eig: lmin });
        }
        out.push(m.determinant());
    }
    Ok(ScalarField::new(out))
}

/// `(1/C(n, n−k)) φ^{−p−k} σ_{n−k}(A[φ])`, for `0 ≤ k ≤ n`.
pub fn measure_density_pk(
    grid: &SphereGrid,
    phi: &SupportFunction,
    p: f64,
    k: usize,
) -> Result<ScalarField> {
    let n = grid.dim();
    if k > n {
        return Err(Error::Input(format!("k = {k} exceeds n = {n}")));
    }
    let norm = binomial(n, n - k) as f64;
    let jet = Jet::of(grid, phi.phi());
    Ok(ScalarField::new(
        (0..grid.len())
            .map(|i| {
                let eig = sorted_eigs(jet.tensor_a_at(i));
                jet.phi[i].powf(-p - k as f64) * sigma_k(&eig, n - k) / norm
            })
            .collect(),
    ))
}

/// Poincaré-ball coordinates `y/(1 + y0)` of hyperboloid points.
pub fn to_poincare_ball(points: &[MinkowskiPoint]) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .enumerate()
        .map(|(i, q)| {
            if !(q.y0 > 0.0) {
                return Err(Error::Input(format!(
                    "point {i} has time component {} <= 0",
                    q.y0
                )));
            }
            Ok(q.y.iter().map(|c| c / (1.0 + q.y0)).collect())
        })
        .collect()
}

/// Writes an OBJ mesh of ball points on an `S²` grid: one vertex per node,
/// each chart cell split into two triangles, and each polar ring closed by a
/// fan. Faces are oriented outward.
pub fn write_obj<W: Write>(mut w: W, grid: &SphereGrid, ball: &[Vec<f64>]) -> Result<()> {
    if grid.dim() != 2 {
        return Err(Error::Input("mesh export needs n = 2".into()));
    }
    if ball.len() != grid.len() {
        return Err(Error::GridMismatch("point count differs from node count".into()));
    }
    let rings = grid.resolution();
    let az = grid.azimuth_count();
    writeln!(w, "# {} vertices, Poincare ball model", ball.len())?;
    for v in ball {
        writeln!(w, "v {:.12} {:.12} {:.12}", v[0], v[1], v[2])?;
    }
    // OBJ indices start at 1
    let id = |m: usize, i: usize| m * az + (i % az) + 1;
    for i in 1..az - 1 {
        writeln!(w, "f {} {} {}", id(0, 0), id(0, i), id(0, i + 1))?;
    }
    for m in 0..rings - 1 {
        for i in 0..az {
            let (a, b, c, d) = (id(m, i), id(m + 1, i), id(m + 1, i + 1), id(m, i + 1));
            writeln!(w, "f {a} {b} {c}")?;
            writeln!(w, "f {a} {c} {d}")?;
        }
    }
    let last = rings - 1;
    for i in 1..az - 1 {
        writeln!(w, "f {} {} {}", id(last, 0), id(last, i + 1), id(last, i))?;
    }
    Ok(())
}
