//! Numerical toolkit for the horospherical p-Christoffel-Minkowski equation
//! `σ_k(A[φ]) = φ^{p−k} f` on `Sⁿ`.
//!
//! The algebraic layers ([`symfunc`], [`conformal`]) are generic over
//! [`Scalar`] and run exactly on rationals; the grid, geometry and solver
//! layers work in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod apriori;
pub mod assumptions;
pub mod conformal;
pub mod error;
pub mod horo_geometry;
pub mod linalg;
pub mod scalar;
pub mod solver;
pub mod sphere_grid;
pub mod symfunc;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};
pub use sphere_grid::{ScalarField, SphereGrid, TensorField, VectorField};

pub type SymVecF64 = symfunc::SymVec<f64>;
pub type SymMatF64 = symfunc::SymMat<f64>;
pub type NirenbergCoefficientsF64 = conformal::NirenbergCoefficients<f64>;
