//! Curvature radii and Schouten eigenvalues of the conformal metric
//! `g = φ^{-2} g_{Sⁿ}`: `λ_i = 𝓡_i + ½`, and
//! `σ_k(𝓡) = Σ_{j≤k} c_j σ_j(λ)` with `c_j = C(n−j, k−j)(−1)^{k−j} 2^{j−k}`.
//!
//! The algebra is generic over [`Scalar`] and exact on rationals.

use crate::error::{Error, Result};
use crate::horo_geometry::{curvature_radii, SupportFunction};
use crate::scalar::{binomial_as, Scalar};
use crate::sphere_grid::SphereGrid;
use crate::symfunc::{elementary_all, sigma_k, SymVec};

#[derive(Debug, Clone, PartialEq)]
pub struct NirenbergCoefficients<T> {
    pub k: usize,
    pub n: usize,
    /// `c_0, …, c_k`.
    pub c: Vec<T>,
}

pub fn nirenberg_coeffs<T: Scalar>(k: usize, n: usize) -> Result<NirenbergCoefficients<T>> {
    if k == 0 || k > n {
        return Err(Error::Input(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let two = T::one() + T::one();
    let c = (0..=k)
        .map(|j| {
            let mut v: T = binomial_as(n - j, k - j);
            for _ in j..k {
                v /= two.clone();
            }
            if (k - j) % 2 == 1 {
                T::zero() - v
            } else {
                v
            }
        })
        .collect();
    Ok(NirenbergCoefficients { k, n, c })
}

/// `λ_i = 𝓡_i + ½`.
pub fn radii_to_schouten<T: Scalar>(radii: &[SymVec<T>]) -> Vec<SymVec<T>> {
    radii.iter().map(shift_half).collect()
}

/// `𝓡_i = λ_i − ½`.
pub fn schouten_to_radii<T: Scalar>(lambda: &[SymVec<T>]) -> Vec<SymVec<T>> {
    let half = T::one() / (T::one() + T::one());
    lambda
        .iter()
        .map(|l| {
            SymVec::new(l.as_slice().iter().map(|x| x.clone() - half.clone()).collect())
                .expect("shift keeps entries finite")
        })
        .collect()
}

fn shift_half<T: Scalar>(r: &SymVec<T>) -> SymVec<T> {
    let half = T::one() / (T::one() + T::one());
    SymVec::new(r.as_slice().iter().map(|x| x.clone() + half.clone()).collect())
        .expect("shift keeps entries finite")
}

/// Both sides of `σ_k(𝓡) = Σ_j c_j σ_j(𝓡 + ½)` and `|lhs − rhs|`.
pub fn check_combination_identity<T: Scalar>(radii: &SymVec<T>, k: usize) -> Result<(T, T, T)> {
    let n = radii.len();
    let coeffs = nirenberg_coeffs::<T>(k, n)?;
    let lhs = sigma_k(radii.as_slice(), k);
    let lam = shift_half(radii);
    let sig = elementary_all(lam.as_slice());
    let mut rhs = T::zero();
    for (j, c) in coeffs.c.iter().enumerate() {
        rhs += c.clone() * sig[j].clone();
    }
    let gap = (lhs.clone() - rhs.clone()).magnitude();
    Ok((lhs, rhs, gap))
}

/// Per-node Schouten eigenvalues of `g = φ^{-2} g_{Sⁿ}`.
pub fn schouten_eigs(grid: &SphereGrid, phi: &SupportFunction) -> Result<Vec<SymVec<f64>>> {
    Ok(radii_to_schouten(&curvature_radii(grid, phi)?))
}

/// Outcome of the positivity test `2Sch_g − g > 0`, i.e. all `𝓡_i > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Regularity {
    pub holds: bool,
    /// Smallest curvature radius over the grid.
    pub min_radius: f64,
    /// Set for `n = 2`, where only the radii reading is meaningful.
    pub warning: Option<String>,
}

pub fn regularity_condition(grid: &SphereGrid, phi: &SupportFunction) -> Regularity {
    let warning = (grid.dim() < 3)
        .then(|| "Schouten tensor needs n >= 3; reporting curvature-radius positivity only".to_string());
    let jet = crate::horo_geometry::Jet::of(grid, phi.phi());
    let min_radius = (0..grid.len())
        .map(|i| {
            let m = jet.tensor_a_at(i) * jet.phi[i];
            crate::horo_geometry::min_eig(m)
        })
        .fold(f64::INFINITY, f64::min);
    Regularity {
        holds: min_radius > 0.0,
        min_radius,
        warning,
    }
}
