//! Admissibility conditions on the prescribed function `f`.
//!
//! Six regimes in `(p, k)`; each asks a symmetric tensor built from
//! `v = f^{-1/k}` (regimes 1-3) or `w = f^{-1/p}` (regimes 4-6) to be
//! positive semidefinite, and regimes 5 and 6 add a scalar bound on `f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horo_geometry::min_eig;
use crate::scalar::binomial;
use crate::sphere_grid::{ScalarField, SphereGrid};

/// The `(p, k)` regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `p = 0`
    Zero,
    /// `0 < p ≤ k/2`
    Small,
    /// `k/2 < p < k`
    Medium,
    /// `k ≤ p < 2k`
    Large,
    /// `p = 2k`
    Critical,
    /// `p > 2k`
    Super,
}

impl Case {
    pub fn id(self) -> u8 {
        match self {
            Case::Zero => 1,
            Case::Small => 2,
            Case::Medium => 3,
            Case::Large => 4,
            Case::Critical => 5,
            Case::Super => 6,
        }
    }

    /// Exponent `e` such that the tensor is built from `f^e`.
    pub fn exponent(self, p: f64, k: usize) -> f64 {
        match self {
            Case::Zero | Case::Small | Case::Medium => -1.0 / k as f64,
            _ => -1.0 / p,
        }
    }
}

pub fn classify_case(p: f64, k: usize) -> Result<Case> {
    if k == 0 {
        return Err(Error::Input("k must be at least 1".into()));
    }
    if !p.is_finite() || p < 0.0 {
        return Err(Error::Regime(format!("p = {p} is outside p >= 0")));
    }
    let k = k as f64;
    Ok(if p == 0.0 {
        Case::Zero
    } else if p <= k / 2.0 {
        Case::Small
    } else if p < k {
        Case::Medium
    } else if p < 2.0 * k {
        Case::Large
    } else if p == 2.0 * k {
        Case::Critical
    } else {
        Case::Super
    })
}

/// `γ_p = k^k (p−2k)^{(p−2k)/2} / p^{p/2} · C(n,k)`, defined for `p > 2k`.
pub fn gamma_p(p: f64, k: usize, n: usize) -> Result<f64> {
    let kf = k as f64;
    if !(p > 2.0 * kf) {
        return Err(Error::Regime(format!("gamma_p needs p > 2k, got p = {p}, k = {k}")));
    }
    let d = p - 2.0 * kf;
    let log = kf * kf.ln() + 0.5 * d * d.ln() - 0.5 * p * p.ln();
    Ok(log.exp() * binomial(n, k) as f64)
}

/// A scalar side condition of the regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub case: u8,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    /// Smallest eigenvalue of the regime tensor at each node.
    pub node_min_eigenvalues: Vec<f64>,
    pub margin: f64,
    pub tolerance: f64,
    pub aux: Vec<AuxCheck>,
    pub pass: bool,
}

/// Relative evenness tolerance for sampled data.
const EVEN_TOL: f64 = 1e-12;

pub(crate) fn check_positive_even(grid: &SphereGrid, f: &ScalarField) -> Result<()> {
    if f.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "field has {} values, grid has {} nodes",
            f.len(),
            grid.len()
        )));
    }
    for (node, &value) in f.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositive { node, value });
        }
    }
    let gap = grid.antipodal_gap(f);
    if gap > EVEN_TOL * (1.0 + f.sup_norm()) {
        return Err(Error::NotEven { gap });
    }
    Ok(())
}

pub fn check_assumption(grid: &SphereGrid, f: &ScalarField, p: f64, k: usize) -> Result<AssumptionReport> {
    let n = grid.dim();
    if k > n - 1 {
        return Err(Error::Input(format!("need 1 <= k <= n-1, got k = {k}, n = {n}")));
    }
    let case = classify_case(p, k)?;
    check_positive_even(grid, f)?;
    let kf = k as f64;
    let cnk = binomial(n, k) as f64;
    let fmax = f.max();
    let fmin = f.min();

    let e = case.exponent(p, k);
    let v = f.map(|x| x.powf(e));
    let grad = grid.gradient(&v);
    let hess = grid.hessian(&v);

    let node_min_eigenvalues: Vec<f64> = (0..grid.len())
        .map(|i| {
            let vi = v[i];
            let g2: f64 = grad.at(i).iter().map(|x| x * x).sum();
            let shift = match case {
                Case::Zero => {
                    -g2.sqrt() + vi / (2.0 + 8.0 * (fmax / cnk).powf(1.0 / kf))
                }
                Case::Small => -(kf + 2.0 * p) / kf * g2.sqrt() + p * p / (kf * kf) * vi,
                Case::Medium => {
                    let c = (3.0 * kf - 2.0 * p).powi(2) / (p * (2.0 * p - kf));
                    -c * g2 / (2.0 * vi) + 0.5 * p / kf * vi
                }
                Case::Large | Case::Critical => -g2 / (2.0 * vi) + 0.5 * vi,
                Case::Super => -g2 / (2.0 * vi) + kf / p * vi,
            };
            let mut m = hess.matrix(i);
            for a in 0..n {
                m[(a, a)] += shift;
            }
            min_eig(m)
        })
        .collect();
    let margin = node_min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let tolerance = 1e-8 * (1.0 + f.sup_norm());

    let mut aux = Vec::new();
    match case {
        Case::Critical => {
            let bound = cnk / 2f64.powi(k as i32);
            aux.push(AuxCheck {
                name: "max f < C(n,k)/2^k".into(),
                value: fmax,
                bound,
                pass: fmax < bound,
            });
        }
        Case::Super => {
            aux.push(AuxCheck {
                name: "k >= 2".into(),
                value: kf,
                bound: 2.0,
                pass: k >= 2,
            });
            let bound = gamma_p(p, k, n)?;
            aux.push(AuxCheck {
                name: "min f <= gamma_p".into(),
                value: fmin,
                bound,
                pass: fmin <= bound,
            });
        }
        _ => {}
    }
    let pass = margin >= -tolerance && aux.iter().all(|c| c.pass);
    Ok(AssumptionReport {
        case: case.id(),
        n,
        k,
        p,
        node_min_eigenvalues,
        margin,
        tolerance,
        aux,
        pass,
    })
}

/// `f = (h^{-1/k} + C)^{-k}`; large `C` makes `f` admissible.
pub fn make_admissible_f(h: &ScalarField, k: usize, c: f64) -> Result<ScalarField> {
    if k == 0 {
        return Err(Error::Input("k must be at least 1".into()));
    }
    if !(c >= 0.0) {
        return Err(Error::Input(format!("C must be non-negative, got {c}")));
    }
    for (node, &value) in h.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositive { node, value });
        }
    }
    if c == 0.0 {
        return Ok(h.clone());
    }
    let kf = k as f64;
    Ok(h.map(|x| (x.powf(-1.0 / kf) + c).powf(-kf)))
}
