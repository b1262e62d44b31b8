//! Computable a priori bounds for even solutions, and a certificate that
//! checks a candidate solution against them.

use serde::{Deserialize, Serialize};

use crate::assumptions::gamma_p;
use crate::error::{Error, Result};
use crate::horo_geometry::{margin_of, Jet, SupportFunction};
use crate::scalar::binomial;
use crate::solver::residual_of;
use crate::sphere_grid::{ScalarField, SphereGrid};

const ROOT_TOL: f64 = 1e-15;

/// Bisection for a sign change of `f` on `[lo, hi]`; returns the final end
/// point at which `f ≤ 0`.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo_neg = f(lo) < 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= ROOT_TOL * hi {
            break;
        }
        if (f(mid) < 0.0) == flo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if flo_neg {
        lo
    } else {
        hi
    }
}

/// The root `t > 1` of `½(t² − 1)·t^{−q} = m`, for `m > 0` and `0 ≤ q ≤ 2`
/// (`m < ½` when `q = 2`). The left side is increasing on `t > 1`.
pub fn pinch_root(m: f64, q: f64) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Input(format!("need m > 0, got {m}")));
    }
    if !(0.0..=2.0).contains(&q) {
        return Err(Error::Input(format!("need 0 <= q <= 2, got {q}")));
    }
    if q == 0.0 {
        return Ok((1.0 + 2.0 * m).sqrt());
    }
    if q == 1.0 {
        return Ok(m + (m * m + 1.0).sqrt());
    }
    if q == 2.0 {
        if !(m < 0.5) {
            return Err(Error::Regime(format!(
                "p = 2k needs (f/C(n,k))^(1/k) < 1/2, got {m}"
            )));
        }
        return Ok(1.0 / (1.0 - 2.0 * m).sqrt());
    }
    let h = |t: f64| 0.5 * (t * t - 1.0) * t.powf(-q) - m;
    let mut hi = 2.0;
    while h(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e150 {
            return Err(Error::Input("no root below 1e150".into()));
        }
    }
    let mut t = bisect(1.0, hi, h);
    // Newton polish
    for _ in 0..3 {
        let d = t * t.powf(-q) - 0.5 * q * (t * t - 1.0) * t.powf(-q - 1.0);
        let step = h(t) / d;
        if !step.is_finite() {
            break;
        }
        t -= step;
    }
    Ok(t)
}

/// `g(t) = a t^{p/k} − t² + 1`.
pub fn g_poly(a: f64, p: f64, k: usize, t: f64) -> f64 {
    a * t.powf(p / k as f64) - t * t + 1.0
}

/// `a₀ = (2k/p)((p−2k)/p)^{(p−2k)/(2k)}`, the largest `a` for which `g` has
/// a zero on `(1, ∞)`.
pub fn a0_threshold(p: f64, k: usize) -> f64 {
    let kf = k as f64;
    2.0 * kf / p * ((p - 2.0 * kf) / p).powf((p - 2.0 * kf) / (2.0 * kf))
}

/// Zeros of `g`, or its double zero `t₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GBracket {
    Degenerate { t0: f64 },
    Roots { t1: f64, t2: f64 },
}

/// Locates `{g ≤ 0} = [t₁, t₂]` for `p > 2k`, `0 < a ≤ a₀`.
pub fn g_bracket(a: f64, p: f64, k: usize) -> Result<GBracket> {
    let kf = k as f64;
    if !(p > 2.0 * kf) {
        return Err(Error::Regime(format!("bracketing needs p > 2k, got p = {p}")));
    }
    if !(a > 0.0) {
        return Err(Error::Input(format!("need a > 0, got {a}")));
    }
    let a0 = a0_threshold(p, k);
    let t0 = (2.0 * kf / (a * p)).powf(kf / (p - 2.0 * kf));
    if (a - a0).abs() <= 1e-12 * a0 {
        return Ok(GBracket::Degenerate { t0 });
    }
    if a > a0 {
        return Err(Error::Regime(format!(
            "a = {a} exceeds a0 = {a0}: min f > gamma_p, g has no zero"
        )));
    }
    let g = |t: f64| g_poly(a, p, k, t);
    let t1 = bisect(1.0, t0, g);
    let mut hi = 2.0 * t0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    let t2 = bisect(t0, hi, g);
    Ok(GBracket::Roots { t1, t2 })
}

/// Bounds `lower ≤ min φ ≤ max φ ≤ upper` for even solutions with
/// `fmin ≤ f ≤ fmax`.
pub fn c0_bounds(fmin: f64, fmax: f64, p: f64, k: usize, n: usize) -> Result<(f64, f64)> {
    if !(fmin > 0.0) || !(fmin <= fmax) || !fmax.is_finite() {
        return Err(Error::Input(format!(
            "need 0 < fmin <= fmax, got {fmin}, {fmax}"
        )));
    }
    if k == 0 || k > n {
        return Err(Error::Input(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    if !(p >= 0.0) {
        return Err(Error::Regime(format!("p = {p} is outside p >= 0")));
    }
    let kf = k as f64;
    let cnk = binomial(n, k) as f64;
    let m = (fmin / cnk).powf(1.0 / kf);
    let big_m = (fmax / cnk).powf(1.0 / kf);
    let pinch = |t: f64| 0.5 * (t + 1.0 / t);

    if p <= 2.0 * kf {
        let q = p / kf;
        if q == 2.0 && !(big_m < 0.5) {
            return Err(Error::Regime(format!(
                "upper bound needs max f < C(n,k)/2^k = {}, got {fmax}",
                cnk / 2f64.powi(k as i32)
            )));
        }
        // max φ ≥ s where ½(s²−1)s^{−q} = m; min φ ≤ t where the same equals M
        let s = pinch_root(m, q)?;
        let t = pinch_root(big_m, q)?;
        return Ok((pinch(s), t + (t * t - 1.0).sqrt()));
    }
    let gp = gamma_p(p, k, n)?;
    if fmin > gp * (1.0 + 1e-12) {
        return Err(Error::Regime(format!(
            "bounds need min f <= gamma_p = {gp}, got {fmin}"
        )));
    }
    match g_bracket(2.0 * m, p, k)? {
        GBracket::Degenerate { t0 } => Ok((pinch(t0), t0)),
        GBracket::Roots { t1, t2 } => Ok((pinch(t1), t2)),
    }
}

/// `max_x (|Dφ|²/φ² − (1 − 1/φ²))`; non-positive for even h-convex `φ`.
pub fn check_gradient_bound(grid: &SphereGrid, phi: &SupportFunction) -> f64 {
    gradient_violation(&Jet::of(grid, phi.phi()))
}

fn gradient_violation(jet: &Jet) -> f64 {
    (0..jet.len())
        .map(|i| {
            let p = jet.phi[i];
            jet.grad_sq(i) / (p * p) - (1.0 - 1.0 / (p * p))
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `H = tr A[φ] = Δφ − n|Dφ|²/(2φ) + n(φ − 1/φ)/2`.
pub fn trace_h(grid: &SphereGrid, phi: &SupportFunction) -> ScalarField {
    trace_h_of(&Jet::of(grid, phi.phi()))
}

fn trace_h_of(jet: &Jet) -> ScalarField {
    let n = jet.grad.dim() as f64;
    let lap = jet.hess.trace();
    ScalarField::new(
        (0..jet.len())
            .map(|i| {
                let p = jet.phi[i];
                lap[i] - n * jet.grad_sq(i) / (2.0 * p) + 0.5 * n * (p - 1.0 / p)
            })
            .collect(),
    )
}

/// Tolerances applied by [`certify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyTolerances {
    /// Relative residual tolerance, scaled by `1 + sup|φ^{p−k} f|`.
    pub residual: f64,
    /// Absolute slack on the gradient bound, on top of `h²`.
    pub gradient: f64,
    /// Absolute slack on the `C⁰` bounds, on top of `h²`.
    pub c0: f64,
}

impl Default for CertifyTolerances {
    fn default() -> Self {
        Self {
            residual: 1e-8,
            gradient: 1e-6,
            c0: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsCertificate {
    pub c0_lower: Option<f64>,
    pub c0_upper: Option<f64>,
    /// Set when the bounds could not be formed for this data.
    pub c0_error: Option<String>,
    pub min_phi: f64,
    pub max_phi: f64,
    pub c0_tolerance: f64,
    pub c0_pass: bool,
    pub gradient_bound_violation: f64,
    pub gradient_tolerance: f64,
    pub gradient_pass: bool,
    pub trace_h_max: f64,
    pub trace_h_min: f64,
    pub trace_h_finite: bool,
    pub hconvexity_margin: f64,
    pub margin_pass: bool,
    pub residual_sup: f64,
    pub residual_tolerance: f64,
    pub residual_pass: bool,
    pub pass: bool,
}

/// Evaluates every computable bound on a claimed solution of
/// `σ_k(A[φ]) = φ^{p−k} f`.
pub fn certify(
    grid: &SphereGrid,
    phi: &SupportFunction,
    f: &ScalarField,
    p: f64,
    k: usize,
    tol: CertifyTolerances,
) -> Result<BoundsCertificate> {
    if f.len() != grid.len() {
        return Err(Error::GridMismatch("f does not match the grid".into()));
    }
    let h2 = grid.step() * grid.step();
    let jet = Jet::of(grid, phi.phi());
    let min_phi = phi.phi().min();
    let max_phi = phi.phi().max();

    let c0_tolerance = tol.c0 + h2;
    let (c0_lower, c0_upper, c0_error, c0_pass) =
        match c0_bounds(f.min(), f.max(), p, k, grid.dim()) {
            Ok((lo, hi)) => (
                Some(lo),
                Some(hi),
                None,
                lo <= min_phi + c0_tolerance && max_phi <= hi + c0_tolerance,
            ),
            Err(e) => (None, None, Some(e.to_string()), false),
        };

    let gradient_bound_violation = gradient_violation(&jet);
    let gradient_tolerance = tol.gradient + h2;
    let h = trace_h_of(&jet);
    let trace_h_finite = h.all_finite();
    let hconvexity_margin = margin_of(&jet);

    let (res, scale) = residual_of(&jet, f, p, k);
    let residual_sup = res.sup_norm();
    let residual_tolerance = tol.residual * (1.0 + scale);

    let gradient_pass = gradient_bound_violation <= gradient_tolerance;
    let margin_pass = hconvexity_margin > 0.0;
    let residual_pass = residual_sup <= residual_tolerance;
    Ok(BoundsCertificate {
        c0_lower,
        c0_upper,
        c0_error,
        min_phi,
        max_phi,
        c0_tolerance,
        c0_pass,
        gradient_bound_violation,
        gradient_tolerance,
        gradient_pass,
        trace_h_max: h.max(),
        trace_h_min: h.min(),
        trace_h_finite,
        hconvexity_margin,
        margin_pass,
        residual_sup,
        residual_tolerance,
        residual_pass,
        pass: c0_pass && gradient_pass && trace_h_finite && margin_pass && residual_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_zero_closed_forms() {
        let (lo, hi) = c0_bounds(2.0, 2.0, 0.0, 1, 2).unwrap();
        assert!((hi - (3f64.sqrt() + 2f64.sqrt())).abs() < 1e-14);
        assert!((lo - 2.0 / 3f64.sqrt()).abs() < 1e-14);
        // straddles the constant solution √3
        assert!(lo < 3f64.sqrt() && 3f64.sqrt() < hi);
    }

    #[test]
    fn pinch_root_matches_closed_forms() {
        for &m in &[0.01, 0.3, 2.0, 40.0] {
            for &q in &[0.25, 0.5, 1.5, 1.9] {
                let t = pinch_root(m, q).unwrap();
                let lhs = 0.5 * (t * t - 1.0) * t.powf(-q);
                assert!((lhs - m).abs() < 1e-12 * (1.0 + m), "m={m} q={q}");
            }
        }
        assert!((pinch_root(0.25, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(pinch_root(0.5, 2.0).is_err());
    }

    #[test]
    fn bounds_monotone_and_above_one() {
        for &p in &[0.0, 0.5, 1.0, 1.5] {
            let (lo1, hi1) = c0_bounds(0.5, 1.0, p, 1, 2).unwrap();
            let (lo2, hi2) = c0_bounds(0.8, 1.5, p, 1, 2).unwrap();
            assert!(lo1 > 1.0 && lo1 <= hi1);
            assert!(lo2 >= lo1 && hi2 >= hi1, "p = {p}");
        }
    }

    #[test]
    fn critical_p_requires_small_fmax() {
        assert!(c0_bounds(0.1, 0.4, 2.0, 1, 2).is_ok());
        assert!(matches!(c0_bounds(0.1, 1.0, 2.0, 1, 2), Err(Error::Regime(_))));
    }

    #[test]
    fn g_roots_and_degenerate() {
        let (p, k) = (5.0, 2);
        let a0 = a0_threshold(p, k);
        match g_bracket(0.5 * a0, p, k).unwrap() {
            GBracket::Roots { t1, t2 } => {
                assert!(1.0 < t1 && t1 < t2);
                assert!(g_poly(0.5 * a0, p, k, t1).abs() < 1e-12);
                assert!(g_poly(0.5 * a0, p, k, t2).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        match g_bracket(a0, p, k).unwrap() {
            GBracket::Degenerate { t0 } => {
                assert!((t0 - (p / (p - 4.0)).sqrt()).abs() < 1e-12);
                assert!(g_poly(a0, p, k, t0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!(g_bracket(1.1 * a0, p, k).is_err());
    }

    #[test]
    fn gamma_p_is_the_degenerate_threshold() {
        let (p, k, n) = (6.0, 2, 3);
        let gp = gamma_p(p, k, n).unwrap();
        let (lo, hi) = c0_bounds(gp, gp, p, k, n).unwrap();
        assert!((hi - 3f64.sqrt()).abs() < 1e-10);
        assert!(lo < hi);
    }
}
