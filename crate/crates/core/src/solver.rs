//! Discrete residual and Jacobian of `σ_k(A[φ]) = φ^{p−k} f`, damped Newton
//! in the even subspace, and continuation in `t` along the family `f_t` that
//! joins a constant datum to `f`.

use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use crate::apriori::{certify, pinch_root, BoundsCertificate, CertifyTolerances};
use crate::assumptions::{check_assumption, check_positive_even, gamma_p};
use crate::error::{Error, Result};
use crate::horo_geometry::{check_phi, margin_of, Jet, SupportFunction};
use crate::linalg::{BandedLu, RowAccumulator, SparseRows};
use crate::scalar::binomial;
use crate::sphere_grid::{ScalarField, SphereGrid};
use crate::symfunc::{principal_minor_sum, sigma_k_grad_poly, SymMat};

/// The problem datum `(n, k, p, f)` on a grid.
#[derive(Debug, Clone)]
pub struct ProblemSpec<'g> {
    grid: &'g SphereGrid,
    k: usize,
    p: f64,
    f: ScalarField,
}

impl<'g> ProblemSpec<'g> {
    pub fn new(grid: &'g SphereGrid, k: usize, p: f64, f: ScalarField) -> Result<Self> {
        let n = grid.dim();
        if k == 0 || k >= n {
            return Err(Error::Input(format!("need 1 <= k <= n-1, got k = {k}, n = {n}")));
        }
        if !p.is_finite() || p < 0.0 {
            return Err(Error::Regime(format!("p = {p} is outside p >= 0")));
        }
        check_positive_even(grid, &f)?;
        // make the datum exactly even
        let f = grid.project_even(&f);
        Ok(Self { grid, k, p, f })
    }

    pub fn grid(&self) -> &'g SphereGrid {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.dim()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn f(&self) -> &ScalarField {
        &self.f
    }

    fn is_constant(&self) -> bool {
        let (lo, hi) = (self.f.min(), self.f.max());
        hi - lo <= 1e-14 * hi
    }
}

/// Continuation and Newton controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomotopyConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Residual sup-norm target, relative to `1 + sup|φ^{p−k} f_t|`.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Floor on `λ_min(A[φ])` that every accepted iterate keeps.
    pub delta_a: f64,
    /// Floor on `φ − 1`.
    pub delta_phi: f64,
    /// Smallest damping factor tried before the line search gives up.
    pub min_damping: f64,
    /// Armijo constant for the sup-norm decrease test.
    pub sufficient_decrease: f64,
    /// Newton iteration count at or below which the step grows.
    pub easy_iterations: usize,
    pub growth: f64,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.25,
            min_step: 1e-4,
            max_step: 1.0,
            newton_tol: 1e-10,
            max_newton_iters: 25,
            delta_a: 1e-8,
            delta_phi: 1e-8,
            min_damping: 1.0 / 1024.0,
            sufficient_decrease: 1e-4,
            easy_iterations: 4,
            growth: 1.5,
        }
    }
}

impl HomotopyConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.min_step > 0.0
            && self.min_step <= self.max_step
            && self.max_step <= 1.0
            && self.initial_step > 0.0
            && self.newton_tol > 0.0
            && self.max_newton_iters > 0
            && self.delta_a > 0.0
            && self.delta_phi > 0.0
            && self.min_damping > 0.0
            && self.min_damping <= 1.0
            && (0.0..1.0).contains(&self.sufficient_decrease)
            && self.growth >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Input(format!("invalid homotopy config {self:?}")))
        }
    }
}

/// The constant datum at `t = 0`: `max f` for `p ≤ 2k`, `γ_p` beyond.
pub fn f0_constant(f: &ScalarField, p: f64, k: usize, n: usize) -> Result<f64> {
    let kf = k as f64;
    if p > 2.0 * kf {
        return gamma_p(p, k, n);
    }
    let fmax = f.max();
    if p == 2.0 * kf {
        let bound = binomial(n, k) as f64 / 2f64.powi(k as i32);
        if !(fmax < bound) {
            return Err(Error::Regime(format!(
                "p = 2k needs max f < C(n,k)/2^k = {bound}, got {fmax}"
            )));
        }
    }
    Ok(fmax)
}

/// `f_t = ((1−t) f₀^{e} + t f^{e})^{1/e}` with `e = −1/k` for `p < k` and
/// `e = −1/p` otherwise; the endpoints return `f₀` and `f` unchanged.
pub fn f_t(f: &ScalarField, t: f64, p: f64, k: usize, n: usize) -> Result<ScalarField> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Input(format!("t = {t} outside [0, 1]")));
    }
    if t == 1.0 {
        return Ok(f.clone());
    }
    let f0 = f0_constant(f, p, k, n)?;
    if t == 0.0 {
        return Ok(ScalarField::constant(f.len(), f0));
    }
    let e = if p < k as f64 { -1.0 / k as f64 } else { -1.0 / p };
    let base = (1.0 - t) * f0.powf(e);
    Ok(f.map(|x| (base + t * x.powf(e)).powf(1.0 / e)))
}

/// The constant `c > 1` with `C(n,k)(½(c − 1/c))^k = c^{p−k} γ`.
pub fn constant_solution(gamma: f64, p: f64, k: usize, n: usize) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Input(format!("need gamma > 0, got {gamma}")));
    }
    if k == 0 || k > n {
        return Err(Error::Input(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    if !(p >= 0.0) {
        return Err(Error::Regime(format!("p = {p} is outside p >= 0")));
    }
    let kf = k as f64;
    let cnk = binomial(n, k) as f64;
    if p > 2.0 * kf {
        let gp = gamma_p(p, k, n)?;
        if (gamma - gp).abs() > 1e-12 * gp {
            return Err(Error::Regime(format!(
                "p > 2k: a constant solution needs gamma = gamma_p = {gp}, got {gamma}"
            )));
        }
        return Ok((p / (p - 2.0 * kf)).sqrt());
    }
    let m = (gamma / cnk).powf(1.0 / kf);
    let c = pinch_root(m, p / kf)?;
    if p == 0.0 || p == kf || p == 2.0 * kf {
        return Ok(c);
    }
    // polish on the original equation
    let mut c = c;
    for _ in 0..2 {
        let alpha = 0.5 * (c - 1.0 / c);
        let g = cnk * alpha.powi(k as i32) - c.powf(p - kf) * gamma;
        let dg = cnk * kf * alpha.powi(k as i32 - 1) * 0.5 * (1.0 + 1.0 / (c * c))
            - (p - kf) * c.powf(p - kf - 1.0) * gamma;
        let step = g / dg;
        if step.is_finite() && step.abs() < 1e-6 * c {
            c -= step;
        }
    }
    Ok(c)
}

/// `(a, b)` with `L_c = a(Δ + b)` the linearization at the constant
/// solution `c` of the datum `f₀ = C(n,k)(½(c − 1/c))^k c^{k−p}`:
/// `a = C(n−1,k−1)(½(c − 1/c))^{k−1}`, `b = n − (n p/k)(½ − 1/(2c²))`.
pub fn linearization_coefficients(c: f64, p: f64, k: usize, n: usize) -> (f64, f64) {
    let alpha = 0.5 * (c - 1.0 / c);
    let a = binomial(n - 1, k - 1) as f64 * alpha.powi(k as i32 - 1);
    let nf = n as f64;
    let b = nf - nf * p / k as f64 * (0.5 - 0.5 / (c * c));
    (a, b)
}

/// `σ_k(A[φ])` per node, by principal minors.
pub fn sigma_k_field(jet: &Jet, k: usize) -> ScalarField {
    ScalarField::new(
        (0..jet.len())
            .map(|i| principal_minor_sum(&jet.tensor_a_at(i), k))
            .collect(),
    )
}

/// Residual `σ_k(A[φ]) − φ^{p−k} f` and `sup|φ^{p−k} f|`.
pub(crate) fn residual_of(jet: &Jet, f: &ScalarField, p: f64, k: usize) -> (ScalarField, f64) {
    let s = sigma_k_field(jet, k);
    let mut scale = 0.0f64;
    let r = ScalarField::new(
        (0..jet.len())
            .map(|i| {
                let rhs = jet.phi[i].powf(p - k as f64) * f[i];
                scale = scale.max(rhs.abs());
                s[i] - rhs
            })
            .collect(),
    );
    (r, scale)
}

/// `σ_k(A[φ]) − φ^{p−k} f_t` at every node.
pub fn residual(phi: &SupportFunction, spec: &ProblemSpec, t: f64) -> Result<ScalarField> {
    let ft = f_t(&spec.f, t, spec.p, spec.k, spec.n())?;
    let jet = Jet::of(spec.grid, phi.phi());
    Ok(residual_of(&jet, &ft, spec.p, spec.k).0)
}

/// The assembled derivative of the residual at some `φ`, as a sparse matrix
/// over all grid nodes.
#[derive(Debug, Clone)]
pub struct Jacobian {
    op: SparseRows,
}

impl Jacobian {
    pub fn apply(&self, psi: &ScalarField) -> ScalarField {
        ScalarField::new(self.op.apply(psi.values()))
    }

    pub fn rows(&self) -> &SparseRows {
        &self.op
    }

    /// Restriction to even fields: one row and one unknown per antipodal
    /// pair, columns of partner nodes folded onto their representative.
    pub fn even_triplets(&self, grid: &SphereGrid) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.op.nnz() / 2 + 1);
        for i in 0..grid.half() {
            let (cols, vals) = self.op.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                out.push((i, grid.representative(c as usize), v));
            }
        }
        out
    }
}

fn jacobian_of(grid: &SphereGrid, jet: &Jet, ft: &ScalarField, p: f64, k: usize) -> Jacobian {
    let n = grid.dim();
    let len = grid.len();
    let mut acc = RowAccumulator::new(len);
    let mut op = SparseRows::with_capacity(len, len * 64);
    for i in 0..len {
        let a = SymMat::symmetrized(jet.tensor_a_at(i)).expect("finite tensor");
        let s = sigma_k_grad_poly(&a, k).into_matrix();
        let tr = s.trace();
        let phi = jet.phi[i];
        let grad = jet.grad.at(i);
        for x in 0..n {
            for y in x..n {
                let w = if x == y { s[(x, y)] } else { 2.0 * s[(x, y)] };
                let (cols, vals) = grid.hess_op(x, y).row(i);
                for (&c, &v) in cols.iter().zip(vals) {
                    acc.add(c as usize, w * v);
                }
            }
            let w = -tr * grad[x] / phi;
            let (cols, vals) = grid.grad_op(x).row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                acc.add(c as usize, w * v);
            }
        }
        let diag = tr * (jet.grad_sq(i) / (2.0 * phi * phi) + 0.5 * (1.0 + 1.0 / (phi * phi)))
            - (p - k as f64) * phi.powf(p - k as f64 - 1.0) * ft[i];
        acc.add(i, diag);
        op.push_row(acc.drain_sorted());
    }
    Jacobian { op }
}

/// Derivative of [`residual`] at `φ`:
/// `ψ ↦ σ_k^{ij}(A[φ]) δA_ij[ψ] − (p−k) φ^{p−k−1} f_t ψ`.
pub fn jacobian(phi: &SupportFunction, spec: &ProblemSpec, t: f64) -> Result<Jacobian> {
    let ft = f_t(&spec.f, t, spec.p, spec.k, spec.n())?;
    let jet = Jet::of(spec.grid, phi.phi());
    Ok(jacobian_of(spec.grid, &jet, &ft, spec.p, spec.k))
}

/// Ways the Newton corrector can fail.
#[derive(Debug, Clone, PartialEq, ThisError)]
pub enum NewtonError {
    #[error("starting point violates the barrier: {0}")]
    BarrierAtStart(String),
    #[error("line search failed at iteration {iteration} (residual {residual:e}); {reason}")]
    LineSearch {
        iteration: usize,
        residual: f64,
        reason: String,
    },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("linear solve failed: {0}")]
    Linear(Error),
    #[error(transparent)]
    Setup(Error),
}

/// A converged Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub phi: SupportFunction,
    pub iterations: usize,
    /// Residual sup-norm before each iteration and after the last.
    pub residual_history: Vec<f64>,
    pub margin: f64,
    pub tolerance: f64,
}

struct Eval {
    phi: ScalarField,
    jet: Jet,
    res: ScalarField,
    norm: f64,
    scale: f64,
    margin: f64,
}

fn evaluate(grid: &SphereGrid, phi: ScalarField, ft: &ScalarField, p: f64, k: usize) -> Eval {
    let jet = Jet::of(grid, &phi);
    let (res, scale) = residual_of(&jet, ft, p, k);
    let norm = if res.all_finite() { res.sup_norm() } else { f64::INFINITY };
    let margin = margin_of(&jet);
    Eval {
        phi,
        jet,
        res,
        norm,
        scale,
        margin,
    }
}

fn barrier_problem(e: &Eval, cfg: &HomotopyConfig) -> Option<String> {
    if let Err(err) = check_phi(&e.phi, cfg.delta_phi) {
        return Some(err.to_string());
    }
    if !(e.margin > cfg.delta_a) {
        return Some(format!(
            "h-convexity margin {:e} not above {:e}",
            e.margin, cfg.delta_a
        ));
    }
    None
}

/// Damped Newton for `σ_k(A[φ]) = φ^{p−k} f_t` in the even subspace.
pub fn newton_solve(
    phi0: &SupportFunction,
    spec: &ProblemSpec,
    t: f64,
    cfg: &HomotopyConfig,
) -> std::result::Result<NewtonOutcome, NewtonError> {
    cfg.validate().map_err(NewtonError::Setup)?;
    let grid = spec.grid;
    let ft = f_t(&spec.f, t, spec.p, spec.k, spec.n()).map_err(NewtonError::Setup)?;
    let (p, k) = (spec.p, spec.k);
    let mut cur = evaluate(grid, grid.project_even(phi0.phi()), &ft, p, k);
    if let Some(reason) = barrier_problem(&cur, cfg) {
        return Err(NewtonError::BarrierAtStart(reason));
    }
    let tol_of = |e: &Eval| cfg.newton_tol * (1.0 + e.scale);
    let mut history = vec![cur.norm];
    let half = grid.half();
    for iteration in 0..=cfg.max_newton_iters {
        if cur.norm <= tol_of(&cur) {
            let tolerance = tol_of(&cur);
            let margin = cur.margin;
            let phi = SupportFunction::new(grid, cur.phi, 0.0).map_err(NewtonError::Setup)?;
            return Ok(NewtonOutcome {
                phi,
                iterations: iteration,
                residual_history: history,
                margin,
                tolerance,
            });
        }
        if iteration == cfg.max_newton_iters {
            break;
        }
        let jac = jacobian_of(grid, &cur.jet, &ft, p, k);
        let lu = BandedLu::factor(half, &jac.even_triplets(grid)).map_err(NewtonError::Linear)?;
        let rhs: Vec<f64> = (0..half).map(|i| -cur.res[i]).collect();
        let delta = lu.solve(&rhs);
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(NewtonError::Linear(Error::Singular {
                column: 0,
                pivot: f64::NAN,
            }));
        }

        let mut lambda = 1.0;
        let mut last_reason = String::new();
        let accepted = loop {
            let trial = ScalarField::new(
                (0..grid.len())
                    .map(|j| cur.phi[j] + lambda * delta[grid.representative(j)])
                    .collect(),
            );
            let e = evaluate(grid, trial, &ft, p, k);
            match barrier_problem(&e, cfg) {
                Some(reason) => last_reason = reason,
                None if e.norm <= (1.0 - cfg.sufficient_decrease * lambda) * cur.norm => {
                    break Some(e);
                }
                None => {
                    last_reason = format!("no sufficient decrease (trial residual {:e})", e.norm)
                }
            }
            lambda *= 0.5;
            if lambda < cfg.min_damping {
                break None;
            }
        };
        match accepted {
            Some(e) => {
                cur = e;
                history.push(cur.norm);
            }
            None => {
                return Err(NewtonError::LineSearch {
                    iteration,
                    residual: cur.norm,
                    reason: last_reason,
                })
            }
        }
    }
    Err(NewtonError::MaxIterations {
        iterations: cfg.max_newton_iters,
        residual: cur.norm,
    })
}

/// One attempted continuation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub step: f64,
    pub accepted: bool,
    pub newton_iterations: usize,
    pub residual: f64,
    pub margin: f64,
    pub min_phi: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub resolution: usize,
    pub f0: f64,
    pub initial_constant: f64,
    /// Accepted values of `t`, starting at 0.
    pub t_schedule: Vec<f64>,
    pub steps: Vec<StepRecord>,
    /// Residual history of the final Newton solve.
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
    pub residual_tolerance: f64,
    pub hconvexity_margin: f64,
    pub assumption_case: u8,
    pub assumption_pass: Option<bool>,
    pub warnings: Vec<String>,
    pub certificate: BoundsCertificate,
    #[serde(skip)]
    pub phi: Option<SupportFunction>,
}

/// Failure of [`continuation_solve`]; carries the last accepted state.
#[derive(Debug, Clone, ThisError)]
pub enum SolveError {
    #[error(transparent)]
    Setup(#[from] Error),
    #[error("no solution at t = 0: {0}")]
    Start(NewtonError),
    #[error("step underflow: step {step:e} below minimum at t = {t} ({cause})")]
    StepUnderflow {
        t: f64,
        step: f64,
        cause: NewtonError,
        last_good: Box<ScalarField>,
        steps: Vec<StepRecord>,
    },
}

impl SolveError {
    /// `(t, φ)` of the last accepted continuation step, when one exists.
    pub fn last_good(&self) -> Option<(f64, &ScalarField)> {
        match self {
            SolveError::StepUnderflow { t, last_good, .. } => Some((*t, last_good)),
            _ => None,
        }
    }
}

/// Predictor-corrector continuation from the constant solution at `t = 0`.
pub fn continuation_solve(
    spec: &ProblemSpec,
    cfg: &HomotopyConfig,
) -> std::result::Result<SolveReport, SolveError> {
    cfg.validate()?;
    let grid = spec.grid;
    let (n, k, p) = (spec.n(), spec.k, spec.p);
    let mut warnings = Vec::new();
    let (assumption_case, assumption_pass) = match check_assumption(grid, &spec.f, p, k) {
        Ok(r) => {
            if !r.pass {
                warnings.push(format!(
                    "f fails the case {} admissibility check (margin {:e})",
                    r.case, r.margin
                ));
            }
            (r.case, Some(r.pass))
        }
        Err(e) => {
            warnings.push(format!("admissibility check not evaluated: {e}"));
            (0, None)
        }
    };
    let f0 = f0_constant(&spec.f, p, k, n)?;
    let c = constant_solution(f0, p, k, n)?;
    let start = SupportFunction::constant(grid, c)?;

    let mut steps = Vec::new();
    let mut t_schedule = vec![0.0];
    let record = |t, step, o: &NewtonOutcome| StepRecord {
        t,
        step,
        accepted: true,
        newton_iterations: o.iterations,
        residual: *o.residual_history.last().expect("non-empty history"),
        margin: o.margin,
        min_phi: o.phi.phi().min(),
        note: None,
    };

    let first = newton_solve(&start, spec, 0.0, cfg).map_err(SolveError::Start)?;
    steps.push(record(0.0, 0.0, &first));
    let mut t = 0.0;
    let mut cur = first;
    let mut prev: Option<(f64, ScalarField)> = None;
    let mut step = if spec.is_constant() { 1.0 } else { cfg.initial_step.min(cfg.max_step) };

    while t < 1.0 {
        let t_new = if t + step >= 1.0 - 1e-12 { 1.0 } else { t + step };
        let guess = match &prev {
            Some((tp, phip)) => {
                let s = (t_new - t) / (t - tp);
                let pred = cur.phi.phi().zip_map(phip, |a, b| a + s * (a - b));
                SupportFunction::new(grid, grid.project_even(&pred), cfg.delta_phi)
                    .unwrap_or_else(|_| cur.phi.clone())
            }
            None => cur.phi.clone(),
        };
        let attempt = match newton_solve(&guess, spec, t_new, cfg) {
            Err(NewtonError::BarrierAtStart(_)) if prev.is_some() => {
                newton_solve(&cur.phi, spec, t_new, cfg)
            }
            other => other,
        };
        match attempt {
            Ok(o) => {
                steps.push(record(t_new, t_new - t, &o));
                t_schedule.push(t_new);
                let easy = o.iterations <= cfg.easy_iterations;
                prev = Some((t, cur.phi.phi().clone()));
                t = t_new;
                cur = o;
                if easy {
                    step = (step * cfg.growth).min(cfg.max_step);
                }
            }
            Err(err) => {
                steps.push(StepRecord {
                    t: t_new,
                    step: t_new - t,
                    accepted: false,
                    newton_iterations: 0,
                    residual: f64::NAN,
                    margin: f64::NAN,
                    min_phi: f64::NAN,
                    note: Some(err.to_string()),
                });
                step *= 0.5;
                if step < cfg.min_step {
                    return Err(SolveError::StepUnderflow {
                        t,
                        step,
                        cause: err,
                        last_good: Box::new(cur.phi.into_field()),
                        steps,
                    });
                }
            }
        }
    }

    let certificate = certify(grid, &cur.phi, &spec.f, p, k, CertifyTolerances::default())?;
    let final_residual = *cur.residual_history.last().expect("non-empty history");
    Ok(SolveReport {
        converged: final_residual <= cur.tolerance && cur.margin >= cfg.delta_a,
        n,
        k,
        p,
        resolution: grid.resolution(),
        f0,
        initial_constant: c,
        t_schedule,
        steps,
        residual_history: cur.residual_history.clone(),
        final_residual,
        residual_tolerance: cur.tolerance,
        hconvexity_margin: cur.margin,
        assumption_case,
        assumption_pass,
        warnings,
        certificate,
        phi: Some(cur.phi),
    })
}

/// A zonal test solution `φ* = c + ε P₂(x·e)` with `P₂(s) = (3s² − 1)/2`,
/// and the datum `f = σ_k(A[φ*]) φ*^{k−p}` evaluated in closed form.
///
/// With `s = x·e`, `A[φ*]` has eigenvalue `3ε(1 − 2s²) + μ` along `∇s` and
/// `−3εs² + μ` on its complement, `μ = −|Dφ*|²/(2φ*) + ½(φ* − 1/φ*)`,
/// `|Dφ*|² = 9ε²s²(1 − s²)`.
pub fn manufactured_zonal(
    grid: &SphereGrid,
    c: f64,
    eps: f64,
    axis: &[f64],
    k: usize,
    p: f64,
) -> Result<(ScalarField, ScalarField)> {
    let n = grid.dim();
    if axis.len() != n + 1 {
        return Err(Error::Input(format!("axis needs {} components", n + 1)));
    }
    let norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Input("axis must be non-zero".into()));
    }
    let e: Vec<f64> = axis.iter().map(|v| v / norm).collect();
    let dot = |x: &[f64]| x.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>();
    let phi = grid.sample(|x| {
        let s = dot(x);
        c + eps * 0.5 * (3.0 * s * s - 1.0)
    });
    let mut f = Vec::with_capacity(grid.len());
    for (i, &ph) in phi.iter().enumerate() {
        if !(ph > 1.0) {
            return Err(Error::PhiNotAboveOne { node: i, value: ph });
        }
        let s = dot(grid.node(i));
        let g2 = 9.0 * eps * eps * s * s * (1.0 - s * s);
        let mu = -g2 / (2.0 * ph) + 0.5 * (ph - 1.0 / ph);
        let mut lam = vec![-3.0 * eps * s * s + mu; n];
        lam[0] = 3.0 * eps * (1.0 - 2.0 * s * s) + mu;
        if lam.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::NotHConvex {
                node: i,
                min_eig: lam.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
        f.push(crate::symfunc::sigma_k(&lam, k) * ph.powf(k as f64 - p));
    }
    let phi = grid.project_even(&phi);
    let f = grid.project_even(&ScalarField::new(f));
    Ok((phi, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_solution_closed_forms() {
        let c = constant_solution(2.0, 0.0, 1, 2).unwrap();
        assert!((c - 3f64.sqrt()).abs() < 1e-15);
        let gp = gamma_p(6.0, 2, 3).unwrap();
        assert!((constant_solution(gp, 6.0, 2, 3).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!(constant_solution(2.0 * gp, 6.0, 2, 3).is_err());
        // p = k: c − 1/c = 2 (γ/C)^{1/k}
        let c = constant_solution(1.5, 2.0, 2, 3).unwrap();
        assert!((c - 1.0 / c - 2.0 * (0.5f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn constant_solution_residual_generic_p() {
        for &(p, k, n, g) in &[(0.7, 1, 2, 0.4), (1.3, 1, 2, 3.0), (3.1, 2, 3, 0.2), (0.4, 2, 3, 5.0)] {
            let c = constant_solution(g, p, k, n).unwrap();
            let lhs = binomial(n, k) as f64 * (0.5 * (c - 1.0 / c)).powi(k as i32);
            let rhs = c.powf(p - k as f64) * g;
            assert!((lhs - rhs).abs() < 1e-13 * rhs, "p={p} k={k}");
        }
    }

    #[test]
    fn f0_and_ft_endpoints() {
        let f = ScalarField::new(vec![1.0, 2.0, 1.5, 1.0]);
        assert_eq!(f0_constant(&f, 0.0, 1, 2).unwrap(), 2.0);
        let want = 12.0 / 5f64.powf(2.5);
        assert!((f0_constant(&f, 5.0, 2, 3).unwrap() - want).abs() < 1e-15);
        assert!(f0_constant(&f, 2.0, 1, 2).is_err());
        assert_eq!(f_t(&f, 1.0, 0.0, 1, 2).unwrap(), f);
        assert_eq!(f_t(&f, 0.0, 0.0, 1, 2).unwrap(), ScalarField::constant(4, 2.0));
        let half = f_t(&f, 0.5, 0.0, 1, 2).unwrap();
        for i in 0..4 {
            let want = 1.0 / (0.25 + 0.5 / f[i]);
            assert!((half[i] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn config_validation() {
        assert!(HomotopyConfig::default().validate().is_ok());
        let bad = HomotopyConfig {
            min_step: 0.5,
            max_step: 0.1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn spec_rejects_bad_parameters() {
        let g = SphereGrid::build(2, 8).unwrap();
        let f = ScalarField::constant(g.len(), 1.0);
        assert!(ProblemSpec::new(&g, 2, 0.0, f.clone()).is_err());
        assert!(ProblemSpec::new(&g, 1, -1.0, f.clone()).is_err());
        assert!(ProblemSpec::new(&g, 1, 0.0, f).is_ok());
    }

    #[test]
    fn newton_from_exact_constant_takes_no_iterations() {
        let g = SphereGrid::build(2, 8).unwrap();
        let spec = ProblemSpec::new(&g, 1, 0.0, ScalarField::constant(g.len(), 2.0)).unwrap();
        let phi = SupportFunction::constant(&g, 3f64.sqrt()).unwrap();
        let out = newton_solve(&phi, &spec, 1.0, &HomotopyConfig::default()).unwrap();
        assert!(out.iterations <= 1);
    }
}
