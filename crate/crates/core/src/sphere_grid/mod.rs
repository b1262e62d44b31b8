//! Discretization of `Sⁿ` (`n = 2, 3`) on an equiangular hyperspherical chart.
//!
//! Nodes sit at cell centres of the polar angles, `a_j = (m + ½)·π/N`, and at
//! `ϕ = 2πi/(2N)` in azimuth, so no node lies on a chart singularity and the
//! antipodal map `a_j ↦ π − a_j, ϕ ↦ ϕ + π` permutes node indices. The first
//! half of the index range (`m_1 < N/2`) holds one representative per
//! antipodal pair; the second half is filled by exact negation.
//!
//! Derivatives at a node `x` are taken in the gnomonic chart
//! `u ↦ (x + Σ u_a e_a)/|x + Σ u_a e_a|` centred at `x`, whose Christoffel
//! symbols vanish at `u = 0`. The covariant gradient and Hessian in the
//! orthonormal frame `e_a` are therefore plain fourth-order centred
//! differences in `u` with step `h = π/N`. Off-grid stencil values come from tensor-product quintic
//! Lagrange interpolation in the angles; the composition `f ∘ x(angles)` is
//! smooth on all of `ℝⁿ`, and indices that leave the chart are folded back by
//! the reflection identities of the angles. Interpolation is `O(h⁶)`, so both
//! operators are `O(h⁴)` uniformly, poles included.
//!
//! Rows for the second half of the nodes are mirrored from their partners,
//! which makes every operator commute with the antipodal map up to the
//! summation order of a row.

mod field;
pub mod io;

use std::f64::consts::PI;

pub use field::{ScalarField, TensorField, VectorField};

use crate::error::{Error, Result};
use crate::linalg::{RowAccumulator, SparseRows};

/// Largest per-angle resolution accepted for `n = 3`.
pub const MAX_RESOLUTION_S3: usize = 24;

/// Structured grid on the unit sphere `Sⁿ ⊂ ℝⁿ⁺¹`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    dim: usize,
    resolution: usize,
    azimuth_count: usize,
    coords: Vec<f64>,
    frames: Vec<f64>,
    weights: Vec<f64>,
    pairs: Vec<usize>,
    step: f64,
    grad_ops: Vec<SparseRows>,
    hess_ops: Vec<SparseRows>,
}

impl SphereGrid {
    /// Builds the grid and its stencils.
    ///
    /// `resolution` is the node count along each polar angle; the azimuth
    /// carries twice as many, so the spacing is `π/resolution` everywhere.
    pub fn build(n: usize, resolution: usize) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::Input(format!(
                "sphere dimension {n} unsupported (use 2 or 3)"
            )));
        }
        if resolution < 8 || !resolution.is_multiple_of(2) {
            return Err(Error::Input(format!(
                "resolution must be even and at least 8, got {resolution}"
            )));
        }
        if n == 3 && resolution > MAX_RESOLUTION_S3 {
            return Err(Error::Input(format!(
                "resolution {resolution} too fine for S^3 (max {MAX_RESOLUTION_S3})"
            )));
        }
        let azimuth_count = 2 * resolution;
        let polar = n - 1;
        let total = resolution.pow(polar as u32) * azimuth_count;
        let half = total / 2;
        let step = PI / resolution as f64;

        let mut grid = Self {
            dim: n,
            resolution,
            azimuth_count,
            coords: vec![0.0; total * (n + 1)],
            frames: vec![0.0; total * n * (n + 1)],
            weights: vec![0.0; total],
            pairs: vec![0; total],
            step,
            grad_ops: Vec::new(),
            hess_ops: Vec::new(),
        };

        let mut idx = vec![0usize; n];
        for node in 0..half {
            grid.unflatten(node, &mut idx);
            let angles = grid.angles_of(&idx);
            let x = embed_angles(&angles);
            let frame = frame_at(&angles);
            let w = grid.cell_weight(&idx);
            let partner = grid.antipode_index(&idx);
            debug_assert!(partner >= half);
            let d = n + 1;
            grid.coords[node * d..(node + 1) * d].copy_from_slice(&x);
            grid.frames[node * n * d..(node + 1) * n * d].copy_from_slice(&frame);
            grid.weights[node] = w;
            grid.pairs[node] = partner;
            grid.pairs[partner] = node;
            for c in 0..d {
                grid.coords[partner * d + c] = -x[c];
            }
            for a in 0..n {
                let s = frame_sign(n, a);
                for c in 0..d {
                    grid.frames[partner * n * d + a * d + c] = s * frame[a * d + c];
                }
            }
            grid.weights[partner] = w;
        }
        grid.build_stencils();
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn azimuth_count(&self) -> usize {
        self.azimuth_count
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Number of antipodal pairs; representatives are nodes `0..half()`.
    pub fn half(&self) -> usize {
        self.len() / 2
    }

    /// Stencil spacing `h = π/N`.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let d = self.dim + 1;
        &self.coords[i * d..(i + 1) * d]
    }

    /// Ambient components of the `a`-th frame vector at node `i`.
    pub fn frame(&self, i: usize, a: usize) -> &[f64] {
        let d = self.dim + 1;
        let base = i * self.dim * d + a * d;
        &self.frames[base..base + d]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn pair(&self, i: usize) -> usize {
        self.pairs[i]
    }

    /// Representative of the antipodal class of `i`.
    pub fn representative(&self, i: usize) -> usize {
        if i < self.half() {
            i
        } else {
            self.pairs[i]
        }
    }

    /// `|Sⁿ|`.
    pub fn sphere_area(&self) -> f64 {
        match self.dim {
            2 => 4.0 * PI,
            _ => 2.0 * PI * PI,
        }
    }

    /// Samples `f(x)` at every node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        ScalarField::new((0..self.len()).map(|i| f(self.node(i))).collect())
    }

    /// Lifts frame components `v` at node `i` into ambient coordinates.
    pub fn to_ambient(&self, i: usize, v: &[f64]) -> Vec<f64> {
        let d = self.dim + 1;
        let mut out = vec![0.0; d];
        for (a, va) in v.iter().enumerate() {
            let e = self.frame(i, a);
            for c in 0..d {
                out[c] += va * e[c];
            }
        }
        out
    }

    /// Gradient stencil for frame direction `a`.
    pub fn grad_op(&self, a: usize) -> &SparseRows {
        &self.grad_ops[a]
    }

    /// Hessian stencil for the frame component `(a, b)`.
    pub fn hess_op(&self, a: usize, b: usize) -> &SparseRows {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        &self.hess_ops[packed_index(self.dim, a, b)]
    }

    fn check_len(&self, f: &ScalarField) {
        assert_eq!(f.len(), self.len(), "field does not belong to this grid");
    }

    /// Discrete covariant gradient, frame components.
    pub fn gradient(&self, f: &ScalarField) -> VectorField {
        self.check_len(f);
        let n = self.dim;
        let mut out = vec![0.0; self.len() * n];
        for (a, op) in self.grad_ops.iter().enumerate() {
            for i in 0..self.len() {
                out[i * n + a] = op.row_dot_centred(i, f.values());
            }
        }
        VectorField::from_raw(n, out)
    }

    /// Discrete covariant Hessian for the round metric; exactly symmetric.
    pub fn hessian(&self, f: &ScalarField) -> TensorField {
        self.check_len(f);
        let n = self.dim;
        let mut out = vec![0.0; self.len() * n * n];
        for a in 0..n {
            for b in a..n {
                let op = self.hess_op(a, b);
                for i in 0..self.len() {
                    let v = op.row_dot_centred(i, f.values());
                    out[i * n * n + a * n + b] = v;
                    out[i * n * n + b * n + a] = v;
                }
            }
        }
        TensorField::from_raw(n, out)
    }

    /// Laplace-Beltrami operator, the trace of [`hessian`](Self::hessian).
    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        self.hessian(f).trace()
    }

    /// `f(x) ← (f(x) + f(−x))/2`.
    pub fn project_even(&self, f: &ScalarField) -> ScalarField {
        self.check_len(f);
        let mut out = f.clone();
        for i in 0..self.half() {
            let j = self.pairs[i];
            let v = 0.5 * (f[i] + f[j]);
            out[i] = v;
            out[j] = v;
        }
        out
    }

    /// `max |f(x) − f(−x)|`.
    pub fn antipodal_gap(&self, f: &ScalarField) -> f64 {
        self.check_len(f);
        (0..self.half())
            .map(|i| (f[i] - f[self.pairs[i]]).abs())
            .fold(0.0, f64::max)
    }

    /// `f ∘ antipode`.
    pub fn antipode(&self, f: &ScalarField) -> ScalarField {
        self.check_len(f);
        ScalarField::new((0..self.len()).map(|i| f[self.pairs[i]]).collect())
    }

    /// Quadrature `Σ w_i f_i`, summed pairwise so that it is bitwise
    /// invariant under the antipodal map.
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        self.check_len(f);
        (0..self.half())
            .map(|i| self.weights[i] * (f[i] + f[self.pairs[i]]))
            .sum()
    }

    // ---- index helpers -------------------------------------------------

    fn unflatten(&self, mut node: usize, idx: &mut [usize]) {
        let n = self.dim;
        idx[n - 1] = node % self.azimuth_count;
        node /= self.azimuth_count;
        for j in (0..n - 1).rev() {
            idx[j] = node % self.resolution;
            node /= self.resolution;
        }
    }

    fn flatten(&self, idx: &[usize]) -> usize {
        let n = self.dim;
        let mut node = 0;
        for &m in &idx[..n - 1] {
            node = node * self.resolution + m;
        }
        node * self.azimuth_count + idx[n - 1]
    }

    fn angles_of(&self, idx: &[usize]) -> Vec<f64> {
        let n = self.dim;
        let mut a = Vec::with_capacity(n);
        for &m in &idx[..n - 1] {
            a.push((m as f64 + 0.5) * self.step);
        }
        a.push(idx[n - 1] as f64 * 2.0 * PI / self.azimuth_count as f64);
        a
    }

    fn antipode_index(&self, idx: &[usize]) -> usize {
        let n = self.dim;
        let mut j = idx.to_vec();
        for m in j.iter_mut().take(n - 1) {
            *m = self.resolution - 1 - *m;
        }
        j[n - 1] = (j[n - 1] + self.azimuth_count / 2) % self.azimuth_count;
        self.flatten(&j)
    }

    /// Folds an extended chart index back into the grid via the reflection
    /// identities `a_j ↦ −a_j` and `a_j ↦ 2π − a_j`, each of which sends every
    /// later polar angle to `π − a` and shifts the azimuth by `π`.
    fn canonical_node(&self, ext: &mut [i64]) -> usize {
        let n = self.dim;
        let big = self.resolution as i64;
        let naz = self.azimuth_count as i64;
        for j in 0..n - 1 {
            let m = ext[j];
            let reflected = if m < 0 {
                Some(-1 - m)
            } else if m >= big {
                Some(2 * big - 1 - m)
            } else {
                None
            };
            if let Some(r) = reflected {
                debug_assert!((0..big).contains(&r));
                ext[j] = r;
                for l in j + 1..n - 1 {
                    ext[l] = big - 1 - ext[l];
                }
                ext[n - 1] += naz / 2;
            }
        }
        let az = ext[n - 1].rem_euclid(naz);
        let mut node = 0usize;
        for &m in &ext[..n - 1] {
            node = node * self.resolution + m as usize;
        }
        node * self.azimuth_count + az as usize
    }

    fn cell_weight(&self, idx: &[usize]) -> f64 {
        let n = self.dim;
        let h = self.step;
        let mut w = 2.0 * PI / self.azimuth_count as f64;
        for (j, &m) in idx[..n - 1].iter().enumerate() {
            let lo = m as f64 * h;
            let hi = lo + h;
            // measure factor sin^{n-1-j}(a_j)
            w *= match n - 1 - j {
                1 => lo.cos() - hi.cos(),
                2 => 0.5 * (hi - lo) - 0.25 * ((2.0 * hi).sin() - (2.0 * lo).sin()),
                _ => hi - lo,
            };
        }
        w
    }

    /// Quintic Lagrange interpolation weights at the unit vector `y`, appended
    /// to `acc` scaled by `scale`.
    fn interpolate_into(&self, y: &[f64], scale: f64, acc: &mut RowAccumulator) {
        let n = self.dim;
        let angles = angles_of_point(y);
        let h = self.step;
        let mut base = vec![0i64; n];
        let mut wts = vec![[0.0f64; INTERP]; n];
        for j in 0..n {
            let s = if j < n - 1 {
                angles[j] / h - 0.5
            } else {
                angles[j] / (2.0 * PI / self.azimuth_count as f64)
            };
            let b = s.floor();
            wts[j] = lagrange6(s - b);
            base[j] = b as i64 - 2;
        }
        let combos = INTERP.pow(n as u32);
        let mut ext = vec![0i64; n];
        for c in 0..combos {
            let mut rem = c;
            let mut w = scale;
            for j in 0..n {
                let o = rem % INTERP;
                rem /= INTERP;
                ext[j] = base[j] + o as i64;
                w *= wts[j][o];
            }
            if w != 0.0 {
                let node = self.canonical_node(&mut ext);
                acc.add(node, w);
            }
        }
    }

    fn build_stencils(&mut self) {
        let n = self.dim;
        let d = n + 1;
        let total = self.len();
        let half = self.half();
        let h = self.step;
        let npacked = n * (n + 1) / 2;
        let mut grad: Vec<Vec<Vec<(usize, f64)>>> = vec![Vec::with_capacity(half); n];
        let mut hess: Vec<Vec<Vec<(usize, f64)>>> = vec![Vec::with_capacity(half); npacked];
        let mut acc = RowAccumulator::new(total);
        let mut y = vec![0.0; d];

        for i in 0..half {
            let x = self.node(i).to_vec();
            let point = |u: &[(usize, f64)], y: &mut Vec<f64>| {
                y[..d].copy_from_slice(&x[..d]);
                for &(a, s) in u {
                    let e = self.frame(i, a);
                    for c in 0..d {
                        y[c] += s * h * e[c];
                    }
                }
                let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                for v in y.iter_mut() {
                    *v /= norm;
                }
            };
            for a in 0..n {
                for (t, w) in [(1.0, 8.0), (2.0, -1.0)] {
                    let s = w / (12.0 * h);
                    point(&[(a, t)], &mut y);
                    self.interpolate_into(&y, s, &mut acc);
                    point(&[(a, -t)], &mut y);
                    self.interpolate_into(&y, -s, &mut acc);
                }
                grad[a].push(zero_sum(acc.drain_sorted(), i));
            }
            for a in 0..n {
                for b in a..n {
                    if a == b {
                        for (t, w) in [(1.0, 16.0), (2.0, -1.0)] {
                            let s = w / (12.0 * h * h);
                            point(&[(a, t)], &mut y);
                            self.interpolate_into(&y, s, &mut acc);
                            point(&[(a, -t)], &mut y);
                            self.interpolate_into(&y, s, &mut acc);
                        }
                        acc.add(i, -30.0 / (12.0 * h * h));
                    } else {
                        for (t, w) in [(1.0, 16.0), (2.0, -1.0)] {
                            let s = w / (48.0 * h * h);
                            for (sa, sb, sign) in [
                                (t, t, 1.0),
                                (t, -t, -1.0),
                                (-t, t, -1.0),
                                (-t, -t, 1.0),
                            ] {
                                point(&[(a, sa), (b, sb)], &mut y);
                                self.interpolate_into(&y, sign * s, &mut acc);
                            }
                        }
                    }
                    hess[packed_index(n, a, b)].push(zero_sum(acc.drain_sorted(), i));
                }
            }
        }

        // (Df)(−x)·e_a(−x) = −s_a (D(f∘A))(x)·e_a(x) and the Hessian picks up
        // s_a s_b, where e_a(−x) = s_a e_a(x) and A is the antipodal map.
        let pairs = &self.pairs;
        let mirror = |rows: &[Vec<(usize, f64)>], sign: f64| {
            let mut out = SparseRows::with_capacity(total, 2 * rows.iter().map(Vec::len).sum::<usize>());
            for r in rows {
                out.push_row(r.iter().copied());
            }
            for j in half..total {
                let mut row: Vec<(usize, f64)> = rows[pairs[j]]
                    .iter()
                    .map(|&(c, v)| (pairs[c], sign * v))
                    .collect();
                row.sort_unstable_by_key(|e| e.0);
                out.push_row(row);
            }
            out
        };
        self.grad_ops = (0..n)
            .map(|a| mirror(&grad[a], -frame_sign(n, a)))
            .collect();
        let mut hess_ops = Vec::with_capacity(npacked);
        for a in 0..n {
            for b in a..n {
                hess_ops.push(mirror(
                    &hess[packed_index(n, a, b)],
                    frame_sign(n, a) * frame_sign(n, b),
                ));
            }
        }
        self.hess_ops = hess_ops;
    }
}

/// Index of `(a, b)`, `a ≤ b`, in row-major packed upper-triangular storage.
fn packed_index(n: usize, a: usize, b: usize) -> usize {
    debug_assert!(a <= b && b < n);
    a * n - a * (a + 1) / 2 + b
}

/// `e_a(−x) = s_a e_a(x)`: polar frame vectors are preserved, the azimuthal
/// one flips.
fn frame_sign(n: usize, a: usize) -> f64 {
    if a == n - 1 {
        -1.0
    } else {
        1.0
    }
}

/// Hyperspherical embedding: `x_0 = cos a_0`, `x_1 = sin a_0 cos a_1`, …,
/// with the last angle the azimuth.
/// Moves the rounding residue of the row sum onto the centre weight, so the
/// row annihilates constants.
fn zero_sum(mut row: Vec<(usize, f64)>, centre: usize) -> Vec<(usize, f64)> {
    let sum: f64 = row.iter().filter(|e| e.0 != centre).map(|e| e.1).sum();
    match row.iter_mut().find(|e| e.0 == centre) {
        Some(e) => e.1 = -sum,
        None => {
            row.push((centre, -sum));
            row.sort_unstable_by_key(|e| e.0);
        }
    }
    row
}

pub(crate) fn embed_angles(angles: &[f64]) -> Vec<f64> {
    let n = angles.len();
    let mut x = vec![0.0; n + 1];
    let mut prod = 1.0;
    for j in 0..n - 1 {
        x[j] = prod * angles[j].cos();
        prod *= angles[j].sin();
    }
    x[n - 1] = prod * angles[n - 1].cos();
    x[n] = prod * angles[n - 1].sin();
    x
}

/// Normalized coordinate vectors `∂x/∂a_j`, row-major `n × (n+1)`.
fn frame_at(angles: &[f64]) -> Vec<f64> {
    let n = angles.len();
    let d = n + 1;
    let mut f = vec![0.0; n * d];
    for j in 0..n - 1 {
        let sub = embed_angles(&angles[j + 1..]);
        f[j * d + j] = -angles[j].sin();
        let c = angles[j].cos();
        for (l, s) in sub.iter().enumerate() {
            f[j * d + j + 1 + l] = c * s;
        }
    }
    let phi = angles[n - 1];
    f[(n - 1) * d + n - 1] = -phi.sin();
    f[(n - 1) * d + n] = phi.cos();
    f
}

/// Inverse of [`embed_angles`] for a unit vector; azimuth in `[0, 2π)`.
fn angles_of_point(y: &[f64]) -> Vec<f64> {
    let n = y.len() - 1;
    let mut a = Vec::with_capacity(n);
    for j in 0..n - 1 {
        let rest = y[j + 1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        a.push(rest.atan2(y[j]));
    }
    let mut phi = y[n].atan2(y[n - 1]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    a.push(phi);
    a
}

const INTERP: usize = 6;

/// Quintic Lagrange weights for nodes at −2, …, 3 evaluated at `t ∈ [0, 1)`.
fn lagrange6(t: f64) -> [f64; INTERP] {
    let mut w = [0.0; INTERP];
    for (j, wj) in w.iter_mut().enumerate() {
        let xj = j as f64 - 2.0;
        let mut v = 1.0;
        for m in 0..INTERP {
            if m != j {
                let xm = m as f64 - 2.0;
                v *= (t - xm) / (xj - xm);
            }
        }
        *wj = v;
    }
    w
}
