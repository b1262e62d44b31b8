//! Sparse row storage for stencil operators and a banded LU factorization.

use crate::error::{Error, Result};

/// Compressed sparse rows with `u32` column indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRows {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseRows {
    pub fn new() -> Self {
        Self {
            offsets: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, nnz: usize) -> Self {
        let mut offsets = Vec::with_capacity(rows + 1);
        offsets.push(0);
        Self {
            offsets,
            cols: Vec::with_capacity(nnz),
            vals: Vec::with_capacity(nnz),
        }
    }

    /// Appends one row given as `(column, value)` pairs.
    pub fn push_row<I: IntoIterator<Item = (usize, f64)>>(&mut self, entries: I) {
        for (c, v) in entries {
            self.cols.push(c as u32);
            self.vals.push(v);
        }
        self.offsets.push(self.cols.len());
    }

    pub fn nrows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (c, v) = self.row(i);
        c.iter().zip(v).map(|(&j, &w)| w * x[j as usize]).sum()
    }

    /// `Σ_j a_ij (x_j − x_i)`; equals `row_dot` for zero-sum rows and is
    /// exactly zero on constants.
    pub fn row_dot_centred(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        let xi = x[i];
        cols.iter().zip(vals).map(|(&c, &v)| v * (x[c as usize] - xi)).sum()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.row_dot(i, x)).collect()
    }
}

/// Accumulates a sparse row in a dense scratch buffer.
#[derive(Debug, Clone)]
pub(crate) struct RowAccumulator {
    dense: Vec<f64>,
    mark: Vec<bool>,
    touched: Vec<usize>,
}

impl RowAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            dense: vec![0.0; n],
            mark: vec![false; n],
            touched: Vec::new(),
        }
    }

    pub fn add(&mut self, col: usize, v: f64) {
        if !self.mark[col] {
            self.mark[col] = true;
            self.touched.push(col);
        }
        self.dense[col] += v;
    }

    /// Drains the accumulated entries sorted by column.
    pub fn drain_sorted(&mut self) -> Vec<(usize, f64)> {
        self.touched.sort_unstable();
        let out = self
            .touched
            .iter()
            .map(|&c| (c, self.dense[c]))
            .collect::<Vec<_>>();
        for &c in &self.touched {
            self.dense[c] = 0.0;
            self.mark[c] = false;
        }
        self.touched.clear();
        out
    }
}

/// LU factorization with partial pivoting of a banded matrix.
///
/// Storage follows the LAPACK band layout: column-major with leading
/// dimension `2*kl + ku + 1`, so `A(i, j)` lives at `ab[kl + ku + i - j + j*ld]`.
/// The extra `kl` rows hold the fill-in produced by row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factors the `n×n` matrix given by triplets (duplicates are summed).
    pub fn factor(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut kl = 0;
        let mut ku = 0;
        for &(i, j, _) in entries {
            if i >= n || j >= n {
                return Err(Error::Input(format!("entry ({i},{j}) outside {n}x{n}")));
            }
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        let ld = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ld * n];
        let kv = kl + ku;
        let mut scale = 0.0f64;
        for &(i, j, v) in entries {
            ab[kv + i - j + j * ld] += v;
        }
        for v in &ab {
            scale = scale.max(v.abs());
        }
        let mut lu = Self {
            n,
            kl,
            ku,
            ld,
            ab,
            ipiv: vec![0; n],
        };
        lu.factor_in_place(scale)?;
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        self.kl + self.ku + i - j + j * self.ld
    }

    fn factor_in_place(&mut self, scale: f64) -> Result<()> {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let ld = self.ld;
        let tiny = scale * 1e-14;
        // last column touched by the pivots so far
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = kv + j * ld;
            let mut jp = 0;
            let mut best = self.ab[col].abs();
            for r in 1..=km {
                let v = self.ab[col + r].abs();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            self.ipiv[j] = j + jp;
            if best <= tiny || best == 0.0 {
                return Err(Error::Singular {
                    column: j,
                    pivot: best,
                });
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.at(j, c);
                    let b = self.at(j + jp, c);
                    self.ab.swap(a, b);
                }
            }
            if km > 0 {
                let inv = 1.0 / self.ab[col];
                for r in 1..=km {
                    self.ab[col + r] *= inv;
                }
                for c in j + 1..=ju {
                    let ujc = self.ab[self.at(j, c)];
                    if ujc == 0.0 {
                        continue;
                    }
                    let base = self.at(j + 1, c);
                    for r in 0..km {
                        let l = self.ab[col + 1 + r];
                        self.ab[base + r] -= l * ujc;
                    }
                }
            }
        }
        Ok(())
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n, "right-hand side has wrong length");
        let kv = self.kl + self.ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let lm = self.kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                let col = kv + j * self.ld;
                for r in 1..=lm {
                    b[j + r] -= self.ab[col + r] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[self.at(j, j)];
            let bj = b[j];
            if bj == 0.0 {
                continue;
            }
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                b[i] -= self.ab[self.at(i, j)] * bj;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
