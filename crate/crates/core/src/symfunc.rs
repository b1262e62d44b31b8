//! Elementary symmetric functions of vectors and symmetric matrices.
//!
//! `σ_k(λ)` is evaluated with the coefficient recursion of `Π_i (1 + λ_i t)`,
//! which needs only ring operations, so every vector routine here is generic
//! over [`Scalar`] and exact on rationals. Matrix routines have two routes:
//! sums of principal minors (any field) and the eigenvalue route (real
//! fields), which the tests play against each other.
//!
//! Conventions: `σ_0 = 1`, `σ_m = 0` for `m > n`, and `σ_k(λ|i)`, `σ_k(λ|ij)`
//! mean `σ_k` with the listed entries set to zero.

use nalgebra::{DMatrix, RealField, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An eigenvalue tuple `λ = (λ_1, …, λ_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymVec<T>(Vec<T>);

impl<T: Scalar> SymVec<T> {
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Input("eigenvalue tuple must be non-empty".into()));
        }
        if let Some(i) = entries.iter().position(|x| !is_finite(x)) {
            return Err(Error::Input(format!("entry {i} is not finite")));
        }
        Ok(Self(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn sigma(&self, k: usize) -> T {
        sigma_k(&self.0, k)
    }

    pub fn sigma_deleted(&self, k: usize, deleted: &[usize]) -> Result<T> {
        sigma_k_deleted(&self.0, k, deleted)
    }

    pub fn in_gamma(&self, k: usize) -> bool {
        in_gamma_k(&self.0, k)
    }
}

impl<T> std::ops::Index<usize> for SymVec<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// A real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat<T: Scalar + 'static>(DMatrix<T>);

impl<T: Scalar + 'static> SymMat<T> {
    /// Wraps `m` after checking exact symmetry and finiteness.
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Input(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in 0..n {
                if !is_finite(&m[(i, j)]) {
                    return Err(Error::Input(format!("entry ({i},{j}) is not finite")));
                }
                if j > i && m[(i, j)] != m[(j, i)] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self(m))
    }

    /// Symmetrizes `(m + mᵀ)/2` first; for matrices assembled with rounding noise.
    pub fn symmetrized(m: DMatrix<T>) -> Result<Self> {
        let two = T::one() + T::one();
        let mt = m.transpose();
        let s = (m + mt).map(|x| x / two.clone());
        Self::new(s)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let n = d.len();
        let mut m = DMatrix::from_element(n, n, T::zero());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = v.clone();
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.0
    }
}


fn is_finite<T: Scalar>(x: &T) -> bool {
    // NaN != NaN and inf - inf = NaN; exact types always pass
    let d = x.clone() - x.clone();
    d == T::zero()
}

/// All elementary symmetric functions `σ_0, …, σ_n` of `lambda`.
pub fn elementary_all<T: Scalar>(lambda: &[T]) -> Vec<T> {
    let n = lambda.len();
    let mut e = vec![T::zero(); n + 1];
    e[0] = T::one();
    for (i, l) in lambda.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            let prev = e[j - 1].clone();
            e[j] += l.clone() * prev;
        }
    }
    e
}

/// The k-th elementary symmetric polynomial of `lambda`.
pub fn sigma_k<T: Scalar>(lambda: &[T], k: usize) -> T {
    if k > lambda.len() {
        return T::zero();
    }
    if k == 0 {
        return T::one();
    }
    // only the first k+1 coefficients are needed
    let mut e = vec![T::zero(); k + 1];
    e[0] = T::one();
    for (i, l) in lambda.iter().enumerate() {
        let top = (i + 1).min(k);
        for j in (1..=top).rev() {
            let prev = e[j - 1].clone();
            e[j] += l.clone() * prev;
        }
    }
    e.swap_remove(k)
}

/// `σ_k` of `lambda` with the entries in `deleted` (at most two, distinct) set to zero.
pub fn sigma_k_deleted<T: Scalar>(lambda: &[T], k: usize, deleted: &[usize]) -> Result<T> {
    if deleted.len() > 2 {
        return Err(Error::Input(format!(
            "at most two deleted indices supported, got {}",
            deleted.len()
        )));
    }
    for &d in deleted {
        if d >= lambda.len() {
            return Err(Error::Input(format!(
                "deleted index {d} out of range for length {}",
                lambda.len()
            )));
        }
    }
    if deleted.len() == 2 && deleted[0] == deleted[1] {
        return Err(Error::Input("deleted indices must be distinct".into()));
    }
    let mut v = lambda.to_vec();
    for &d in deleted {
        v[d] = T::zero();
    }
    Ok(sigma_k(&v, k))
}

/// Gårding cone membership: `σ_j(λ) > 0` for `j = 1..=k`.
pub fn in_gamma_k<T: Scalar>(lambda: &[T], k: usize) -> bool {
    let e = elementary_all(lambda);
    (1..=k.min(lambda.len())).all(|j| e[j] > T::zero()) && k <= lambda.len()
}

/// Determinant by Gaussian elimination with partial pivoting on magnitude.
fn det_in_place<T: Scalar>(m: &mut [T], size: usize) -> T {
    let mut det = T::one();
    for c in 0..size {
        let mut piv = c;
        let mut best = m[c * size + c].magnitude();
        for r in c + 1..size {
            let v = m[r * size + c].magnitude();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == T::zero() {
            return T::zero();
        }
        if piv != c {
            for j in 0..size {
                m.swap(c * size + j, piv * size + j);
            }
            det = T::zero() - det;
        }
        let p = m[c * size + c].clone();
        det *= p.clone();
        for r in c + 1..size {
            let f = m[r * size + c].clone() / p.clone();
            if f == T::zero() {
                continue;
            }
            for j in c + 1..size {
                let u = m[c * size + j].clone();
                m[r * size + j] -= f.clone() * u;
            }
        }
    }
    det
}

/// Visits every k-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Sum of the k×k principal minors of a square matrix (no symmetry needed).
pub(crate) fn principal_minor_sum<T: Scalar + 'static>(a: &DMatrix<T>, k: usize) -> T {
    let n = a.nrows();
    if k == 0 {
        return T::one();
    }
    if k > n {
        return T::zero();
    }
    let mut total = T::zero();
    let mut buf = vec![T::zero(); k * k];
    for_each_subset(n, k, |s| {
        for (r, &i) in s.iter().enumerate() {
            for (c, &j) in s.iter().enumerate() {
                buf[r * k + c] = a[(i, j)].clone();
            }
        }
        total += det_in_place(&mut buf, k);
    });
    total
}

/// `σ_k(A) = σ_k(λ(A))`, evaluated as the sum of k×k principal minors.
pub fn sigma_k_matrix<T: Scalar + 'static>(a: &SymMat<T>, k: usize) -> T {
    principal_minor_sum(a.matrix(), k)
}

/// `σ_k(A)` through the eigenvalues of `A`.
pub fn sigma_k_matrix_eigen<T: RealField + Copy>(a: &SymMat<T>, k: usize) -> T {
    let eig = SymmetricEigen::new(a.matrix().clone());
    sigma_k(eig.eigenvalues.as_slice(), k)
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn eigenvalues_ascending<T: RealField + Copy>(a: &SymMat<T>) -> Vec<T> {
    let eig = SymmetricEigen::new(a.matrix().clone());
    let mut v: Vec<T> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// `σ_k^{ij}(A) = ∂σ_k/∂A_ij` via diagonalization: `Q diag(σ_{k-1}(λ|i)) Qᵀ`.
pub fn sigma_k_grad<T: RealField + Copy>(a: &SymMat<T>, k: usize) -> SymMat<T> {
    let n = a.dim();
    if k == 0 || k > n {
        // σ_0 is constant; σ_k ≡ 0 for k > n
        return SymMat(DMatrix::zeros(n, n));
    }
    let eig = SymmetricEigen::new(a.matrix().clone());
    let lam = eig.eigenvalues.as_slice();
    let d: Vec<T> = (0..n)
        .map(|i| sigma_k_deleted(lam, k - 1, &[i]).expect("index in range"))
        .collect();
    let q = &eig.eigenvectors;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut s = T::zero();
            for (m, dm) in d.iter().enumerate() {
                s += q[(i, m)] * *dm * q[(j, m)];
            }
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    SymMat(out)
}

/// `σ_k^{ij}(A)` from the polynomial identity
/// `∂σ_k/∂A = Σ_{m<k} (-1)^m σ_{k-1-m}(A) A^m`; exact on any field.
pub fn sigma_k_grad_poly<T: Scalar + 'static>(a: &SymMat<T>, k: usize) -> SymMat<T> {
    let n = a.dim();
    let mut out = DMatrix::from_element(n, n, T::zero());
    if k == 0 || k > n {
        return SymMat(out);
    }
    let am = a.matrix();
    let mut power = DMatrix::<T>::identity(n, n);
    for m in 0..k {
        let coef = principal_minor_sum(am, k - 1 - m);
        let coef = if m % 2 == 0 { coef } else { T::zero() - coef };
        for i in 0..n {
            for j in 0..n {
                let v = power[(i, j)].clone();
                out[(i, j)] += coef.clone() * v;
            }
        }
        if m + 1 < k {
            power = mat_mul(&power, am);
        }
    }
    // powers of a symmetric matrix are symmetric; pin the rounding
    for i in 0..n {
        for j in i + 1..n {
            let v = out[(i, j)].clone();
            out[(j, i)] = v;
        }
    }
    SymMat(out)
}

fn mat_mul<T: Scalar + 'static>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let mut c = DMatrix::from_element(n, n, T::zero());
    for i in 0..n {
        for l in 0..n {
            let ail = a[(i, l)].clone();
            if ail == T::zero() {
                continue;
            }
            for j in 0..n {
                c[(i, j)] += ail.clone() * b[(l, j)].clone();
            }
        }
    }
    c
}

/// `σ_k^{ij,rs}(A) ξ_ij ξ_rs` evaluated in the eigenbasis of `A`:
/// `Σ_{i≠r} σ_{k-2}(λ|ir) ξ̃_ii ξ̃_rr − Σ_{i≠j} σ_{k-2}(λ|ij) ξ̃_ij ξ̃_ji`.
///
/// For `k < 2` the second derivative vanishes and zero is returned.
/// `xi` need not be symmetric.
pub fn sigma_k_hess_contract<T: RealField + Copy>(a: &SymMat<T>, k: usize, xi: &DMatrix<T>) -> T {
    let n = a.dim();
    assert_eq!(xi.nrows(), n, "direction has wrong shape");
    assert_eq!(xi.ncols(), n, "direction has wrong shape");
    if k < 2 || k > n {
        return T::zero();
    }
    let eig = SymmetricEigen::new(a.matrix().clone());
    let lam = eig.eigenvalues.as_slice();
    let q = &eig.eigenvectors;
    let xt = q.transpose() * xi * q;
    let mut total = T::zero();
    for i in 0..n {
        for r in 0..n {
            if i == r {
                continue;
            }
            let s = sigma_k_deleted(lam, k - 2, &[i, r]).expect("indices in range");
            total += s * (xt[(i, i)] * xt[(r, r)] - xt[(i, r)] * xt[(r, i)]);
        }
    }
    total
}

/// Both sides of the inverse-concavity inequality for positive definite `A`
/// and symmetric `ξ`:
/// `lhs = σ_k^{ij,rs}ξ_ij ξ_rs + 2σ_k^{ir}A^{js}ξ_ij ξ_rs`,
/// `rhs = (k+1)/k · (σ_k^{ij}ξ_ij)² / σ_k`.
pub fn inverse_concavity_terms<T: RealField + Copy>(a: &SymMat<T>, k: usize, xi: &SymMat<T>) -> (T, T) {
    let n = a.dim();
    let eig = SymmetricEigen::new(a.matrix().clone());
    let lam = eig.eigenvalues.as_slice();
    let q = &eig.eigenvectors;
    let xt = q.transpose() * xi.matrix() * q;
    let hess = sigma_k_hess_contract(a, k, xi.matrix());
    let mut cross = T::zero();
    let mut first = T::zero();
    for i in 0..n {
        let di = sigma_k_deleted(lam, k - 1, &[i]).expect("index in range");
        first += di * xt[(i, i)];
        for j in 0..n {
            cross += di / lam[j] * xt[(i, j)] * xt[(i, j)];
        }
    }
    let two = T::one() + T::one();
    let kk = T::from_usize(k).expect("small k");
    let lhs = hess + two * cross;
    let rhs = (kk + T::one()) / kk * first * first / sigma_k(lam, k);
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn m(rows: &[&[f64]]) -> SymMat<f64> {
        let n = rows.len();
        SymMat::new(DMatrix::from_fn(n, n, |i, j| rows[i][j])).unwrap()
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_k(&[1.0, 1.0, 1.0], 2), 3.0);
        assert_eq!(sigma_k(&[1.0, 2.0, 3.0], 2), 11.0);
        assert_eq!(sigma_k(&[1.0, 2.0, 3.0], 4), 0.0);
        assert_eq!(sigma_k(&[4.0, 5.0], 0), 1.0);
    }

    #[test]
    fn deleted_examples() {
        assert_eq!(sigma_k_deleted(&[1.0, 2.0, 3.0], 1, &[1]).unwrap(), 4.0);
        assert_eq!(sigma_k_deleted(&[5.0], 1, &[0]).unwrap(), 0.0);
        assert_eq!(sigma_k_deleted(&[1.0, 2.0, 3.0], 2, &[0, 2]).unwrap(), 0.0);
    }

    #[test]
    fn deleted_rejects_bad_indices() {
        assert!(sigma_k_deleted(&[1.0, 2.0], 1, &[2]).is_err());
        assert!(sigma_k_deleted(&[1.0, 2.0], 1, &[1, 1]).is_err());
        assert!(sigma_k_deleted(&[1.0, 2.0, 3.0], 1, &[0, 1, 2]).is_err());
    }

    #[test]
    fn matrix_examples() {
        assert_eq!(sigma_k_matrix(&SymMat::<f64>::identity(3), 2), 3.0);
        let d = SymMat::<f64>::from_diagonal(&[1.0, 2.0, 3.0]);
        assert!((sigma_k_matrix(&d, 3) - 6.0).abs() < 1e-14);
        let a = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        assert!((sigma_k_matrix(&a, 2) - 3.0).abs() < 1e-14);
        assert!((sigma_k_matrix_eigen(&a, 2) - 3.0).abs() < 1e-13);
    }

    #[test]
    fn non_symmetric_rejected() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(SymMat::new(bad), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn exact_on_rationals() {
        let r = |a: i64, b: i64| Ratio::new(a, b);
        let lam = [r(1, 2), r(-1, 3), r(5, 7)];
        // σ2 = (1/2)(-1/3) + (1/2)(5/7) + (-1/3)(5/7) = -1/6 + 5/14 - 5/21
        assert_eq!(sigma_k(&lam, 2), r(-1, 6) + r(5, 14) - r(5, 21));
        let a = SymMat::new(DMatrix::from_row_slice(
            2,
            2,
            &[r(2, 1), r(1, 1), r(1, 1), r(2, 1)],
        ))
        .unwrap();
        assert_eq!(sigma_k_matrix(&a, 2), r(3, 1));
        let g = sigma_k_grad_poly(&a, 2);
        // ∂det/∂A = cofactor matrix
        assert_eq!(g.matrix()[(0, 0)], r(2, 1));
        assert_eq!(g.matrix()[(0, 1)], r(-1, 1));
    }

    #[test]
    fn grad_examples() {
        let g = sigma_k_grad(&SymMat::<f64>::identity(3), 2);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 } else { 0.0 };
                assert!((g.matrix()[(i, j)] - want).abs() < 1e-14);
            }
        }
        let g = sigma_k_grad(&SymMat::from_diagonal(&[1.0, 2.0, 3.0]), 1);
        assert!((g.matrix() - DMatrix::<f64>::identity(3, 3)).amax() < 1e-14);
        let g0 = sigma_k_grad(&SymMat::from_diagonal(&[1.0, 2.0]), 0);
        assert_eq!(g0.matrix().amax(), 0.0);
    }

    #[test]
    fn hess_examples() {
        let id = SymMat::<f64>::identity(3);
        let v = sigma_k_hess_contract(&id, 2, id.matrix());
        assert!((v - 6.0).abs() < 1e-13);
        let z = DMatrix::zeros(3, 3);
        assert_eq!(sigma_k_hess_contract(&id, 2, &z), 0.0);
        assert_eq!(sigma_k_hess_contract(&id, 1, id.matrix()), 0.0);
    }

    #[test]
    fn gamma_examples() {
        assert!(in_gamma_k(&[1.0, 1.0, 1.0], 3));
        assert!(!in_gamma_k(&[-1.0, -1.0, -1.0], 2));
        assert!(in_gamma_k(&[3.0, 1.0, -1.0], 1));
    }

    #[test]
    fn subsets_enumerated() {
        let mut count = 0;
        for_each_subset(5, 2, |_| count += 1);
        assert_eq!(count, 10);
        let mut count = 0;
        for_each_subset(3, 3, |s| {
            assert_eq!(s, &[0, 1, 2]);
            count += 1
        });
        assert_eq!(count, 1);
    }
}
