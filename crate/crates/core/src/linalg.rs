//! Dense complex matrix kernels shared by every level computation.
//!
//! Everything here works on square [`CMatrix`] blocks: operator norms from the
//! singular value decomposition, eigenvalues from a unitary (Schur)
//! triangularization, and the rank computations used for kernel/image checks.

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const SCHUR_EPS: f64 = 1e-15;
const MAX_ITER: usize = 0; // nalgebra: 0 means "iterate until converged"
const SVD_MAX_ITER: usize = 10_000;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest singular value; zero for an empty matrix.
pub fn op_norm(m: &CMatrix) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    if m.iter().all(|z| *z == ZERO) {
        return Ok(0.0);
    }
    if m.nrows() == 1 && m.ncols() == 1 {
        return Ok(m[(0, 0)].norm());
    }
    if let Some(n) = monomial_norm(m) {
        return Ok(n);
    }
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::SvdNonConvergence {
            rows: m.nrows(),
            cols: m.ncols(),
        })?;
    Ok(svd.singular_values.max())
}

/// At most one nonzero per row and per column (a weighted partial
/// permutation): the singular values are the moduli of the nonzeros.
fn monomial_norm(m: &CMatrix) -> Option<f64> {
    let mut col_seen = vec![false; m.ncols()];
    let mut best = 0.0f64;
    for i in 0..m.nrows() {
        let mut row_seen = false;
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            if z != ZERO {
                if row_seen || col_seen[j] {
                    return None;
                }
                row_seen = true;
                col_seen[j] = true;
                best = best.max(z.norm());
            }
        }
    }
    Some(best)
}

pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::SvdNonConvergence {
            rows: m.nrows(),
            cols: m.ncols(),
        })?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Orthonormal basis (as columns) of the null space of `m`: right singular
/// vectors whose singular value is at most `tol * max(1, sigma_max)`.
pub fn null_space(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    // pad to square so the SVD returns a full set of right singular vectors
    let n = rows.max(cols);
    let mut sq = CMatrix::zeros(n, n);
    sq.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = sq
        .try_svd(false, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::SvdNonConvergence { rows, cols })?;
    let v_t = svd.v_t.expect("requested");
    let scale = svd.singular_values.max().max(1.0);
    let keep: Vec<usize> = (0..n)
        .filter(|&k| svd.singular_values[k] <= tol * scale)
        .collect();
    let mut basis = CMatrix::zeros(cols, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        for i in 0..cols {
            basis[(i, c)] = v_t[(k, i)].conj();
        }
    }
    Ok(basis)
}

/// Minimum-norm least-squares solution of `m x = b`.
pub fn least_squares(m: &CMatrix, b: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Ok(CMatrix::zeros(0, b.ncols()));
    }
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::SvdNonConvergence { rows, cols })?;
    let cutoff = tol * svd.singular_values.max().max(1.0);
    svd.solve(b, cutoff).map_err(|e| Error::Precondition(e.to_string()))
}

/// Numerical rank: singular values above `tol * max(1, sigma_max)`.
pub fn rank(m: &CMatrix, tol: f64) -> Result<usize> {
    let s = singular_values(m)?;
    let scale = s.first().copied().unwrap_or(0.0).max(1.0);
    Ok(s.iter().filter(|&&x| x > tol * scale).count())
}

pub fn is_upper_triangular(m: &CMatrix) -> bool {
    let n = m.nrows();
    (0..n).all(|j| ((j + 1)..n).all(|i| m[(i, j)] == ZERO))
}

pub fn is_diagonal(m: &CMatrix) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (0..n).all(|i| i == j || m[(i, j)] == ZERO))
}

pub fn is_hermitian_exact(m: &CMatrix) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (j..n).all(|i| m[(i, j)] == m[(j, i)].conj()))
}

/// Unitary triangularization `m = Q T Q*` with `T` upper triangular.
///
/// `block` only labels the diagnostic on failure.
pub fn schur(m: &CMatrix, block: usize) -> Result<(CMatrix, CMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)));
    }
    if is_upper_triangular(m) {
        return Ok((CMatrix::identity(n, n), m.clone()));
    }
    let schur = Schur::try_new(m.clone(), SCHUR_EPS, MAX_ITER)
        .ok_or(Error::EigenNonConvergence { block, size: n })?;
    let (q, mut t) = schur.unpack();
    // nalgebra leaves rounding noise below the diagonal
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = ZERO;
        }
    }
    Ok((q, t))
}

pub fn eigenvalues(m: &CMatrix, block: usize) -> Result<Vec<Complex64>> {
    if is_upper_triangular(m) {
        return Ok(m.diagonal().iter().copied().collect());
    }
    if is_hermitian_exact(m) {
        let (vals, _) = hermitian_eigen(m, block)?;
        return Ok(vals.into_iter().map(|x| Complex64::new(x, 0.0)).collect());
    }
    let (_, t) = schur(m, block)?;
    Ok(t.diagonal().iter().copied().collect())
}

/// Eigen-decomposition of a Hermitian matrix; the input's anti-Hermitian part is
/// discarded.
pub fn hermitian_eigen(m: &CMatrix, block: usize) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    if is_diagonal(m) {
        return Ok((
            m.diagonal().iter().map(|z| z.re).collect(),
            CMatrix::identity(n, n),
        ));
    }
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(h, SCHUR_EPS, MAX_ITER)
        .ok_or(Error::EigenNonConvergence { block, size: n })?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

/// Largest modulus in the strictly upper part of `t`.
pub fn off_diagonal_residue(t: &CMatrix) -> f64 {
    let n = t.nrows();
    let mut off = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            off = off.max(t[(i, j)].norm());
        }
    }
    off
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Solves `a x = b` for square `a` via LU with partial pivoting.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Precondition("linear system is singular".into()))
}

/// Collapses points closer than `tol` (single linkage) to their centroid.
/// Output is sorted by (re, im) so equal inputs give identical outputs.
pub fn cluster_points(points: &[Complex64], tol: f64) -> Vec<Complex64> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i] - points[j]).norm() < tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj] = ri;
                }
            }
        }
    }
    let mut sums: std::collections::BTreeMap<usize, (Complex64, usize)> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        let e = sums.entry(r).or_insert((ZERO, 0));
        e.0 += points[i];
        e.1 += 1;
    }
    let mut out: Vec<Complex64> = sums.values().map(|(s, c)| s / *c as f64).collect();
    sort_points(&mut out);
    out
}

pub fn sort_points(points: &mut [Complex64]) {
    points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// max over `a` of the distance to the nearest point of `b`.
pub fn one_sided_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .map(|x| {
            b.iter()
                .map(|y| (x - y).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

pub fn hausdorff_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    one_sided_distance(a, b).max(one_sided_distance(b, a))
}

/// Unitary defect `max(|u*u - 1|, |uu* - 1|)` in operator norm.
pub fn unitary_defect(u: &CMatrix) -> Result<f64> {
    let n = u.nrows();
    let id = CMatrix::identity(n, n);
    let a = op_norm(&(u.adjoint() * u - &id))?;
    let b = op_norm(&(u * u.adjoint() - &id))?;
    Ok(a.max(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norm_of_diagonal_is_max_modulus() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, -3.0)]));
        assert!((op_norm(&m).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn triangular_fast_path_is_exact() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 1)] = c(1.0, 0.0);
        m[(1, 2)] = c(2.0, 0.0);
        m[(2, 3)] = c(3.0, 0.0);
        let ev = eigenvalues(&m, 0).unwrap();
        assert!(ev.iter().all(|z| *z == ZERO));
    }

    #[test]
    fn schur_of_rotation() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let mut ev = eigenvalues(&m, 0).unwrap();
        sort_points(&mut ev);
        assert!((ev[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn clustering_merges_close_points() {
        let pts = [c(0.0, 0.0), c(1e-10, 0.0), c(1.0, 0.0)];
        let out = cluster_points(&pts, 1e-8);
        assert_eq!(out.len(), 2);
        assert!((out[0] - c(5e-11, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn monomial_fast_path_matches_svd() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 2)] = c(3.0, 4.0);
        m[(1, 0)] = c(-2.0, 0.0);
        m[(3, 1)] = c(0.0, 1.0);
        assert_eq!(op_norm(&m).unwrap(), 5.0);
        let via_svd = singular_values(&m).unwrap()[0];
        assert!((via_svd - 5.0).abs() < 1e-14);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = CMatrix::from_row_slice(1, 3, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let ns = null_space(&m, 1e-10).unwrap();
        assert_eq!(ns.ncols(), 2);
        assert!(max_abs_entry(&(&m * &ns)) < 1e-14);
        let gram = ns.adjoint() * &ns;
        assert!(max_abs_entry(&(gram - CMatrix::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn rank_of_rank_one() {
        let v = CMatrix::from_column_slice(3, 1, &[c(1.0, 0.0), c(2.0, 1.0), c(0.0, 1.0)]);
        let m = &v * v.adjoint();
        assert_eq!(rank(&m, 1e-10).unwrap(), 1);
    }
}
