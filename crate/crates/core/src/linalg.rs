//! Small dense linear algebra.
//!
//! Gaussian elimination here is generic over [`Real`] so that the same code
//! solves a system of plain numbers and propagates derivatives through a
//! system whose entries are jets. Spectral work (SVD rank, Hermitian
//! eigendecomposition, Cholesky) is delegated to `nalgebra`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::exprlang::Real;

/// Row-major square matrix of generic scalars.
pub type Square<T> = Vec<Vec<T>>;

/// Solves `a x = b` by elimination with partial pivoting on the values.
/// Returns `None` if a pivot falls below `pivot_tol`.
pub fn solve<T: Real>(a: &[Vec<T>], b: &[T], pivot_tol: f64) -> Option<Vec<T>> {
    let n = b.len();
    let mut m: Vec<Vec<T>> = a.to_vec();
    let mut rhs: Vec<T> = b.to_vec();
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, m[r][col].value().abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if !(best > pivot_tol) {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let factor = m[r][col].clone() / m[col][col].clone();
            for c in col..n {
                let v = m[r][c].clone() - factor.clone() * m[col][c].clone();
                m[r][c] = v;
            }
            let v = rhs[r].clone() - factor * rhs[col].clone();
            rhs[r] = v;
        }
    }
    let mut x: Vec<T> = rhs.clone();
    for r in (0..n).rev() {
        let mut acc = rhs[r].clone();
        for c in r + 1..n {
            acc = acc - m[r][c].clone() * x[c].clone();
        }
        x[r] = acc / m[r][r].clone();
    }
    Some(x)
}

/// Inverse by solving against each unit vector.
pub fn inverse<T: Real>(a: &[Vec<T>], pivot_tol: f64) -> Option<Square<T>> {
    let n = a.len();
    let zero = a[0][0].lift(0.0);
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<T> = (0..n)
            .map(|i| zero.lift(if i == j { 1.0 } else { 0.0 }))
            .collect();
        cols.push(solve(a, &e, pivot_tol)?);
    }
    Some(
        (0..n)
            .map(|i| (0..n).map(|j| cols[j][i].clone()).collect())
            .collect(),
    )
}

/// Determinant by elimination with partial pivoting.
pub fn determinant<T: Real>(a: &[Vec<T>]) -> T {
    let n = a.len();
    let mut m: Vec<Vec<T>> = a.to_vec();
    let mut det = m[0][0].lift(1.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x][col].value().abs().total_cmp(&m[y][col].value().abs()))
            .unwrap();
        if m[piv][col].value() == 0.0 {
            return det.lift(0.0);
        }
        if piv != col {
            m.swap(col, piv);
            det = -det;
        }
        for r in col + 1..n {
            let factor = m[r][col].clone() / m[col][col].clone();
            for c in col..n {
                let v = m[r][c].clone() - factor.clone() * m[col][c].clone();
                m[r][c] = v;
            }
        }
        det = det * m[col][col].clone();
    }
    det
}

pub fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = if r == 0 { 0 } else { rows[0].len() };
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

/// Numerical rank: singular values above `rel_tol * max(singular value)`.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Minimum-norm least-squares solution of `m x = b`.
pub fn least_squares(m: &DMatrix<f64>, b: &[f64], eps: f64) -> Option<Vec<f64>> {
    let rhs = nalgebra::DVector::from_column_slice(b);
    let svd = m.clone().svd(true, true);
    svd.solve(&rhs, eps).ok().map(|x| x.iter().cloned().collect())
}

/// Columns of the returned matrix form a `g`-orthonormal basis.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = g.clone().cholesky()?;
    // g = L L^T, so the columns of L^{-T} are orthonormal for g
    chol.l().transpose().try_inverse()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
/// The eigenvectors are the columns of the second component.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().cloned().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::Jet2;

    #[test]
    fn solve_with_pivoting() {
        let a = vec![vec![0.0, 2.0], vec![1.0, 1.0]];
        let x = solve(&a, &[4.0, 3.0], 1e-14).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(solve(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 2.0], 1e-12).is_none());
    }

    #[test]
    fn determinant_of_jets_differentiates() {
        // det [[x, 1], [1, y]] = xy - 1
        let v = Jet2::coordinates(&[2.0, 3.0]);
        let one = v[0].lift(1.0);
        let m = vec![vec![v[0].clone(), one.clone()], vec![one, v[1].clone()]];
        let d = determinant(&m);
        assert!((d.value - 5.0).abs() < 1e-14);
        assert!((d.grad[0] - 3.0).abs() < 1e-14 && (d.grad[1] - 2.0).abs() < 1e-14);
        assert!((d.hess_at(0, 1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn frame_is_orthonormal() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let e = orthonormal_frame(&g).unwrap();
        let gram = e.transpose() * &g * &e;
        assert!((gram - DMatrix::identity(2, 2)).abs().max() < 1e-14);
    }
}
