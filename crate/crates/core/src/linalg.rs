//! Small dense linear-algebra helpers shared by the model and state-space code.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Spectral radius of a square matrix (largest eigenvalue modulus).
pub fn spectral_radius(a: &Mat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Block companion matrix of the lag polynomial `I - sum_k coeffs[k] L^(k+1)`.
pub fn companion(coeffs: &[Mat], dim: usize) -> Mat {
    let m = coeffs.len();
    let n = dim * m;
    let mut c = Mat::zeros(n, n);
    for (k, b) in coeffs.iter().enumerate() {
        c.view_mut((0, k * dim), (dim, dim)).copy_from(b);
    }
    for k in 1..m {
        for i in 0..dim {
            c[(k * dim + i, (k - 1) * dim + i)] = 1.0;
        }
    }
    c
}

pub fn max_abs(a: &Mat) -> f64 {
    a.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn symmetrize(a: &mut Mat) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

pub fn is_symmetric(a: &Mat, tol: f64) -> bool {
    a.is_square() && max_abs_diff(a, &a.transpose()) <= tol * (1.0 + max_abs(a))
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn spd_inverse(a: &Mat, what: &str) -> Result<Mat> {
    let mut s = a.clone();
    symmetrize(&mut s);
    s.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::IllPosed(format!("{what} is not positive definite")))
}

pub fn is_positive_definite(a: &Mat) -> bool {
    let mut s = a.clone();
    symmetrize(&mut s);
    s.cholesky().is_some()
}

pub fn all_finite(a: &Mat) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Rows `rows` of `a`.
pub fn select_rows(a: &Mat, rows: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)])
}

pub fn select_cols(a: &Mat, cols: &[usize]) -> Mat {
    Mat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

pub fn select_square(a: &Mat, idx: &[usize]) -> Mat {
    Mat::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

/// Nested `Vec` rows into a matrix; `None` when rows are ragged or empty.
pub fn from_rows(rows: &[Vec<f64>]) -> Option<Mat> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return None;
    }
    Some(Mat::from_fn(nr, nc, |i, j| rows[i][j]))
}

pub fn to_rows(a: &Mat) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}
