//! Small dense linear-algebra helpers shared by the model modules.
//!
//! Everything here wraps nalgebra with the conventions the engine relies on:
//! eigenvalues sorted in non-increasing order, a deterministic eigenvector
//! sign (first non-negligible entry positive), and trace-relative diagonal
//! regularization for near-singular covariances.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// non-increasing order. Ties are broken by lexicographic comparison of the
/// (sign-fixed) eigenvectors so the output is deterministic even for
/// degenerate spectra.
pub fn sym_eig_sorted(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    assert_eq!(m.nrows(), m.ncols(), "sym_eig_sorted: square matrix required");
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut cols: Vec<(f64, DVector<f64>)> = (0..n)
        .map(|i| {
            let mut v = eig.eigenvectors.column(i).clone_owned();
            fix_sign(&mut v);
            (eig.eigenvalues[i], v)
        })
        .collect();
    cols.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| lex_cmp(&a.1, &b.1))
    });
    let values = DVector::from_iterator(n, cols.iter().map(|c| c.0));
    let mut vectors = DMatrix::zeros(n, n);
    for (i, (_, v)) in cols.iter().enumerate() {
        vectors.set_column(i, v);
    }
    (values, vectors)
}

/// Flip `v` so its first entry of non-negligible magnitude is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    let tol = 1e-12 * norm;
    for &x in v.iter() {
        if x.abs() > tol {
            if x < 0.0 {
                v.neg_mut();
            }
            return;
        }
    }
}

fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(ord) => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

/// Symmetric inverse square root `m^{-1/2}` of a positive definite matrix.
///
/// Eigenvalues at or below `floor` (absolute) are rejected.
pub fn sym_inv_sqrt(m: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eig_sorted(m);
    if vals.iter().any(|&l| l <= floor) {
        return Err(Error::Numerical(format!(
            "matrix not positive definite (min eigenvalue {:.3e})",
            vals.min()
        )));
    }
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| vecs[(i, j)] / vals[j].sqrt());
    Ok(&scaled * vecs.transpose())
}

/// Symmetric square root of a positive semi-definite matrix. Slightly
/// negative eigenvalues from round-off are clamped to zero.
pub fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eig_sorted(m);
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        vecs[(i, j)] * vals[j].max(0.0).sqrt()
    });
    &scaled * vecs.transpose()
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Numerical("matrix not positive definite in Cholesky".into()))
}

/// Log-determinant of a symmetric positive definite matrix.
pub fn spd_log_det(m: &DMatrix<f64>) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix not positive definite in Cholesky".into()))?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Add `scale * trace(m)/dim` to the diagonal.
pub fn regularize_diagonal(m: &mut DMatrix<f64>, scale: f64) {
    let d = m.nrows();
    if d == 0 {
        return;
    }
    let bump = scale * m.trace() / d as f64;
    for i in 0..d {
        m[(i, i)] += bump;
    }
}

/// Force exact symmetry by averaging with the transpose.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Numerically stable `ln(sum(exp(xs)))`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
