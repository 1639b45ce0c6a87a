//! Embedding-space transforms: centering/whitening, length normalization,
//! per-recording PCA and the discriminant projection derived from a trained
//! PLDA model, all expressed as a shared shift-then-matrix affine map.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::plda::PldaModel;

/// An affine map `y = matrix * (x + shift)`.
///
/// The shift is applied first so that centering composes naturally with the
/// projection: a whitening or PCA transform stores `-mean` as its shift.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineTransform {
    pub shift: DVector<f64>,
    pub matrix: DMatrix<f64>,
}

impl AffineTransform {
    pub fn identity(dim: usize) -> Self {
        AffineTransform {
            shift: DVector::zeros(dim),
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// Input dimensionality accepted by `apply`.
    pub fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Dimensionality of transformed vectors.
    pub fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * (x + &self.shift)
    }

    pub fn apply_all(&self, xs: &[DVector<f64>]) -> Vec<DVector<f64>> {
        xs.iter().map(|x| self.apply(x)).collect()
    }

    /// Serializes as CSV: one shift line, then one line per matrix row.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&join_row(self.shift.iter()));
        out.push('\n');
        for r in 0..self.matrix.nrows() {
            out.push_str(&join_row(self.matrix.row(r).iter()));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows = parse_csv_rows(&text, path)?;
        if rows.len() < 2 {
            return Err(Error::Format(format!(
                "transform file {} needs a shift line and at least one matrix row",
                path.display()
            )));
        }
        let dim = rows[0].len();
        for (i, r) in rows.iter().enumerate().skip(1) {
            if r.len() != dim {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("row has {} values, expected {dim}", r.len()),
                ));
            }
        }
        let shift = DVector::from_vec(rows[0].clone());
        let matrix = DMatrix::from_fn(rows.len() - 1, dim, |r, c| rows[r + 1][c]);
        Ok(AffineTransform { shift, matrix })
    }
}

fn join_row<'a>(values: impl Iterator<Item = &'a f64>) -> String {
    values
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub(crate) fn parse_csv_rows(text: &str, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in raw.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::parse(path, idx + 1, format!("non-numeric value '{field}'"))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Biased (1/n) sample covariance about the sample mean.
pub fn sample_mean_cov(xs: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = xs.len();
    let dim = xs[0].len();
    let mut mean = DVector::zeros(dim);
    for x in xs {
        mean += x;
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    for x in xs {
        let d = x - &mean;
        cov.ger(1.0 / n as f64, &d, &d, 1.0);
    }
    linalg::symmetrize(&mut cov);
    (mean, cov)
}

/// Estimates a centering + whitening transform from a vector population.
///
/// The covariance diagonal is regularized by `1e-6 * trace / dim` before the
/// inverse symmetric square root is taken, so whitened data has covariance
/// within about 1e-5 of the identity rather than exactly reaching it.
pub fn estimate_center_whiten(xs: &[DVector<f64>]) -> Result<AffineTransform> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "whitening needs at least 2 vectors, got {}",
            xs.len()
        )));
    }
    let (mean, mut cov) = sample_mean_cov(xs);
    if cov.trace() <= 0.0 {
        return Err(Error::DegenerateInput(
            "whitening input has zero covariance (all vectors identical)".into(),
        ));
    }
    linalg::regularize_diagonal(&mut cov, 1e-6);
    let matrix = linalg::sym_inv_sqrt(&cov, 0.0)?;
    Ok(AffineTransform { shift: -mean, matrix })
}

/// Scales a vector to length sqrt(dim). Errors on (near-)zero input.
pub fn length_normalize(x: &DVector<f64>) -> Result<DVector<f64>> {
    let norm = x.norm();
    if norm < 1e-12 {
        return Err(Error::DegenerateInput(
            "cannot length-normalize a zero vector".into(),
        ));
    }
    Ok(x * ((x.len() as f64).sqrt() / norm))
}

pub fn length_normalize_all(xs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    xs.iter().map(length_normalize).collect()
}

/// PCA estimated on one recording's embeddings: centers on the recording
/// mean and keeps the smallest number of leading principal axes whose
/// eigenvalue sum reaches `variance_ratio` of the total (at least one axis).
pub fn per_recording_pca(xs: &[DVector<f64>], variance_ratio: f64) -> Result<AffineTransform> {
    if !(0.0 < variance_ratio && variance_ratio <= 1.0) {
        return Err(Error::Config(format!(
            "PCA variance ratio must be in (0, 1], got {variance_ratio}"
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "PCA needs at least 2 vectors, got {}",
            xs.len()
        )));
    }
    let (mean, cov) = sample_mean_cov(xs);
    let (eigvals, eigvecs) = linalg::sym_eig_sorted(&cov);
    let total: f64 = eigvals.iter().map(|v| v.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateInput(
            "PCA input has zero covariance (all vectors identical)".into(),
        ));
    }
    let mut keep = 1;
    let mut cum = eigvals[0].max(0.0);
    while keep < eigvals.len() && cum < variance_ratio * total - 1e-12 {
        cum += eigvals[keep].max(0.0);
        keep += 1;
    }
    let matrix = eigvecs.columns(0, keep).transpose();
    Ok(AffineTransform { shift: -mean, matrix })
}

/// Derives the discriminant projection that simultaneously diagonalizes a
/// PLDA model's covariances: after the transform the within-speaker
/// covariance is the identity and the across-speaker covariance is diagonal
/// with non-increasing entries. Returns the transform (rows = discriminant
/// directions, shifted by the model mean) together with those diagonal
/// across-speaker variances.
pub fn lda_from_plda(plda: &PldaModel, dim: usize) -> Result<(AffineTransform, DVector<f64>)> {
    let full = plda.dim();
    if dim == 0 || dim > full {
        return Err(Error::Config(format!(
            "discriminant dimension {dim} outside 1..={full}"
        )));
    }
    let mut within = plda.within.clone();
    // A singular within-speaker covariance cannot be whitened; nudge it.
    if within.clone().cholesky().is_none() {
        linalg::regularize_diagonal(&mut within, 1e-8);
    }
    let w_inv_sqrt = linalg::sym_inv_sqrt(&within, 0.0)?;
    let mut j = &w_inv_sqrt * &plda.across * &w_inv_sqrt;
    linalg::symmetrize(&mut j);
    let (eigvals, eigvecs) = linalg::sym_eig_sorted(&j);
    let matrix = eigvecs.columns(0, dim).transpose() * &w_inv_sqrt;
    let phi = DVector::from_fn(dim, |i, _| eigvals[i].max(0.0));
    Ok((
        AffineTransform {
            shift: -plda.mean.clone(),
            matrix,
        },
        phi,
    ))
}
