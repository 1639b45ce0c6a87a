//! Two-covariance PLDA: maximum-likelihood training via EM, log-likelihood
//! ratio scoring of embedding pairs, model interpolation and persistence.
//!
//! The generative model draws one latent class center per speaker,
//! `y ~ N(mean, across)`, and observations around it, `x ~ N(y, within)`.
//! The pairwise score is the log ratio of the same-speaker and
//! different-speaker joint densities of two observations.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::transforms::{parse_csv_rows, AffineTransform};

/// Gaussian two-covariance PLDA parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PldaModel {
    pub mean: DVector<f64>,
    /// Across-class (speaker) covariance; positive semi-definite.
    pub across: DMatrix<f64>,
    /// Within-class (channel/session) covariance; positive definite.
    pub within: DMatrix<f64>,
}

impl PldaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check_dims(&self) -> Result<()> {
        let d = self.dim();
        if self.across.shape() != (d, d) || self.within.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "PLDA covariances {:?}/{:?} do not match mean dimension {d}",
                self.across.shape(),
                self.within.shape()
            )));
        }
        Ok(())
    }

    /// Pushes the model through an affine map `y = M(x + s)`: the mean moves
    /// with the data and both covariances become `M C M^T`.
    pub fn transformed(&self, t: &AffineTransform) -> Result<PldaModel> {
        if t.input_dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "transform input dimension {} != PLDA dimension {}",
                t.input_dim(),
                self.dim()
            )));
        }
        Ok(PldaModel {
            mean: t.apply(&self.mean),
            across: &t.matrix * &self.across * t.matrix.transpose(),
            within: &t.matrix * &self.within * t.matrix.transpose(),
        })
    }

    /// Serializes as CSV: dimension header, mean line, `dim` across-class
    /// rows, then `dim` within-class rows.
    pub fn save(&self, path: &Path) -> Result<()> {
        let d = self.dim();
        let mut out = format!("{d}\n");
        push_row(&mut out, self.mean.iter());
        for r in 0..d {
            push_row(&mut out, self.across.row(r).iter());
        }
        for r in 0..d {
            push_row(&mut out, self.within.row(r).iter());
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<PldaModel> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows = parse_csv_rows(&text, path)?;
        if rows.is_empty() {
            return Err(Error::EmptyInput(format!(
                "PLDA file {} is empty",
                path.display()
            )));
        }
        let d = rows[0][0] as usize;
        if rows[0].len() != 1 || d == 0 || rows[0][0].fract() != 0.0 {
            return Err(Error::Format(format!(
                "PLDA file {} must start with a single positive integer dimension",
                path.display()
            )));
        }
        if rows.len() != 2 + 2 * d {
            return Err(Error::Format(format!(
                "PLDA file {} has {} data lines, expected {}",
                path.display(),
                rows.len() - 1,
                1 + 2 * d
            )));
        }
        for (i, r) in rows.iter().enumerate().skip(1) {
            if r.len() != d {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("row has {} values, expected {d}", r.len()),
                ));
            }
        }
        let mean = DVector::from_vec(rows[1].clone());
        let across = DMatrix::from_fn(d, d, |r, c| rows[2 + r][c]);
        let within = DMatrix::from_fn(d, d, |r, c| rows[2 + d + r][c]);
        Ok(PldaModel { mean, across, within })
    }
}

fn push_row<'a>(out: &mut String, values: impl Iterator<Item = &'a f64>) {
    let line = values
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",");
    out.push_str(&line);
    out.push('\n');
}

/// Symmetric pairwise similarity scores with an infinite diagonal sentinel
/// (an embedding has no meaningful similarity with itself; clustering and
/// calibration only ever look at off-diagonal entries).
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: DMatrix<f64>,
}

impl SimilarityMatrix {
    /// Wraps a square matrix, symmetrizing dust and forcing the diagonal
    /// sentinel.
    pub fn new(mut values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::Dimension(format!(
                "similarity matrix must be square, got {:?}",
                values.shape()
            )));
        }
        linalg::symmetrize(&mut values);
        values.fill_diagonal(f64::INFINITY);
        Ok(SimilarityMatrix { values })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Upper-triangle scores (i < j) in row-major order.
    pub fn off_diagonal_scores(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.values[(i, j)]);
            }
        }
        out
    }
}

struct ClassStats {
    n: f64,
    mean: DVector<f64>,
    /// Scatter about the class mean.
    scatter: DMatrix<f64>,
}

fn class_stats(classes: &[Vec<DVector<f64>>], dim: usize) -> Vec<ClassStats> {
    let mut stats = Vec::new();
    for class in classes {
        if class.is_empty() {
            continue;
        }
        let n = class.len() as f64;
        let mut mean = DVector::zeros(dim);
        for x in class {
            mean += x;
        }
        mean /= n;
        let mut scatter = DMatrix::zeros(dim, dim);
        for x in class {
            let d = x - &mean;
            scatter.ger(1.0, &d, &d, 1.0);
        }
        linalg::symmetrize(&mut scatter);
        stats.push(ClassStats { n, mean, scatter });
    }
    stats
}

fn moment_init(stats: &[ClassStats], dim: usize) -> Result<PldaModel> {
    let c = stats.len() as f64;
    let n_total: f64 = stats.iter().map(|s| s.n).sum();
    let mut mean = DVector::zeros(dim);
    for s in stats {
        mean += &s.mean;
    }
    mean /= c;
    let mut across = DMatrix::zeros(dim, dim);
    for s in stats {
        let d = &s.mean - &mean;
        across.ger(1.0 / c, &d, &d, 1.0);
    }
    let mut within = DMatrix::zeros(dim, dim);
    for s in stats {
        within += &s.scatter;
    }
    within /= n_total;
    if within.trace() <= 0.0 {
        return Err(Error::DegenerateInput(
            "PLDA training data has no within-class variation".into(),
        ));
    }
    linalg::symmetrize(&mut across);
    linalg::symmetrize(&mut within);
    Ok(PldaModel { mean, across, within })
}

/// One EM update of all three PLDA parameters given labeled classes.
///
/// The class-center posterior is computed without inverting the across-class
/// covariance, so a singular (even all-zero) `across` is handled exactly.
pub fn em_step(model: &PldaModel, classes: &[Vec<DVector<f64>>]) -> Result<PldaModel> {
    let dim = model.dim();
    let stats = class_stats(classes, dim);
    let c = stats.len() as f64;
    let n_total: f64 = stats.iter().map(|s| s.n).sum();

    // E-step: posterior N(y_c; y_hat_c, phi_c) of each class center.
    let mut y_hat = Vec::with_capacity(stats.len());
    let mut phi = Vec::with_capacity(stats.len());
    for s in &stats {
        let g = &model.across + &model.within / s.n;
        let g_inv = linalg::spd_inverse(&g)?;
        let bg = &model.across * &g_inv;
        y_hat.push(&model.mean + &bg * (&s.mean - &model.mean));
        let mut p = &model.across - &bg * &model.across;
        linalg::symmetrize(&mut p);
        phi.push(p);
    }

    let mut mean = DVector::zeros(dim);
    for y in &y_hat {
        mean += y;
    }
    mean /= c;

    let mut across = DMatrix::zeros(dim, dim);
    for (y, p) in y_hat.iter().zip(&phi) {
        let d = y - &mean;
        across += p;
        across.ger(1.0, &d, &d, 1.0);
    }
    across /= c;

    let mut within = DMatrix::zeros(dim, dim);
    for ((s, y), p) in stats.iter().zip(&y_hat).zip(&phi) {
        let d = &s.mean - y;
        within += &s.scatter;
        within.ger(s.n, &d, &d, 1.0);
        within += p * s.n;
    }
    within /= n_total;

    linalg::symmetrize(&mut across);
    linalg::symmetrize(&mut within);
    Ok(PldaModel { mean, across, within })
}

/// Marginal log-likelihood of labeled classes under the model; EM never
/// decreases this quantity.
pub fn marginal_log_likelihood(model: &PldaModel, classes: &[Vec<DVector<f64>>]) -> Result<f64> {
    let dim = model.dim();
    let stats = class_stats(classes, dim);
    let w_inv = linalg::spd_inverse(&model.within)?;
    let lndet_w = linalg::spd_log_det(&model.within)?;
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let mut total = 0.0;
    for s in &stats {
        let g = &model.across + &model.within / s.n;
        let g_inv = linalg::spd_inverse(&g)?;
        let lndet_g = linalg::spd_log_det(&g)?;
        let d = &s.mean - &model.mean;
        // log N(class mean; mean, across + within/n)
        total += -0.5 * (dim as f64 * ln2pi + lndet_g + d.dot(&(&g_inv * &d)));
        // Within-class deviations around the (integrated-out) center.
        total += -((s.n - 1.0) * dim as f64 / 2.0) * ln2pi
            - ((s.n - 1.0) / 2.0) * lndet_w
            - (dim as f64 / 2.0) * s.n.ln()
            - 0.5 * (&w_inv * &s.scatter).trace();
    }
    Ok(total)
}

/// Trains a PLDA model on labeled classes (one inner vector per speaker)
/// with moment-matched initialization followed by `iterations` EM updates.
pub fn train_em(classes: &[Vec<DVector<f64>>], iterations: usize) -> Result<PldaModel> {
    let nonempty: Vec<&Vec<DVector<f64>>> = classes.iter().filter(|c| !c.is_empty()).collect();
    if nonempty.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "PLDA training needs at least 2 non-empty classes, got {}",
            nonempty.len()
        )));
    }
    let dim = nonempty[0][0].len();
    for class in &nonempty {
        for x in class.iter() {
            if x.len() != dim {
                return Err(Error::Dimension(format!(
                    "inconsistent embedding dimensions in PLDA training ({} vs {dim})",
                    x.len()
                )));
            }
        }
    }
    let stats = class_stats(classes, dim);
    let mut model = moment_init(&stats, dim)?;
    for _ in 0..iterations {
        model = em_step(&model, classes)?;
    }
    Ok(model)
}

/// Convex combination of two models: `alpha * a + (1 - alpha) * b` applied
/// to the mean and both covariances.
pub fn interpolate(a: &PldaModel, b: &PldaModel, alpha: f64) -> Result<PldaModel> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!(
            "interpolation weight must be in [0, 1], got {alpha}"
        )));
    }
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "cannot interpolate PLDA models of dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    a.check_dims()?;
    b.check_dims()?;
    let beta = 1.0 - alpha;
    Ok(PldaModel {
        mean: &a.mean * alpha + &b.mean * beta,
        across: &a.across * alpha + &b.across * beta,
        within: &a.within * alpha + &b.within * beta,
    })
}

/// All-pairs PLDA log-likelihood ratio scores for one recording's embeddings.
///
/// Uses the closed form over the total covariance T = across + within:
/// with centered vectors u, v the score is
/// `u'Pu + v'Pv + u'Qv + const`, where `P = (A1 + A2) / 4`,
/// `Q = (A1 - A2) / 2`, `A1 = inv(T) - inv(T + across)`,
/// `A2 = inv(T) - inv(within)` and
/// `const = (2 ln|T| - ln|T + across| - ln|within|) / 2`.
pub fn llr_matrix(model: &PldaModel, xs: &[DVector<f64>]) -> Result<SimilarityMatrix> {
    model.check_dims()?;
    let dim = model.dim();
    let n = xs.len();
    if n == 0 {
        return Err(Error::EmptyInput("no embeddings to score".into()));
    }
    for x in xs {
        if x.len() != dim {
            return Err(Error::Dimension(format!(
                "embedding dimension {} != PLDA dimension {dim}",
                x.len()
            )));
        }
    }

    let t = &model.across + &model.within;
    let tb = &t + &model.across;
    let t_inv = linalg::spd_inverse(&t)?;
    let tb_inv = linalg::spd_inverse(&tb)?;
    let w_inv = linalg::spd_inverse(&model.within)?;
    let a1 = &t_inv - &tb_inv;
    let a2 = &t_inv - &w_inv;
    let p = (&a1 + &a2) / 4.0;
    let q = (&a1 - &a2) / 2.0;
    let constant =
        (2.0 * linalg::spd_log_det(&t)? - linalg::spd_log_det(&tb)? - linalg::spd_log_det(&model.within)?)
            / 2.0;

    // Centered data as rows.
    let u = DMatrix::from_fn(n, dim, |i, d| xs[i][d] - model.mean[d]);
    let up = &u * &p;
    let self_terms: Vec<f64> = (0..n).map(|i| up.row(i).dot(&u.row(i))).collect();
    let cross = &u * &q * u.transpose();

    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                values[(i, j)] = self_terms[i] + self_terms[j] + cross[(i, j)] + constant;
            }
        }
    }
    SimilarityMatrix::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::CounterRng;
    use nalgebra::{dmatrix, dvector};

    fn log_gaussian(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
        let chol = cov.clone().cholesky().unwrap();
        let lndet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let d = x - mean;
        let sol = chol.solve(&d);
        -0.5 * (x.len() as f64 * (2.0 * std::f64::consts::PI).ln() + lndet + d.dot(&sol))
    }

    fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(a.len() + b.len());
        v.rows_mut(0, a.len()).copy_from(a);
        v.rows_mut(a.len(), b.len()).copy_from(b);
        v
    }

    /// Joint-density oracle for the pair score: evaluates the same-speaker
    /// and different-speaker 2D-dimensional Gaussians directly.
    fn llr_oracle(model: &PldaModel, xi: &DVector<f64>, xj: &DVector<f64>) -> f64 {
        let d = model.dim();
        let t = &model.across + &model.within;
        let mut same = DMatrix::zeros(2 * d, 2 * d);
        let mut diff = DMatrix::zeros(2 * d, 2 * d);
        same.view_mut((0, 0), (d, d)).copy_from(&t);
        same.view_mut((d, d), (d, d)).copy_from(&t);
        same.view_mut((0, d), (d, d)).copy_from(&model.across);
        same.view_mut((d, 0), (d, d)).copy_from(&model.across);
        diff.view_mut((0, 0), (d, d)).copy_from(&t);
        diff.view_mut((d, d), (d, d)).copy_from(&t);
        let mean = stack(&model.mean, &model.mean);
        let x = stack(xi, xj);
        log_gaussian(&x, &mean, &same) - log_gaussian(&x, &mean, &diff)
    }

    fn test_model_3d() -> PldaModel {
        let l = dmatrix![
            1.0, 0.0, 0.0;
            0.4, 0.8, 0.0;
            -0.2, 0.3, 1.1
        ];
        let g = dmatrix![
            1.5, 0.0;
            0.6, 0.9;
            -0.3, 0.5
        ];
        PldaModel {
            mean: dvector![0.5, -1.0, 2.0],
            across: &g * g.transpose(),
            within: &l * l.transpose(),
        }
    }

    #[test]
    fn llr_unit_model_at_origin() {
        // 1-D model with unit covariances scoring two zero vectors: only the
        // constant survives, log((2*2)/3)/2 = 0.5*ln(4/3).
        let model = PldaModel {
            mean: dvector![0.0],
            across: dmatrix![1.0],
            within: dmatrix![1.0],
        };
        let xs = vec![dvector![0.0], dvector![0.0]];
        let sim = llr_matrix(&model, &xs).unwrap();
        let expect = 0.5 * (4f64 / 3.0).ln();
        assert!((sim.get(0, 1) - expect).abs() < 1e-12);
        assert!((sim.get(0, 1) - 0.14384103622589045).abs() < 1e-12);
    }

    #[test]
    fn llr_matches_joint_density_oracle() {
        let model = test_model_3d();
        let xs = vec![
            dvector![1.0, 0.0, 2.5],
            dvector![0.2, -2.0, 1.0],
            dvector![3.0, 1.5, -0.5],
            dvector![0.5, -1.0, 2.0],
        ];
        let sim = llr_matrix(&model, &xs).unwrap();
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                if i == j {
                    assert!(sim.get(i, j).is_infinite() && sim.get(i, j) > 0.0);
                } else {
                    let oracle = llr_oracle(&model, &xs[i], &xs[j]);
                    assert!(
                        (sim.get(i, j) - oracle).abs() < 1e-9,
                        "pair ({i},{j}): {} vs oracle {oracle}",
                        sim.get(i, j)
                    );
                }
            }
        }
    }

    #[test]
    fn llr_symmetric() {
        let model = test_model_3d();
        let mut rng = CounterRng::new(7);
        let xs: Vec<DVector<f64>> = (0..6)
            .map(|_| DVector::from_fn(3, |_, _| rng.standard_normal() * 2.0))
            .collect();
        let sim = llr_matrix(&model, &xs).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(sim.get(i, j), sim.get(j, i));
            }
        }
    }

    #[test]
    fn llr_zero_across_is_exactly_zero() {
        // With no across-class variation the same/different hypotheses are
        // identical, so every score must be exactly 0.0 (not merely small).
        let l = dmatrix![
            1.2, 0.0, 0.0;
            0.1, 0.7, 0.0;
            0.4, -0.2, 1.5
        ];
        let model = PldaModel {
            mean: dvector![1.0, 2.0, 3.0],
            across: DMatrix::zeros(3, 3),
            within: &l * l.transpose(),
        };
        let mut rng = CounterRng::new(11);
        let xs: Vec<DVector<f64>> = (0..5)
            .map(|_| DVector::from_fn(3, |_, _| rng.standard_normal() * 3.0))
            .collect();
        let sim = llr_matrix(&model, &xs).unwrap();
        for s in sim.off_diagonal_scores() {
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn llr_invariant_to_joint_translation() {
        let model = test_model_3d();
        let shift = dvector![5.0, -3.0, 1.5];
        let xs = vec![dvector![1.0, 0.5, -0.2], dvector![-1.0, 2.0, 0.3]];
        let shifted: Vec<DVector<f64>> = xs.iter().map(|x| x + &shift).collect();
        let mut moved = model.clone();
        moved.mean += &shift;
        let a = llr_matrix(&model, &xs).unwrap();
        let b = llr_matrix(&moved, &shifted).unwrap();
        assert!((a.get(0, 1) - b.get(0, 1)).abs() < 1e-9);
    }

    #[test]
    fn marginal_log_likelihood_matches_joint_density() {
        // One class of three 2-D samples: the marginal is a single
        // 6-dimensional Gaussian with block covariance I3 (x) W + J3 (x) B.
        let model = PldaModel {
            mean: dvector![0.5, -0.5],
            across: dmatrix![2.0, 0.3; 0.3, 1.0],
            within: dmatrix![1.0, -0.2; -0.2, 0.8],
        };
        let class = vec![
            dvector![1.0, 0.0],
            dvector![0.0, 1.0],
            dvector![2.0, -1.0],
        ];
        let d = 2;
        let n = 3;
        let mut cov = DMatrix::zeros(n * d, n * d);
        let mut mean = DVector::zeros(n * d);
        for bi in 0..n {
            mean.rows_mut(bi * d, d).copy_from(&model.mean);
            for bj in 0..n {
                let mut block = model.across.clone();
                if bi == bj {
                    block += &model.within;
                }
                cov.view_mut((bi * d, bj * d), (d, d)).copy_from(&block);
            }
        }
        let mut x = DVector::zeros(n * d);
        for (i, v) in class.iter().enumerate() {
            x.rows_mut(i * d, d).copy_from(v);
        }
        let oracle = log_gaussian(&x, &mean, &cov);
        let got = marginal_log_likelihood(&model, &[class]).unwrap();
        assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
    }

    fn sample_classes(
        rng: &mut CounterRng,
        n_classes: usize,
        per_class: usize,
        model: &PldaModel,
    ) -> Vec<Vec<DVector<f64>>> {
        let d = model.dim();
        let b_sqrt = crate::linalg::sym_sqrt(&model.across);
        let w_sqrt = crate::linalg::sym_sqrt(&model.within);
        (0..n_classes)
            .map(|_| {
                let y = &model.mean + &b_sqrt * DVector::from_fn(d, |_, _| rng.standard_normal());
                (0..per_class)
                    .map(|_| &y + &w_sqrt * DVector::from_fn(d, |_, _| rng.standard_normal()))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn em_never_decreases_marginal_log_likelihood() {
        let truth = test_model_3d();
        let mut rng = CounterRng::new(42);
        let classes = sample_classes(&mut rng, 40, 10, &truth);
        let mut model = train_em(&classes, 0).unwrap();
        let mut prev = marginal_log_likelihood(&model, &classes).unwrap();
        for _ in 0..20 {
            model = em_step(&model, &classes).unwrap();
            let ll = marginal_log_likelihood(&model, &classes).unwrap();
            assert!(
                ll >= prev - 1e-8 * prev.abs(),
                "log-likelihood decreased: {prev} -> {ll}"
            );
            prev = ll;
        }
    }

    #[test]
    fn em_recovers_known_covariances() {
        let truth = PldaModel {
            mean: dvector![1.5],
            across: dmatrix![2.0],
            within: dmatrix![1.0],
        };
        let mut rng = CounterRng::new(2024);
        let classes = sample_classes(&mut rng, 3000, 8, &truth);
        let model = train_em(&classes, 30).unwrap();
        assert!(
            (model.across[(0, 0)] - 2.0).abs() < 0.2,
            "across {}",
            model.across[(0, 0)]
        );
        assert!(
            (model.within[(0, 0)] - 1.0).abs() < 0.05,
            "within {}",
            model.within[(0, 0)]
        );
        assert!((model.mean[0] - 1.5).abs() < 0.05, "mean {}", model.mean[0]);
    }

    #[test]
    fn em_collapses_across_when_class_means_coincide() {
        // Every class has exactly the same mean, so the across-class
        // covariance estimate must go to (and stay at) zero.
        let mut classes = Vec::new();
        for scale in [0.5, 1.0, 1.5, 2.0] {
            classes.push(vec![
                dvector![scale, 0.0],
                dvector![-scale, 0.0],
                dvector![0.0, scale],
                dvector![0.0, -scale],
            ]);
        }
        let model = train_em(&classes, 10).unwrap();
        assert!(model.across.norm() < 1e-12, "across {}", model.across.norm());
        assert!(model.within.trace() > 0.1);
    }

    #[test]
    fn train_rejects_insufficient_classes() {
        let one = vec![vec![dvector![1.0], dvector![2.0]]];
        assert!(matches!(
            train_em(&one, 5),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn train_rejects_all_singleton_classes() {
        let classes = vec![vec![dvector![1.0]], vec![dvector![2.0]], vec![dvector![3.0]]];
        assert!(matches!(
            train_em(&classes, 5),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn interpolate_endpoints_and_midpoint() {
        let a = test_model_3d();
        let mut b = test_model_3d();
        b.mean = dvector![0.0, 0.0, 0.0];
        b.across *= 3.0;
        b.within *= 0.5;
        assert_eq!(interpolate(&a, &b, 1.0).unwrap(), a);
        assert_eq!(interpolate(&a, &b, 0.0).unwrap(), b);
        let mid = interpolate(&a, &b, 0.5).unwrap();
        assert!((mid.mean[0] - 0.25).abs() < 1e-12);
        assert!(
            ((&a.across * 0.5 + &b.across * 0.5) - &mid.across).norm() < 1e-12
        );
        assert!(matches!(interpolate(&a, &b, 1.5), Err(Error::Config(_))));
    }

    #[test]
    fn model_save_load_round_trip() {
        let model = test_model_3d();
        let dir = std::env::temp_dir().join("diarkit-plda-tests");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("{}-plda.csv", std::process::id()));
        model.save(&path).unwrap();
        let back = PldaModel::load(&path).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn transformed_model_scores_match_projected_data() {
        // Scoring in a projected space must equal scoring projected vectors
        // with the projected model.
        let model = test_model_3d();
        let t = AffineTransform {
            shift: dvector![0.1, -0.4, 0.2],
            matrix: dmatrix![
                0.9, 0.2, -0.1;
                0.0, 1.1, 0.3
            ],
        };
        let xs = vec![
            dvector![1.0, 0.0, 2.5],
            dvector![0.2, -2.0, 1.0],
            dvector![3.0, 1.5, -0.5],
        ];
        let proj_model = model.transformed(&t).unwrap();
        let proj_xs = t.apply_all(&xs);
        let sim = llr_matrix(&proj_model, &proj_xs).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let oracle = llr_oracle(&proj_model, &proj_xs[i], &proj_xs[j]);
                    assert!((sim.get(i, j) - oracle).abs() < 1e-9);
                }
            }
        }
    }
}
