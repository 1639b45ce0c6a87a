//! Frame-level diarization refinement: a single variational pass over
//! acoustic frames with speakers modeled in a low-rank eigenvoice subspace
//! of a diagonal-covariance GMM. The segment-level hypothesis provides the
//! initial frame responsibilities; the pass re-estimates speaker
//! coordinates, smooths frame posteriors through a minimum-duration HMM,
//! and returns refined responsibilities on the original frame grid.
//!
//! For tractability, component responsibilities are computed once against
//! the speaker-independent mixture, and sufficient statistics are averaged
//! over fixed-size frame blocks before inference; block posteriors are
//! replicated back to frames afterwards.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::io::DiarizationHypothesis;
use crate::transforms::parse_csv_rows;
use crate::vbhmm::{forward_backward, SoftAssignment, SpeakerPosterior};

/// Diagonal-covariance GMM with a shared low-rank mean-offset subspace:
/// a speaker with coordinate `y` (standard normal prior) shifts component
/// `c`'s mean by `subspace_block(c) * y`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvoiceModel {
    /// Mixture weights, length C, positive, summing to one.
    pub weights: DVector<f64>,
    /// Component means, C x F.
    pub means: DMatrix<f64>,
    /// Per-component diagonal covariances, C x F, strictly positive.
    pub diag_covs: DMatrix<f64>,
    /// Stacked mean-offset directions, (C * F) x R; rows `c*F .. (c+1)*F`
    /// belong to component c.
    pub subspace: DMatrix<f64>,
}

impl EigenvoiceModel {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.means.ncols()
    }

    pub fn rank(&self) -> usize {
        self.subspace.ncols()
    }

    pub fn component_mean(&self, c: usize) -> DVector<f64> {
        self.means.row(c).transpose()
    }

    /// The F x R block of offset directions for component c.
    pub fn subspace_block(&self, c: usize) -> DMatrix<f64> {
        let f = self.feature_dim();
        self.subspace.rows(c * f, f).into_owned()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.components();
        let f = self.feature_dim();
        if c == 0 || f == 0 || self.rank() == 0 {
            return Err(Error::Format(
                "eigenvoice model must have components, features and rank".into(),
            ));
        }
        if self.means.nrows() != c || self.diag_covs.shape() != (c, f) {
            return Err(Error::Dimension(format!(
                "inconsistent eigenvoice shapes: {} weights, means {:?}, covariances {:?}",
                c,
                self.means.shape(),
                self.diag_covs.shape()
            )));
        }
        if self.subspace.nrows() != c * f {
            return Err(Error::Dimension(format!(
                "subspace has {} rows, expected {}",
                self.subspace.nrows(),
                c * f
            )));
        }
        if self.weights.iter().any(|&w| w <= 0.0) || (self.weights.sum() - 1.0).abs() > 1e-12 {
            return Err(Error::Format(
                "mixture weights must be positive and sum to one".into(),
            ));
        }
        if self.diag_covs.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Format(
                "component covariances must be strictly positive".into(),
            ));
        }
        Ok(())
    }

    /// A small fixed model (4 components in 2 dimensions, rank 2) for
    /// examples and tests.
    pub fn toy_example() -> EigenvoiceModel {
        let weights = DVector::from_element(4, 0.25);
        let means = DMatrix::from_row_slice(4, 2, &[3.0, 3.0, 3.0, -3.0, -3.0, 3.0, -3.0, -3.0]);
        let diag_covs = DMatrix::from_element(4, 2, 0.3);
        let subspace = DMatrix::from_row_slice(
            8,
            2,
            &[
                1.0, 0.4, //
                0.2, 1.0, //
                0.9, -0.3, //
                0.4, 0.8, //
                1.1, 0.2, //
                -0.3, 0.9, //
                0.8, 0.5, //
                0.3, 1.2,
            ],
        );
        EigenvoiceModel { weights, means, diag_covs, subspace }
    }

    /// Writes the model as CSV: a `C,F,R` header, the weights, then C mean
    /// rows, C covariance rows and C*F subspace rows.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        self.validate()?;
        let mut out = String::new();
        out.push_str(&format!(
            "{},{},{}\n",
            self.components(),
            self.feature_dim(),
            self.rank()
        ));
        let push_row = |out: &mut String, row: &[f64]| {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        };
        push_row(&mut out, self.weights.as_slice());
        for c in 0..self.components() {
            push_row(&mut out, &self.means.row(c).iter().copied().collect::<Vec<_>>());
        }
        for c in 0..self.components() {
            push_row(
                &mut out,
                &self.diag_covs.row(c).iter().copied().collect::<Vec<_>>(),
            );
        }
        for r in 0..self.subspace.nrows() {
            push_row(
                &mut out,
                &self.subspace.row(r).iter().copied().collect::<Vec<_>>(),
            );
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<EigenvoiceModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows = parse_csv_rows(&text, path)?;
        if rows.len() < 2 {
            return Err(Error::Format(format!(
                "eigenvoice file {} is truncated",
                path.display()
            )));
        }
        let header = &rows[0];
        if header.len() != 3 {
            return Err(Error::Format(format!(
                "eigenvoice header in {} must hold components,features,rank",
                path.display()
            )));
        }
        let (c, f, r) = (header[0] as usize, header[1] as usize, header[2] as usize);
        let expected = 1 + 1 + c + c + c * f;
        if rows.len() != expected {
            return Err(Error::Format(format!(
                "eigenvoice file {} has {} rows, expected {expected}",
                path.display(),
                rows.len()
            )));
        }
        let row_vec = |row: &Vec<f64>, len: usize, what: &str| -> Result<Vec<f64>> {
            if row.len() != len {
                return Err(Error::Format(format!(
                    "{what} row in {} has {} values, expected {len}",
                    path.display(),
                    row.len()
                )));
            }
            Ok(row.clone())
        };
        let weights = DVector::from_vec(row_vec(&rows[1], c, "weight")?);
        let mut means = DMatrix::zeros(c, f);
        let mut diag_covs = DMatrix::zeros(c, f);
        for ci in 0..c {
            let m = row_vec(&rows[2 + ci], f, "mean")?;
            let v = row_vec(&rows[2 + c + ci], f, "covariance")?;
            for d in 0..f {
                means[(ci, d)] = m[d];
                diag_covs[(ci, d)] = v[d];
            }
        }
        let mut subspace = DMatrix::zeros(c * f, r);
        for row in 0..c * f {
            let v = row_vec(&rows[2 + 2 * c + row], r, "subspace")?;
            for col in 0..r {
                subspace[(row, col)] = v[col];
            }
        }
        let model = EigenvoiceModel { weights, means, diag_covs, subspace };
        model.validate()?;
        Ok(model)
    }
}

/// Settings for the frame-level pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameVbConfig {
    /// Scale on frame log-likelihoods compensating frame correlation; > 0.
    pub acoustic_scale: f64,
    /// HMM self-transition probability, in (0, 1).
    pub loop_probability: f64,
    /// Minimum speaker-turn length in blocks; 1 disables the constraint.
    pub min_duration: usize,
    /// Number of frames whose statistics are averaged into one block.
    pub downsample: usize,
}

impl Default for FrameVbConfig {
    fn default() -> Self {
        FrameVbConfig {
            acoustic_scale: 0.1,
            loop_probability: 0.95,
            min_duration: 1,
            downsample: 5,
        }
    }
}

impl FrameVbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.acoustic_scale <= 0.0 {
            return Err(Error::Config(format!(
                "acoustic scale {} not positive",
                self.acoustic_scale
            )));
        }
        if !(self.loop_probability > 0.0 && self.loop_probability < 1.0) {
            return Err(Error::Config(format!(
                "loop probability {} outside (0, 1)",
                self.loop_probability
            )));
        }
        if self.min_duration == 0 {
            return Err(Error::Config("minimum duration must be at least 1".into()));
        }
        if self.downsample == 0 {
            return Err(Error::Config("downsample factor must be at least 1".into()));
        }
        Ok(())
    }
}

/// Soft component responsibilities of every frame under the
/// speaker-independent mixture (T x C, rows sum to one). Computed once and
/// held fixed through the speaker pass.
pub fn ubm_responsibilities(
    model: &EigenvoiceModel,
    frames: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    model.validate()?;
    let f = model.feature_dim();
    if frames.ncols() != f {
        return Err(Error::Dimension(format!(
            "frames have {} features, model expects {f}",
            frames.ncols()
        )));
    }
    let c_len = model.components();
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    // Per-component constants: ln w_c - 1/2 sum_d ln(2 pi sigma^2).
    let consts: Vec<f64> = (0..c_len)
        .map(|c| {
            let mut acc = model.weights[c].ln();
            for d in 0..f {
                acc -= 0.5 * (ln2pi + model.diag_covs[(c, d)].ln());
            }
            acc
        })
        .collect();
    let t_len = frames.nrows();
    let mut resp = DMatrix::zeros(t_len, c_len);
    let mut logs = vec![0.0f64; c_len];
    for t in 0..t_len {
        for (c, slot) in logs.iter_mut().enumerate() {
            let mut q = 0.0;
            for d in 0..f {
                let diff = frames[(t, d)] - model.means[(c, d)];
                q += diff * diff / model.diag_covs[(c, d)];
            }
            *slot = consts[c] - 0.5 * q;
        }
        let norm = crate::linalg::log_sum_exp(&logs);
        if !norm.is_finite() {
            return Err(Error::Numerical(format!(
                "frame {t} has non-finite mixture likelihood"
            )));
        }
        for c in 0..c_len {
            resp[(t, c)] = (logs[c] - norm).exp();
        }
    }
    Ok(resp)
}

/// Sufficient statistics averaged over consecutive frame blocks.
#[derive(Debug, Clone)]
pub struct BlockStats {
    /// Averaged component responsibilities, B x C.
    pub occupancy: DMatrix<f64>,
    /// Per block, the C x F averaged responsibility-weighted frame sums,
    /// centered on the component means.
    pub centered_sums: Vec<DMatrix<f64>>,
    /// Averaged responsibility-weighted squared Mahalanobis residuals to
    /// the component means, B x C.
    pub quadratic: DMatrix<f64>,
    /// Averaged initial speaker responsibilities, B x S.
    pub assignment: DMatrix<f64>,
    /// Frame range `[start, end)` of every block.
    pub block_frames: Vec<(usize, usize)>,
}

/// Averages component and speaker statistics over blocks of `downsample`
/// consecutive frames (the final block may be shorter). With
/// `downsample = 1` the statistics equal the frame-level ones exactly.
pub fn block_statistics(
    model: &EigenvoiceModel,
    frames: &DMatrix<f64>,
    responsibilities: &DMatrix<f64>,
    speaker_gamma: &DMatrix<f64>,
    downsample: usize,
) -> BlockStats {
    assert!(downsample >= 1);
    let t_len = frames.nrows();
    assert_eq!(responsibilities.nrows(), t_len);
    assert_eq!(speaker_gamma.nrows(), t_len);
    let c_len = responsibilities.ncols();
    let s_len = speaker_gamma.ncols();
    let f_len = frames.ncols();
    let n_blocks = t_len.div_ceil(downsample);

    let mut occupancy = DMatrix::zeros(n_blocks, c_len);
    let mut centered_sums = Vec::with_capacity(n_blocks);
    let mut quadratic = DMatrix::zeros(n_blocks, c_len);
    let mut assignment = DMatrix::zeros(n_blocks, s_len);
    let mut block_frames = Vec::with_capacity(n_blocks);

    for b in 0..n_blocks {
        let start = b * downsample;
        let end = (start + downsample).min(t_len);
        let scale = 1.0 / (end - start) as f64;
        block_frames.push((start, end));
        let mut sums = DMatrix::zeros(c_len, f_len);
        for t in start..end {
            for c in 0..c_len {
                let r = responsibilities[(t, c)];
                occupancy[(b, c)] += r * scale;
                let mut q = 0.0;
                for d in 0..f_len {
                    let x = frames[(t, d)];
                    sums[(c, d)] += r * scale * x;
                    let diff = x - model.means[(c, d)];
                    q += diff * diff / model.diag_covs[(c, d)];
                }
                quadratic[(b, c)] += r * scale * q;
            }
            for s in 0..s_len {
                assignment[(b, s)] += speaker_gamma[(t, s)] * scale;
            }
        }
        // Center on the component means using the accumulated occupancy.
        for c in 0..c_len {
            for d in 0..f_len {
                sums[(c, d)] -= occupancy[(b, c)] * model.means[(c, d)];
            }
        }
        centered_sums.push(sums);
        // Guard against responsibility dust after averaging.
        let row_sum: f64 = assignment.row(b).sum();
        if row_sum > 0.0 {
            for s in 0..s_len {
                assignment[(b, s)] /= row_sum;
            }
        }
    }

    BlockStats {
        occupancy,
        centered_sums,
        quadratic,
        assignment,
        block_frames,
    }
}

/// Per-block quantities projected into the speaker subspace: everything
/// the speaker updates and block log-likelihoods need.
#[derive(Debug, Clone)]
pub struct BlockProjections {
    /// Per block, the subspace-projected centered first-order statistic
    /// (length R).
    pub linear: Vec<DVector<f64>>,
    /// Per block, the occupancy-weighted sum of component precision
    /// matrices in the subspace (R x R, positive semidefinite).
    pub quadratic: Vec<DMatrix<f64>>,
    /// Speaker-independent part of each block's expected log-likelihood.
    pub base: Vec<f64>,
}

/// Projects block statistics into the speaker subspace.
pub fn block_projections(model: &EigenvoiceModel, stats: &BlockStats) -> BlockProjections {
    let c_len = model.components();
    let f_len = model.feature_dim();
    let r_len = model.rank();
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    // K_c = V_c^T Sigma_c^-1 V_c and V_c^T Sigma_c^-1, reused per block.
    let mut precisions = Vec::with_capacity(c_len);
    let mut projectors = Vec::with_capacity(c_len);
    let mut log_consts = Vec::with_capacity(c_len);
    for c in 0..c_len {
        let block = model.subspace_block(c);
        let mut proj = block.transpose(); // R x F
        for d in 0..f_len {
            let inv = 1.0 / model.diag_covs[(c, d)];
            for r in 0..r_len {
                proj[(r, d)] *= inv;
            }
        }
        precisions.push(&proj * &block);
        projectors.push(proj);
        let mut acc = model.weights[c].ln();
        for d in 0..f_len {
            acc -= 0.5 * (ln2pi + model.diag_covs[(c, d)].ln());
        }
        log_consts.push(acc);
    }

    let n_blocks = stats.block_frames.len();
    let mut linear = Vec::with_capacity(n_blocks);
    let mut quadratic = Vec::with_capacity(n_blocks);
    let mut base = Vec::with_capacity(n_blocks);
    for b in 0..n_blocks {
        let mut lin = DVector::zeros(r_len);
        let mut quad = DMatrix::zeros(r_len, r_len);
        let mut bb = 0.0;
        for c in 0..c_len {
            let centered = stats.centered_sums[b].row(c).transpose();
            lin += &projectors[c] * centered;
            quad += &precisions[c] * stats.occupancy[(b, c)];
            bb += stats.occupancy[(b, c)] * log_consts[c] - 0.5 * stats.quadratic[(b, c)];
        }
        linear.push(lin);
        quadratic.push(quad);
        base.push(bb);
    }
    BlockProjections { linear, quadratic, base }
}

/// Gaussian posteriors of the speaker coordinates given the current block
/// assignment: precision `I + scale * sum_b gamma_bs K_b`, mean
/// `scale * L^-1 * sum_b gamma_bs f_b`.
pub fn speaker_posteriors(
    projections: &BlockProjections,
    assignment: &DMatrix<f64>,
    acoustic_scale: f64,
) -> Result<Vec<SpeakerPosterior>> {
    let r_len = projections
        .linear
        .first()
        .map(|v| v.len())
        .ok_or_else(|| Error::EmptyInput("no blocks to infer speakers from".into()))?;
    let s_len = assignment.ncols();
    let mut out = Vec::with_capacity(s_len);
    for s in 0..s_len {
        let mut precision = DMatrix::identity(r_len, r_len);
        let mut lin = DVector::zeros(r_len);
        for b in 0..projections.linear.len() {
            let g = assignment[(b, s)];
            precision += &projections.quadratic[b] * (acoustic_scale * g);
            lin += &projections.linear[b] * g;
        }
        let chol = precision.clone().cholesky().ok_or_else(|| {
            Error::Numerical(format!("speaker {s} posterior precision not positive definite"))
        })?;
        let covariance = chol.inverse();
        let mean = &covariance * (lin * acoustic_scale);
        out.push(SpeakerPosterior { mean, covariance });
    }
    Ok(out)
}

/// Expected block log-likelihoods under each speaker posterior (B x S,
/// unscaled).
pub fn speaker_block_loglikes(
    projections: &BlockProjections,
    posteriors: &[SpeakerPosterior],
) -> DMatrix<f64> {
    let n_blocks = projections.linear.len();
    let s_len = posteriors.len();
    // Second moments E[y y^T] = cov + mean mean^T per speaker.
    let moments: Vec<DMatrix<f64>> = posteriors
        .iter()
        .map(|p| &p.covariance + &p.mean * p.mean.transpose())
        .collect();
    let mut loglikes = DMatrix::zeros(n_blocks, s_len);
    for b in 0..n_blocks {
        for s in 0..s_len {
            let cross = projections.linear[b].dot(&posteriors[s].mean);
            let trace = projections.quadratic[b].component_mul(&moments[s]).sum();
            loglikes[(b, s)] = projections.base[b] + cross - 0.5 * trace;
        }
    }
    loglikes
}

/// Forward-backward smoothing with a minimum-duration HMM: every speaker
/// is expanded into a chain of `min_duration` states that must be
/// traversed before the exit state, which loops with `p_loop` or switches
/// to any speaker's entry uniformly. `min_duration = 1` is exactly the
/// unconstrained speaker HMM. Returns per-block speaker posteriors and
/// the data log-evidence.
pub fn min_duration_forward_backward(
    log_emit: &DMatrix<f64>,
    p_loop: f64,
    min_duration: usize,
) -> Result<(DMatrix<f64>, f64)> {
    if !(p_loop > 0.0 && p_loop < 1.0) {
        return Err(Error::Config(format!(
            "loop probability {p_loop} outside (0, 1)"
        )));
    }
    if min_duration == 0 {
        return Err(Error::Config("minimum duration must be at least 1".into()));
    }
    let t_len = log_emit.nrows();
    let s_len = log_emit.ncols();
    let m = min_duration;
    let n_states = s_len * m;
    let uniform = 1.0 / s_len as f64;

    let mut log_trans = DMatrix::from_element(n_states, n_states, f64::NEG_INFINITY);
    for s in 0..s_len {
        for k in 0..m {
            let from = s * m + k;
            if k + 1 < m {
                // Forced advance through the duration chain.
                log_trans[(from, s * m + k + 1)] = 0.0;
            } else {
                for to_s in 0..s_len {
                    let base = (1.0 - p_loop) * uniform;
                    let p = if to_s == s && m == 1 { p_loop + base } else { base };
                    log_trans[(from, to_s * m)] = p.ln();
                }
                if m > 1 {
                    log_trans[(from, from)] = p_loop.ln();
                }
            }
        }
    }
    let log_init = DVector::from_fn(n_states, |i, _| {
        if i % m == 0 {
            uniform.ln()
        } else {
            f64::NEG_INFINITY
        }
    });
    let expanded_emit = DMatrix::from_fn(t_len, n_states, |t, i| log_emit[(t, i / m)]);

    let fb = forward_backward(&log_init, &log_trans, &expanded_emit)?;
    let mut gamma = DMatrix::zeros(t_len, s_len);
    for t in 0..t_len {
        for s in 0..s_len {
            let mut acc = 0.0;
            for k in 0..m {
                acc += fb.gamma[(t, s * m + k)];
            }
            gamma[(t, s)] = acc;
        }
    }
    Ok((gamma, fb.log_z))
}

/// Replicates block posteriors back onto the frame grid.
pub fn upsample_assignment(
    block_gamma: &DMatrix<f64>,
    block_frames: &[(usize, usize)],
    total_frames: usize,
) -> DMatrix<f64> {
    let s_len = block_gamma.ncols();
    let mut gamma = DMatrix::zeros(total_frames, s_len);
    for (b, &(start, end)) in block_frames.iter().enumerate() {
        for t in start..end {
            for s in 0..s_len {
                gamma[(t, s)] = block_gamma[(b, s)];
            }
        }
    }
    gamma
}

/// One-hot frame responsibilities from a segment-level hypothesis, given
/// explicit frame center times. Speaker columns follow the hypothesis'
/// first-appearance speaker order. A frame covered by several segments
/// (boundary touch) goes to the earliest-onset one; uncovered frames get
/// uniform rows.
pub fn frame_init_from_times(
    hypothesis: &DiarizationHypothesis,
    times: &[f64],
) -> Result<SoftAssignment> {
    let speakers = hypothesis.speakers();
    if speakers.is_empty() {
        return Err(Error::EmptyInput(format!(
            "hypothesis for {} has no segments to initialize frames from",
            hypothesis.recording_id
        )));
    }
    if times.is_empty() {
        return Err(Error::EmptyInput("no frames to initialize".into()));
    }
    let index: std::collections::HashMap<&str, usize> = speakers
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let s_len = speakers.len();
    let mut gamma = DMatrix::zeros(times.len(), s_len);
    for (t, &center) in times.iter().enumerate() {
        let mut chosen: Option<(f64, usize)> = None;
        for seg in &hypothesis.segments {
            if center >= seg.onset - 1e-9 && center <= seg.offset() + 1e-9 {
                let s = index[seg.speaker.as_str()];
                match chosen {
                    Some((onset, _)) if onset <= seg.onset => {}
                    _ => chosen = Some((seg.onset, s)),
                }
            }
        }
        match chosen {
            Some((_, s)) => gamma[(t, s)] = 1.0,
            None => {
                for s in 0..s_len {
                    gamma[(t, s)] = 1.0 / s_len as f64;
                }
            }
        }
    }
    SoftAssignment::new(gamma)
}

/// One-hot frame responsibilities on a uniform grid: frame t is centered
/// at `(t + 0.5) / frame_rate`.
pub fn frame_init_from_segments(
    hypothesis: &DiarizationHypothesis,
    frame_rate: f64,
    total_frames: usize,
) -> Result<SoftAssignment> {
    if !(frame_rate > 0.0) {
        return Err(Error::Config(format!("frame rate {frame_rate} not positive")));
    }
    let times: Vec<f64> = (0..total_frames)
        .map(|t| (t as f64 + 0.5) / frame_rate)
        .collect();
    frame_init_from_times(hypothesis, &times)
}

/// A single frame-level variational pass: fixed mixture responsibilities,
/// block-averaged statistics, one speaker-coordinate update from the
/// initial assignment, minimum-duration HMM smoothing, and replication
/// back to frames. The speaker set is fixed (columns match the
/// initialization).
pub fn single_vb_pass(
    frames: &DMatrix<f64>,
    init: &SoftAssignment,
    model: &EigenvoiceModel,
    config: &FrameVbConfig,
) -> Result<SoftAssignment> {
    config.validate()?;
    model.validate()?;
    let t_len = frames.nrows();
    if init.len() != t_len {
        return Err(Error::Dimension(format!(
            "{} initial responsibility rows for {t_len} frames",
            init.len()
        )));
    }
    if t_len == 0 {
        return Err(Error::EmptyInput("no frames to refine".into()));
    }

    let resp = ubm_responsibilities(model, frames)?;
    let stats = block_statistics(model, frames, &resp, init.gamma(), config.downsample);
    let projections = block_projections(model, &stats);
    let posteriors = speaker_posteriors(&projections, &stats.assignment, config.acoustic_scale)?;
    let loglikes = speaker_block_loglikes(&projections, &posteriors);
    let scaled = &loglikes * config.acoustic_scale;
    let (block_gamma, _log_z) =
        min_duration_forward_backward(&scaled, config.loop_probability, config.min_duration)?;
    let gamma = upsample_assignment(&block_gamma, &stats.block_frames, t_len);
    SoftAssignment::new(gamma)
}
