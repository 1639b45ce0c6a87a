//! Bayesian HMM clustering of an embedding sequence with PLDA speaker
//! models: soft initialization from hard clusters, variational inference
//! alternating closed-form speaker-posterior updates with forward-backward
//! state posteriors, ELBO monitoring, and automatic dropping of redundant
//! speakers (speaker-count estimation).
//!
//! Works in the discriminant-projected PLDA space produced by
//! [`crate::transforms::lda_from_plda`]: within-speaker covariance is the
//! identity and across-speaker covariance is a diagonal `phi`, so a speaker
//! with latent coordinate `y_s ~ N(0, I)` emits observations
//! `x ~ N(phi^(1/2) y_s, I)` and every update decomposes per dimension.

use nalgebra::{DMatrix, DVector};

use crate::ahc::ClusterLabels;
use crate::error::{Error, Result};
use crate::linalg::log_sum_exp;

/// Inference settings for the embedding-level Bayesian HMM.
#[derive(Debug, Clone, PartialEq)]
pub struct VbConfig {
    /// HMM self-transition probability (implicit speaker-turn duration
    /// model), in (0, 1).
    pub loop_probability: f64,
    /// Scale applied to observation log-likelihoods, compensating their
    /// statistical dependence; > 0.
    pub acoustic_scale: f64,
    /// Weight of the speaker-prior regularization; larger values drop
    /// redundant speakers more aggressively; > 0.
    pub speaker_regularization: f64,
    /// Sharpness of the soft assignment derived from hard cluster labels.
    pub init_smoothing: f64,
    pub max_iterations: usize,
    /// Relative ELBO change below which iteration stops.
    pub elbo_tolerance: f64,
    /// Speakers whose responsibility mass falls below
    /// `prune_threshold * T / initial_speakers` are dropped; in (0, 1).
    pub prune_threshold: f64,
}

impl Default for VbConfig {
    fn default() -> Self {
        VbConfig {
            loop_probability: 0.8,
            acoustic_scale: 0.4,
            speaker_regularization: 11.0,
            init_smoothing: 5.0,
            max_iterations: 40,
            elbo_tolerance: 1e-4,
            prune_threshold: 0.05,
        }
    }
}

impl VbConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (
                self.loop_probability > 0.0 && self.loop_probability < 1.0,
                format!("loop probability {} outside (0, 1)", self.loop_probability),
            ),
            (
                self.acoustic_scale > 0.0,
                format!("acoustic scale {} not positive", self.acoustic_scale),
            ),
            (
                self.speaker_regularization > 0.0,
                format!(
                    "speaker regularization {} not positive",
                    self.speaker_regularization
                ),
            ),
            (
                self.init_smoothing > 0.0,
                format!("init smoothing {} not positive", self.init_smoothing),
            ),
            (
                self.max_iterations > 0,
                "max iterations must be positive".to_string(),
            ),
            (
                self.elbo_tolerance > 0.0,
                format!("ELBO tolerance {} not positive", self.elbo_tolerance),
            ),
            (
                self.prune_threshold > 0.0 && self.prune_threshold < 1.0,
                format!("prune threshold {} outside (0, 1)", self.prune_threshold),
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Config(msg));
            }
        }
        Ok(())
    }
}

/// Posterior speaker responsibilities, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment {
    gamma: DMatrix<f64>,
}

impl SoftAssignment {
    /// Validates that rows are probability distributions (sum 1 within
    /// 1e-9, entries in [0, 1]).
    pub fn new(gamma: DMatrix<f64>) -> Result<Self> {
        for t in 0..gamma.nrows() {
            let mut sum = 0.0;
            for s in 0..gamma.ncols() {
                let v = gamma[(t, s)];
                if !(-1e-12..=1.0 + 1e-9).contains(&v) {
                    return Err(Error::Numerical(format!(
                        "responsibility {v} at ({t},{s}) outside [0, 1]"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Numerical(format!(
                    "responsibility row {t} sums to {sum}"
                )));
            }
        }
        Ok(SoftAssignment { gamma })
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.nrows() == 0
    }

    pub fn speakers(&self) -> usize {
        self.gamma.ncols()
    }

    /// Hard labels; ties go to the lower speaker index.
    pub fn argmax_labels(&self) -> Vec<usize> {
        (0..self.gamma.nrows())
            .map(|t| {
                let mut best = 0;
                for s in 1..self.gamma.ncols() {
                    if self.gamma[(t, s)] > self.gamma[(t, best)] {
                        best = s;
                    }
                }
                best
            })
            .collect()
    }

    /// Per-speaker responsibility mass.
    pub fn masses(&self) -> DVector<f64> {
        DVector::from_fn(self.gamma.ncols(), |s, _| self.gamma.column(s).sum())
    }
}

/// Gaussian posterior of one speaker's latent coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerPosterior {
    pub mean: DVector<f64>,
    /// Symmetric positive definite; diagonal for the projected model.
    pub covariance: DMatrix<f64>,
}

/// Full inference state: responsibilities, speaker prior weights and
/// speaker posteriors (empty until the first iteration).
#[derive(Debug, Clone)]
pub struct VbState {
    pub assignment: SoftAssignment,
    pub weights: DVector<f64>,
    pub posteriors: Vec<SpeakerPosterior>,
    initial_speakers: usize,
}

impl VbState {
    /// Starts from a soft assignment with uniform speaker priors.
    pub fn from_assignment(assignment: SoftAssignment) -> VbState {
        let s = assignment.speakers();
        VbState {
            assignment,
            weights: DVector::from_element(s, 1.0 / s as f64),
            posteriors: Vec::new(),
            initial_speakers: s,
        }
    }

    pub fn speaker_count(&self) -> usize {
        self.assignment.speakers()
    }

    pub fn initial_speaker_count(&self) -> usize {
        self.initial_speakers
    }
}

/// Soft assignment from hard cluster labels: row t is the softmax of
/// `smoothing * onehot(label_t)`, i.e. mass `e^k / (e^k + S - 1)` on the
/// own cluster and `1 / (e^k + S - 1)` elsewhere.
pub fn init_soft(labels: &ClusterLabels, smoothing: f64) -> SoftAssignment {
    assert!(smoothing > 0.0, "smoothing must be positive");
    let canonical = labels.relabeled_by_first_appearance();
    let s = canonical.n_clusters();
    let t = canonical.len();
    // Stable softmax: the labeled entry is exp(0), the rest exp(-smoothing).
    let off = (-smoothing).exp();
    let denom = 1.0 + (s as f64 - 1.0) * off;
    let mut gamma = DMatrix::from_element(t, s, off / denom);
    for (row, &l) in canonical.labels().iter().enumerate() {
        gamma[(row, l)] = 1.0 / denom;
    }
    SoftAssignment { gamma }
}

/// Forward-backward output: state posteriors, the data log-evidence, and
/// the self-transition pairwise posteriors needed for prior-weight updates.
#[derive(Debug, Clone)]
pub struct FbResult {
    pub gamma: DMatrix<f64>,
    pub log_z: f64,
    /// `xi_self[(t, s)] = P(z_t = s, z_{t-1} = s | data)`; row 0 is zero.
    pub xi_self: DMatrix<f64>,
}

/// Exact HMM smoothing in the log domain.
///
/// `log_trans[(i, j)]` is the log-probability of moving from state i to
/// state j. No probability-domain underflow is possible; -inf entries
/// (impossible transitions) are handled by log-sum-exp.
pub fn forward_backward(
    log_init: &DVector<f64>,
    log_trans: &DMatrix<f64>,
    log_emit: &DMatrix<f64>,
) -> Result<FbResult> {
    let t_len = log_emit.nrows();
    let s_len = log_emit.ncols();
    assert!(t_len > 0 && s_len > 0);
    assert_eq!(log_init.len(), s_len);
    assert_eq!(log_trans.shape(), (s_len, s_len));

    let mut la = DMatrix::zeros(t_len, s_len);
    for s in 0..s_len {
        la[(0, s)] = log_init[s] + log_emit[(0, s)];
    }
    let mut scratch = vec![0.0f64; s_len];
    for t in 1..t_len {
        for s in 0..s_len {
            for (prev, slot) in scratch.iter_mut().enumerate() {
                *slot = la[(t - 1, prev)] + log_trans[(prev, s)];
            }
            la[(t, s)] = log_sum_exp(&scratch) + log_emit[(t, s)];
        }
    }
    let log_z = log_sum_exp(la.row(t_len - 1).transpose().as_slice());
    if !log_z.is_finite() {
        return Err(Error::Numerical(
            "forward pass produced a non-finite log-evidence".into(),
        ));
    }

    let mut lb = DMatrix::zeros(t_len, s_len);
    for t in (0..t_len - 1).rev() {
        for s in 0..s_len {
            for (next, slot) in scratch.iter_mut().enumerate() {
                *slot = log_trans[(s, next)] + log_emit[(t + 1, next)] + lb[(t + 1, next)];
            }
            lb[(t, s)] = log_sum_exp(&scratch);
        }
    }

    let mut gamma = DMatrix::zeros(t_len, s_len);
    for t in 0..t_len {
        for s in 0..s_len {
            gamma[(t, s)] = (la[(t, s)] + lb[(t, s)] - log_z).exp();
        }
        let row_sum: f64 = gamma.row(t).sum();
        for s in 0..s_len {
            gamma[(t, s)] /= row_sum;
        }
    }

    let mut xi_self = DMatrix::zeros(t_len, s_len);
    for t in 1..t_len {
        for s in 0..s_len {
            xi_self[(t, s)] = (la[(t - 1, s)] + log_trans[(s, s)] + log_emit[(t, s)]
                + lb[(t, s)]
                - log_z)
                .exp();
        }
    }

    Ok(FbResult { gamma, log_z, xi_self })
}

/// Builds the speaker-HMM log transition matrix: stay with `p_loop`, or
/// switch with the remaining probability split by the prior weights
/// (self-transitions therefore get `p_loop + (1 - p_loop) * w_s`).
pub fn speaker_log_transitions(weights: &DVector<f64>, p_loop: f64) -> DMatrix<f64> {
    let s = weights.len();
    DMatrix::from_fn(s, s, |from, to| {
        let base = (1.0 - p_loop) * weights[to];
        let p = if from == to { p_loop + base } else { base };
        p.ln()
    })
}

/// One variational iteration: update the speaker posteriors from the
/// current responsibilities, rebuild expected log-likelihoods, smooth them
/// through the HMM, and refresh the speaker prior weights. Returns the new
/// state and the evidence lower bound, which never decreases across calls
/// (pruning in between excepted).
pub fn vb_iterate(
    state: &VbState,
    observations: &DMatrix<f64>,
    across_diag: &DVector<f64>,
    config: &VbConfig,
) -> Result<(VbState, f64)> {
    config.validate()?;
    let t_len = observations.nrows();
    let dim = observations.ncols();
    let s_len = state.speaker_count();
    if across_diag.len() != dim {
        return Err(Error::Dimension(format!(
            "across-speaker diagonal has {} entries for {dim}-dimensional observations",
            across_diag.len()
        )));
    }
    if state.assignment.len() != t_len {
        return Err(Error::Dimension(format!(
            "{} responsibility rows for {t_len} observations",
            state.assignment.len()
        )));
    }

    let gamma = state.assignment.gamma();
    let ratio = config.acoustic_scale / config.speaker_regularization;
    let sqrt_phi = across_diag.map(f64::sqrt);

    // Closed-form q(y_s): diagonal precision 1 + ratio * N_s * phi, mean
    // ratio * L^-1 * phi^(1/2) * (responsibility-weighted observation sum).
    let first_order = gamma.transpose() * observations; // S x D
    let masses = state.assignment.masses();
    let mut alphas = DMatrix::zeros(s_len, dim); // posterior means
    let mut inv_precisions = DMatrix::zeros(s_len, dim);
    for s in 0..s_len {
        for d in 0..dim {
            let l = 1.0 + ratio * masses[s] * across_diag[d];
            inv_precisions[(s, d)] = 1.0 / l;
            alphas[(s, d)] = ratio * sqrt_phi[d] * first_order[(s, d)] / l;
        }
    }

    // Expected per-observation log-likelihoods:
    // G[t][s] = -1/2 sum_d [ln 2pi + x^2 + phi (L^-1 + alpha^2)
    //                       - 2 x sqrt(phi) alpha].
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let row_sq: Vec<f64> = (0..t_len)
        .map(|t| observations.row(t).iter().map(|v| v * v).sum())
        .collect();
    let mut speaker_const = vec![0.0f64; s_len];
    for s in 0..s_len {
        let mut c = 0.0;
        for d in 0..dim {
            c += across_diag[d]
                * (inv_precisions[(s, d)] + alphas[(s, d)] * alphas[(s, d)]);
        }
        speaker_const[s] = 0.5 * c;
    }
    // cross[t][s] = x_t . (sqrt(phi) ∘ alpha_s)
    let mut scaled_alphas = alphas.clone();
    for s in 0..s_len {
        for d in 0..dim {
            scaled_alphas[(s, d)] *= sqrt_phi[d];
        }
    }
    let cross = observations * scaled_alphas.transpose(); // T x S
    let mut log_emit = DMatrix::zeros(t_len, s_len);
    for t in 0..t_len {
        for s in 0..s_len {
            let g = -0.5 * (dim as f64 * ln2pi + row_sq[t]) + cross[(t, s)] - speaker_const[s];
            log_emit[(t, s)] = config.acoustic_scale * g;
        }
    }

    let log_trans = speaker_log_transitions(&state.weights, config.loop_probability);
    let log_init = state.weights.map(f64::ln);
    let fb = forward_backward(&log_init, &log_trans, &log_emit)?;

    // ELBO = data log-evidence - regularized KL(q(y_s) || N(0, I)).
    let mut kl = 0.0;
    for s in 0..s_len {
        for d in 0..dim {
            let inv_l = inv_precisions[(s, d)];
            let a = alphas[(s, d)];
            kl += 0.5 * (inv_l + a * a - 1.0 - inv_l.ln());
        }
    }
    let elbo = fb.log_z - config.speaker_regularization * kl;
    if !elbo.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite ELBO (log-evidence {}, KL {kl}) for {t_len} observations, {s_len} speakers",
            fb.log_z
        )));
    }

    // Prior-weight update: expected number of draws from the speaker prior
    // (run starts), an exact EM step for the mixed stay/switch kernel, so
    // it also never decreases the ELBO. The regularization divisor rescales
    // all counts equally and cancels in the normalization; it is kept so
    // the counts match their role as prior pseudo-counts.
    let p = config.loop_probability;
    let mut counts = DVector::zeros(s_len);
    for s in 0..s_len {
        let stay_draw = (1.0 - p) * state.weights[s] / (p + (1.0 - p) * state.weights[s]);
        let mut c = fb.gamma[(0, s)];
        for t in 1..t_len {
            let xi = fb.xi_self[(t, s)];
            c += (fb.gamma[(t, s)] - xi) + xi * stay_draw;
        }
        counts[s] = c.max(0.0) / config.speaker_regularization;
    }
    let total = counts.sum();
    let weights = if total > 0.0 {
        counts / total
    } else {
        DVector::from_element(s_len, 1.0 / s_len as f64)
    };

    let posteriors = (0..s_len)
        .map(|s| SpeakerPosterior {
            mean: alphas.row(s).transpose(),
            covariance: DMatrix::from_diagonal(&DVector::from_fn(dim, |d, _| {
                inv_precisions[(s, d)]
            })),
        })
        .collect();

    Ok((
        VbState {
            assignment: SoftAssignment { gamma: fb.gamma },
            weights,
            posteriors,
            initial_speakers: state.initial_speakers,
        },
        elbo,
    ))
}

/// Drops speakers whose responsibility mass falls below
/// `prune_threshold * T / initial_speaker_count`, renormalizing rows and
/// prior weights. Never returns zero speakers: if all would go, the
/// largest one stays.
pub fn prune_speakers(state: &VbState, prune_threshold: f64) -> VbState {
    let masses = state.assignment.masses();
    let t_len = state.assignment.len();
    let cutoff = prune_threshold * t_len as f64 / state.initial_speakers as f64;
    let mut keep: Vec<usize> = (0..state.speaker_count())
        .filter(|&s| masses[s] >= cutoff)
        .collect();
    if keep.is_empty() {
        let best = (0..state.speaker_count())
            .max_by(|&a, &b| masses[a].partial_cmp(&masses[b]).unwrap())
            .unwrap();
        keep.push(best);
    }
    if keep.len() == state.speaker_count() {
        return state.clone();
    }

    let gamma_old = state.assignment.gamma();
    let mut gamma = DMatrix::zeros(t_len, keep.len());
    for t in 0..t_len {
        let mut sum = 0.0;
        for (new_s, &old_s) in keep.iter().enumerate() {
            let v = gamma_old[(t, old_s)];
            gamma[(t, new_s)] = v;
            sum += v;
        }
        if sum > 0.0 {
            for new_s in 0..keep.len() {
                gamma[(t, new_s)] /= sum;
            }
        } else {
            for new_s in 0..keep.len() {
                gamma[(t, new_s)] = 1.0 / keep.len() as f64;
            }
        }
    }
    let mut weights = DVector::from_fn(keep.len(), |i, _| state.weights[keep[i]]);
    let wsum = weights.sum();
    if wsum > 0.0 {
        weights /= wsum;
    } else {
        weights.fill(1.0 / keep.len() as f64);
    }
    let posteriors = if state.posteriors.is_empty() {
        Vec::new()
    } else {
        keep.iter().map(|&s| state.posteriors[s].clone()).collect()
    };
    VbState {
        assignment: SoftAssignment { gamma },
        weights,
        posteriors,
        initial_speakers: state.initial_speakers,
    }
}

/// Result of running the variational loop to convergence.
#[derive(Debug, Clone)]
pub struct VbOutcome {
    pub assignment: SoftAssignment,
    pub speaker_count: usize,
    pub elbo_trace: Vec<f64>,
    /// Surviving speakers after each iteration's pruning step.
    pub speaker_counts: Vec<usize>,
}

/// Iterates [`vb_iterate`] + [`prune_speakers`] until the relative ELBO
/// change drops below the configured tolerance (checks are skipped on
/// iterations that pruned, since pruning moves the objective
/// discontinuously) or the iteration limit is reached.
pub fn run_vb(
    observations: &DMatrix<f64>,
    init: SoftAssignment,
    across_diag: &DVector<f64>,
    config: &VbConfig,
) -> Result<VbOutcome> {
    config.validate()?;
    let mut state = VbState::from_assignment(init);
    let mut elbo_trace = Vec::new();
    let mut speaker_counts = Vec::new();
    for _ in 0..config.max_iterations {
        let (next, elbo) = vb_iterate(&state, observations, across_diag, config)?;
        let before = next.speaker_count();
        state = prune_speakers(&next, config.prune_threshold);
        let pruned = state.speaker_count() < before;
        elbo_trace.push(elbo);
        speaker_counts.push(state.speaker_count());
        if !pruned && elbo_trace.len() >= 2 {
            let prev = elbo_trace[elbo_trace.len() - 2];
            if (elbo - prev).abs() <= config.elbo_tolerance * elbo.abs().max(1e-12) {
                break;
            }
        }
    }
    Ok(VbOutcome {
        speaker_count: state.assignment.speakers(),
        assignment: state.assignment,
        elbo_trace,
        speaker_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plda::PldaModel;
    use crate::synth::{sample_recording, CounterRng};

    /// Exhaustive-path HMM posteriors for small T, S.
    fn enumerate_posteriors(
        log_init: &DVector<f64>,
        log_trans: &DMatrix<f64>,
        log_emit: &DMatrix<f64>,
    ) -> (DMatrix<f64>, f64, DMatrix<f64>) {
        let t_len = log_emit.nrows();
        let s_len = log_emit.ncols();
        let n_paths = s_len.pow(t_len as u32);
        let mut path_logw = Vec::with_capacity(n_paths);
        let mut paths = Vec::with_capacity(n_paths);
        for code in 0..n_paths {
            let mut c = code;
            let mut path = Vec::with_capacity(t_len);
            for _ in 0..t_len {
                path.push(c % s_len);
                c /= s_len;
            }
            let mut lw = log_init[path[0]] + log_emit[(0, path[0])];
            for t in 1..t_len {
                lw += log_trans[(path[t - 1], path[t])] + log_emit[(t, path[t])];
            }
            path_logw.push(lw);
            paths.push(path);
        }
        let log_z = log_sum_exp(&path_logw);
        let mut gamma = DMatrix::zeros(t_len, s_len);
        let mut xi_self = DMatrix::zeros(t_len, s_len);
        for (path, lw) in paths.iter().zip(&path_logw) {
            let w = (lw - log_z).exp();
            for (t, &s) in path.iter().enumerate() {
                gamma[(t, s)] += w;
                if t > 0 && path[t - 1] == s {
                    xi_self[(t, s)] += w;
                }
            }
        }
        (gamma, log_z, xi_self)
    }

    fn random_chain(rng: &mut CounterRng, t_len: usize, s_len: usize) -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>) {
        let mut init = DVector::from_fn(s_len, |_, _| rng.uniform() + 0.1);
        let total = init.sum();
        init /= total;
        let mut trans = DMatrix::from_fn(s_len, s_len, |_, _| rng.uniform() + 0.1);
        for i in 0..s_len {
            let row_sum: f64 = trans.row(i).sum();
            for j in 0..s_len {
                trans[(i, j)] /= row_sum;
            }
        }
        let emit = DMatrix::from_fn(t_len, s_len, |_, _| rng.uniform_in(-4.0, 1.0));
        (init.map(f64::ln), trans.map(f64::ln), emit)
    }

    #[test]
    fn forward_backward_matches_path_enumeration() {
        let mut rng = CounterRng::new(404);
        for _ in 0..20 {
            let t_len = 2 + rng.index(5);
            let s_len = 2 + rng.index(2);
            let (li, lt, le) = random_chain(&mut rng, t_len, s_len);
            let fb = forward_backward(&li, &lt, &le).unwrap();
            let (gamma_ref, log_z_ref, xi_ref) = enumerate_posteriors(&li, &lt, &le);
            assert!((fb.log_z - log_z_ref).abs() < 1e-9);
            assert!((&fb.gamma - &gamma_ref).abs().max() < 1e-9);
            assert!((&fb.xi_self - &xi_ref).abs().max() < 1e-9);
        }
    }

    #[test]
    fn init_soft_closed_form() {
        let labels = ClusterLabels::from_raw(vec![0, 1, 0]);
        let a = init_soft(&labels, 5.0);
        let e5 = 5f64.exp();
        assert!((a.gamma()[(0, 0)] - e5 / (e5 + 1.0)).abs() < 1e-12);
        assert!((a.gamma()[(0, 1)] - 1.0 / (e5 + 1.0)).abs() < 1e-12);
        assert!((a.gamma()[(1, 1)] - e5 / (e5 + 1.0)).abs() < 1e-12);

        // Tiny smoothing approaches uniform rows.
        let b = init_soft(&labels, 1e-9);
        assert!((b.gamma()[(0, 0)] - 0.5).abs() < 1e-9);

        let one = init_soft(&ClusterLabels::from_raw(vec![0, 0]), 5.0);
        assert_eq!(one.speakers(), 1);
        assert_eq!(one.gamma()[(0, 0)], 1.0);
    }

    fn projected_model(phi: f64, dim: usize) -> PldaModel {
        PldaModel {
            mean: DVector::zeros(dim),
            across: DMatrix::from_diagonal(&DVector::from_element(dim, phi)),
            within: DMatrix::identity(dim, dim),
        }
    }

    fn synth_projected(
        phi: f64,
        dim: usize,
        speakers: usize,
        t_len: usize,
        seed: u64,
    ) -> (DMatrix<f64>, Vec<usize>) {
        let model = projected_model(phi, dim);
        let (rec, truth) = sample_recording(&model, speakers, t_len, 0.9, seed);
        (rec.matrix(), truth.labels().to_vec())
    }

    #[test]
    fn rows_stay_stochastic_and_elbo_never_decreases() {
        let mut rng = CounterRng::new(5150);
        let phi_vec = DVector::from_vec(vec![9.0, 6.0, 4.0, 2.0]);
        for trial in 0..10 {
            let (obs, _) = synth_projected(6.0, 4, 3, 80, 9000 + trial);
            let init_labels: Vec<usize> = (0..80).map(|_| rng.index(4)).collect();
            let init = init_soft(&ClusterLabels::from_raw(init_labels), 5.0);
            let config = VbConfig::default();
            let mut state = VbState::from_assignment(init);
            let mut prev = f64::NEG_INFINITY;
            for _ in 0..20 {
                let (next, elbo) = vb_iterate(&state, &obs, &phi_vec, &config).unwrap();
                for t in 0..next.assignment.len() {
                    let sum: f64 = next.assignment.gamma().row(t).sum();
                    assert!((sum - 1.0).abs() < 1e-9);
                }
                assert!(
                    elbo >= prev - 1e-6 * prev.abs(),
                    "trial {trial}: ELBO fell from {prev} to {elbo}"
                );
                prev = elbo;
                state = next;
            }
        }
    }

    #[test]
    fn single_speaker_is_a_fixed_point() {
        let (obs, _) = synth_projected(4.0, 3, 1, 40, 77);
        let phi = DVector::from_element(3, 4.0);
        let init = init_soft(&ClusterLabels::from_raw(vec![0; 40]), 5.0);
        for f_a in [0.1, 0.4, 2.0] {
            let config = VbConfig {
                acoustic_scale: f_a,
                ..VbConfig::default()
            };
            let state = VbState::from_assignment(init.clone());
            let (next, elbo) = vb_iterate(&state, &obs, &phi, &config).unwrap();
            // Responsibilities are pinned at 1 whatever the acoustic scale.
            for t in 0..40 {
                assert_eq!(next.assignment.gamma()[(t, 0)], 1.0);
            }
            // ELBO = scaled data evidence minus regularized KL, both finite.
            assert!(elbo.is_finite());
            let outcome = run_vb(&obs, init.clone(), &phi, &config).unwrap();
            assert!(outcome.elbo_trace.len() <= 2, "took {:?}", outcome.elbo_trace);
        }
    }

    #[test]
    fn vanishing_acoustic_scale_gives_prior_driven_rows() {
        let (obs, _) = synth_projected(9.0, 3, 2, 30, 3);
        let phi = DVector::from_element(3, 9.0);
        let labels: Vec<usize> = (0..30).map(|t| (t / 10) % 2).collect();
        let init = init_soft(&ClusterLabels::from_raw(labels), 5.0);
        let config = VbConfig {
            acoustic_scale: 1e-12,
            ..VbConfig::default()
        };
        let state = VbState::from_assignment(init);
        let (next, _) = vb_iterate(&state, &obs, &phi, &config).unwrap();
        // With no data term and uniform priors every row is uniform.
        for t in 0..30 {
            for s in 0..2 {
                assert!((next.assignment.gamma()[(t, s)] - 0.5).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn well_separated_correct_init_converges_immediately() {
        let (obs, truth) = synth_projected(25.0, 3, 2, 60, 21);
        let phi = DVector::from_element(3, 25.0);
        let init = init_soft(&ClusterLabels::from_raw(truth), 5.0);
        let config = VbConfig::default();
        let state = VbState::from_assignment(init);
        let (s1, _) = vb_iterate(&state, &obs, &phi, &config).unwrap();
        let (s2, _) = vb_iterate(&s1, &obs, &phi, &config).unwrap();
        let delta = (s2.assignment.gamma() - s1.assignment.gamma()).abs().max();
        assert!(delta < 1e-3, "max responsibility change {delta}");
    }

    #[test]
    fn pruning_rules() {
        // Speaker 2 has exactly zero mass: removed.
        let mut gamma = DMatrix::zeros(6, 3);
        for t in 0..6 {
            gamma[(t, t % 2)] = 1.0;
        }
        let state = VbState::from_assignment(SoftAssignment::new(gamma).unwrap());
        let pruned = prune_speakers(&state, 0.05);
        assert_eq!(pruned.speaker_count(), 2);
        for t in 0..6 {
            let sum: f64 = pruned.assignment.gamma().row(t).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }

        // All equal masses: nothing removed.
        let gamma = DMatrix::from_element(6, 3, 1.0 / 3.0);
        let state = VbState::from_assignment(SoftAssignment::new(gamma).unwrap());
        assert_eq!(prune_speakers(&state, 0.05).speaker_count(), 3);

        // Absurd threshold: the largest speaker survives alone.
        let mut gamma = DMatrix::zeros(4, 2);
        for t in 0..4 {
            gamma[(t, 0)] = 0.9;
            gamma[(t, 1)] = 0.1;
        }
        let state = VbState::from_assignment(SoftAssignment::new(gamma).unwrap());
        let pruned = prune_speakers(&state, 0.999_999);
        assert_eq!(pruned.speaker_count(), 1);
        assert_eq!(pruned.assignment.gamma()[(0, 0)], 1.0);
    }

    #[test]
    fn overclustered_init_collapses_to_true_speaker_count() {
        let (obs, truth) = synth_projected(25.0, 4, 3, 240, 1234);
        let phi = DVector::from_element(4, 25.0);
        // Split every true speaker into two clusters by occurrence parity:
        // six initial clusters for three true speakers.
        let mut seen = std::collections::HashMap::new();
        let split: Vec<usize> = truth
            .iter()
            .map(|&s| {
                let count = seen.entry(s).or_insert(0usize);
                let label = 2 * s + (*count % 2);
                *count += 1;
                label
            })
            .collect();
        let init = init_soft(&ClusterLabels::from_raw(split), 5.0);
        assert_eq!(init.speakers(), 6);
        let config = VbConfig::default();
        let outcome = run_vb(&obs, init, &phi, &config).unwrap();
        assert_eq!(outcome.speaker_count, 3, "trace {:?}", outcome.speaker_counts);
        // The recovered partition matches the generative truth.
        let labels = outcome.assignment.argmax_labels();
        let relabeled = ClusterLabels::from_raw(labels).relabeled_by_first_appearance();
        let truth_canon = ClusterLabels::from_raw(truth).relabeled_by_first_appearance();
        let agree = relabeled
            .labels()
            .iter()
            .zip(truth_canon.labels())
            .filter(|(a, b)| a == b)
            .count();
        assert!(agree * 100 >= 99 * relabeled.len(), "{agree}/{}", relabeled.len());
    }

    #[test]
    fn permuting_init_clusters_permutes_output() {
        let (obs, truth) = synth_projected(16.0, 3, 3, 90, 55);
        let phi = DVector::from_element(3, 16.0);
        let permuted: Vec<usize> = truth.iter().map(|&s| (s + 1) % 3).collect();
        let config = VbConfig::default();
        let a = run_vb(
            &obs,
            init_soft(&ClusterLabels::from_raw(truth), 5.0),
            &phi,
            &config,
        )
        .unwrap();
        let b = run_vb(
            &obs,
            init_soft(&ClusterLabels::from_raw(permuted), 5.0),
            &phi,
            &config,
        )
        .unwrap();
        let la = ClusterLabels::from_raw(a.assignment.argmax_labels())
            .relabeled_by_first_appearance();
        let lb = ClusterLabels::from_raw(b.assignment.argmax_labels())
            .relabeled_by_first_appearance();
        assert_eq!(la, lb);
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let mut c = VbConfig::default();
        c.loop_probability = 1.0;
        assert!(c.validate().is_err());
        let mut c = VbConfig::default();
        c.acoustic_scale = 0.0;
        assert!(c.validate().is_err());
        let mut c = VbConfig::default();
        c.prune_threshold = 0.0;
        assert!(c.validate().is_err());
        assert!(VbConfig::default().validate().is_ok());
    }
}
