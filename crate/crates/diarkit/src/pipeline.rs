//! End-to-end diarization of one recording: embedding conditioning
//! (centering, whitening, length normalization), per-recording principal
//! component reduction, pairwise PLDA log-likelihood-ratio scoring with
//! optional multi-channel score averaging, calibrated (or fixed)
//! threshold agglomerative clustering, Bayesian HMM resegmentation with
//! speaker-count estimation, optional frame-level refinement, and
//! optional overlap post-processing. Named presets bundle tuned settings
//! for the supported operating points.

use nalgebra::{DMatrix, DVector};

use crate::ahc::{
    average_similarities, calibration_threshold, fit_two_gaussians, upgma_cluster, ClusterLabels,
};
use crate::error::{Error, Result};
use crate::framevb::{frame_init_from_times, single_vb_pass, EigenvoiceModel, FrameVbConfig};
use crate::io::{
    labels_to_hypothesis, merge_regions, DiarizationHypothesis, RecordingEmbeddings, SpeechRegion,
};
use crate::overlap::{assign_two_closest, detect, LogRegModel};
use crate::plda::{interpolate, llr_matrix, train_em, PldaModel};
use crate::transforms::{
    estimate_center_whiten, lda_from_plda, length_normalize, length_normalize_all,
    per_recording_pca, AffineTransform,
};
use crate::vbhmm::{init_soft, run_vb, VbConfig};

/// Where the centering/whitening transform is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhitenScope {
    /// One transform estimated over the whole corpus and passed in.
    Pooled,
    /// A fresh transform per recording, from its own embeddings.
    PerRecording,
}

impl WhitenScope {
    pub fn name(self) -> &'static str {
        match self {
            WhitenScope::Pooled => "pooled",
            WhitenScope::PerRecording => "per-recording",
        }
    }

    pub fn parse(s: &str) -> Result<WhitenScope> {
        match s {
            "pooled" => Ok(WhitenScope::Pooled),
            "per-recording" => Ok(WhitenScope::PerRecording),
            other => Err(Error::Config(format!(
                "unknown whitening scope '{other}' (expected pooled or per-recording)"
            ))),
        }
    }
}

/// Full stage configuration; `None` stages are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub whiten_scope: WhitenScope,
    /// Fraction of variance kept by the per-recording projection, (0, 1].
    pub pca_variance: f64,
    /// Shift added to the calibrated clustering threshold.
    pub threshold_bias: f64,
    /// When set, replaces score calibration with an absolute threshold.
    pub fixed_threshold: Option<f64>,
    /// Discriminant-projection size for the Bayesian HMM stage (clamped
    /// to the embedding dimensionality).
    pub lda_dim: usize,
    pub vb: Option<VbConfig>,
    pub frame_vb: Option<FrameVbConfig>,
    /// Overlap-detector decision threshold, in (0, 1).
    pub overlap_threshold: Option<f64>,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pca_variance > 0.0 && self.pca_variance <= 1.0) {
            return Err(Error::Config(format!(
                "variance fraction {} outside (0, 1]",
                self.pca_variance
            )));
        }
        if !self.threshold_bias.is_finite() {
            return Err(Error::Config("threshold bias must be finite".into()));
        }
        if let Some(t) = self.fixed_threshold {
            if !t.is_finite() {
                return Err(Error::Config("fixed threshold must be finite".into()));
            }
        }
        if self.lda_dim == 0 {
            return Err(Error::Config("projection size must be positive".into()));
        }
        if let Some(vb) = &self.vb {
            vb.validate()?;
        }
        if let Some(fv) = &self.frame_vb {
            fv.validate()?;
        }
        if let Some(t) = self.overlap_threshold {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!(
                    "overlap threshold {t} outside (0, 1)"
                )));
            }
        }
        Ok(())
    }

    /// Flat key-value rendering of every effective setting, for run
    /// reports and config files.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = vec![
            ("whiten_scope".into(), self.whiten_scope.name().into()),
            ("pca_variance".into(), format!("{}", self.pca_variance)),
            ("threshold_bias".into(), format!("{}", self.threshold_bias)),
            (
                "fixed_threshold".into(),
                self.fixed_threshold
                    .map(|t| format!("{t}"))
                    .unwrap_or_else(|| "none".into()),
            ),
            ("lda_dim".into(), format!("{}", self.lda_dim)),
            ("vb.enabled".into(), format!("{}", self.vb.is_some())),
        ];
        if let Some(vb) = &self.vb {
            kv.push(("vb.loop_probability".into(), format!("{}", vb.loop_probability)));
            kv.push(("vb.acoustic_scale".into(), format!("{}", vb.acoustic_scale)));
            kv.push((
                "vb.speaker_regularization".into(),
                format!("{}", vb.speaker_regularization),
            ));
            kv.push(("vb.init_smoothing".into(), format!("{}", vb.init_smoothing)));
            kv.push(("vb.max_iterations".into(), format!("{}", vb.max_iterations)));
            kv.push(("vb.elbo_tolerance".into(), format!("{}", vb.elbo_tolerance)));
            kv.push(("vb.prune_threshold".into(), format!("{}", vb.prune_threshold)));
        }
        kv.push(("frame_vb.enabled".into(), format!("{}", self.frame_vb.is_some())));
        if let Some(fv) = &self.frame_vb {
            kv.push(("frame_vb.acoustic_scale".into(), format!("{}", fv.acoustic_scale)));
            kv.push((
                "frame_vb.loop_probability".into(),
                format!("{}", fv.loop_probability),
            ));
            kv.push(("frame_vb.min_duration".into(), format!("{}", fv.min_duration)));
            kv.push(("frame_vb.downsample".into(), format!("{}", fv.downsample)));
        }
        kv.push((
            "overlap.enabled".into(),
            format!("{}", self.overlap_threshold.is_some()),
        ));
        if let Some(t) = self.overlap_threshold {
            kv.push(("overlap.threshold".into(), format!("{t}")));
        }
        kv
    }

    /// Applies one `key = value` override; keys match [`Self::describe`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_f64 = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("'{v}' is not a number")))
        };
        let parse_usize = |v: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| Error::Config(format!("'{v}' is not a count")))
        };
        let parse_bool = |v: &str| -> Result<bool> {
            match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::Config(format!("'{v}' is not true/false"))),
            }
        };
        match key {
            "whiten_scope" => self.whiten_scope = WhitenScope::parse(value)?,
            "pca_variance" => self.pca_variance = parse_f64(value)?,
            "threshold_bias" => self.threshold_bias = parse_f64(value)?,
            "fixed_threshold" => {
                self.fixed_threshold = if value == "none" {
                    None
                } else {
                    Some(parse_f64(value)?)
                }
            }
            "lda_dim" => self.lda_dim = parse_usize(value)?,
            "vb.enabled" => {
                self.vb = if parse_bool(value)? {
                    Some(self.vb.clone().unwrap_or_default())
                } else {
                    None
                }
            }
            "vb.loop_probability" => self.vb_mut()?.loop_probability = parse_f64(value)?,
            "vb.acoustic_scale" => self.vb_mut()?.acoustic_scale = parse_f64(value)?,
            "vb.speaker_regularization" => {
                self.vb_mut()?.speaker_regularization = parse_f64(value)?
            }
            "vb.init_smoothing" => self.vb_mut()?.init_smoothing = parse_f64(value)?,
            "vb.max_iterations" => self.vb_mut()?.max_iterations = parse_usize(value)?,
            "vb.elbo_tolerance" => self.vb_mut()?.elbo_tolerance = parse_f64(value)?,
            "vb.prune_threshold" => self.vb_mut()?.prune_threshold = parse_f64(value)?,
            "frame_vb.enabled" => {
                self.frame_vb = if parse_bool(value)? {
                    Some(self.frame_vb.clone().unwrap_or_default())
                } else {
                    None
                }
            }
            "frame_vb.acoustic_scale" => self.frame_vb_mut()?.acoustic_scale = parse_f64(value)?,
            "frame_vb.loop_probability" => {
                self.frame_vb_mut()?.loop_probability = parse_f64(value)?
            }
            "frame_vb.min_duration" => self.frame_vb_mut()?.min_duration = parse_usize(value)?,
            "frame_vb.downsample" => self.frame_vb_mut()?.downsample = parse_usize(value)?,
            "overlap.enabled" => {
                if !parse_bool(value)? {
                    self.overlap_threshold = None;
                } else if self.overlap_threshold.is_none() {
                    self.overlap_threshold = Some(0.7);
                }
            }
            "overlap.threshold" => self.overlap_threshold = Some(parse_f64(value)?),
            other => {
                return Err(Error::Config(format!("unknown configuration key '{other}'")))
            }
        }
        Ok(())
    }

    fn vb_mut(&mut self) -> Result<&mut VbConfig> {
        self.vb
            .as_mut()
            .ok_or_else(|| Error::Config("resegmentation is disabled; enable vb first".into()))
    }

    fn frame_vb_mut(&mut self) -> Result<&mut FrameVbConfig> {
        self.frame_vb.as_mut().ok_or_else(|| {
            Error::Config("frame refinement is disabled; enable frame_vb first".into())
        })
    }
}

/// Named operating points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Calibrated clustering, resegmentation, frame refinement, overlap
    /// handling; neutral threshold bias.
    System1,
    /// System 1 retuned for harder far-field material: tighter projection
    /// and longer speaker turns.
    McClane,
    /// Mid-range variant with a positive threshold bias and overlap
    /// handling at a stricter detector threshold.
    System2,
    /// System 2 without the overlap stage.
    System2b,
    /// Multi-channel score averaging with a fixed clustering threshold;
    /// clustering only.
    System3,
    /// Single-channel fixed-threshold clustering only.
    System4,
}

impl Preset {
    pub fn all() -> [Preset; 6] {
        [
            Preset::System1,
            Preset::McClane,
            Preset::System2,
            Preset::System2b,
            Preset::System3,
            Preset::System4,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::System1 => "system1",
            Preset::McClane => "mcclane",
            Preset::System2 => "system2",
            Preset::System2b => "system2b",
            Preset::System3 => "system3",
            Preset::System4 => "system4",
        }
    }

    pub fn parse(s: &str) -> Result<Preset> {
        Preset::all()
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown preset '{s}' (expected one of {})",
                    Preset::all().map(|p| p.name()).join(", ")
                ))
            })
    }

    pub fn config(self) -> PipelineConfig {
        let base_vb = VbConfig {
            loop_probability: 0.8,
            acoustic_scale: 0.4,
            speaker_regularization: 11.0,
            init_smoothing: 5.0,
            max_iterations: 40,
            elbo_tolerance: 1e-4,
            prune_threshold: 0.05,
        };
        let base_frame = FrameVbConfig {
            acoustic_scale: 0.1,
            loop_probability: 0.95,
            min_duration: 1,
            downsample: 5,
        };
        let system1 = PipelineConfig {
            whiten_scope: WhitenScope::Pooled,
            pca_variance: 0.35,
            threshold_bias: 0.0,
            fixed_threshold: None,
            lda_dim: 220,
            vb: Some(base_vb.clone()),
            frame_vb: Some(base_frame.clone()),
            overlap_threshold: Some(0.7),
        };
        match self {
            Preset::System1 => system1,
            Preset::McClane => PipelineConfig {
                pca_variance: 0.22,
                threshold_bias: 0.2,
                lda_dim: 250,
                vb: Some(VbConfig {
                    loop_probability: 0.95,
                    speaker_regularization: 12.0,
                    ..base_vb
                }),
                ..system1
            },
            Preset::System2 => PipelineConfig {
                pca_variance: 0.30,
                threshold_bias: 0.2,
                lda_dim: 250,
                vb: Some(VbConfig {
                    loop_probability: 0.7,
                    speaker_regularization: 12.0,
                    ..base_vb
                }),
                overlap_threshold: Some(0.8),
                ..system1
            },
            Preset::System2b => PipelineConfig {
                overlap_threshold: None,
                ..Preset::System2.config()
            },
            Preset::System3 => PipelineConfig {
                fixed_threshold: Some(2.1),
                vb: None,
                frame_vb: None,
                overlap_threshold: None,
                ..system1
            },
            Preset::System4 => PipelineConfig {
                fixed_threshold: Some(1.8),
                vb: None,
                frame_vb: None,
                overlap_threshold: None,
                ..system1
            },
        }
    }
}

/// Trained models required by the configured stages.
#[derive(Debug, Clone)]
pub struct ModelSet {
    /// Scoring backend, trained on conditioned embeddings.
    pub plda: PldaModel,
    /// Optional second backend; when present, scoring uses the equal
    /// interpolation of the two.
    pub second_plda: Option<PldaModel>,
    pub eigenvoice: Option<EigenvoiceModel>,
    pub overlap_model: Option<LogRegModel>,
}

impl ModelSet {
    pub fn new(plda: PldaModel) -> ModelSet {
        ModelSet {
            plda,
            second_plda: None,
            eigenvoice: None,
            overlap_model: None,
        }
    }

    /// The scoring model: the primary backend, or its equal interpolation
    /// with the second one.
    pub fn effective_plda(&self) -> Result<PldaModel> {
        match &self.second_plda {
            Some(second) => interpolate(&self.plda, second, 0.5),
            None => Ok(self.plda.clone()),
        }
    }
}

/// Everything known about one recording before diarization.
#[derive(Debug, Clone)]
pub struct RecordingInput {
    /// One embedding sequence per channel; all channels share the
    /// segmentation.
    pub channels: Vec<RecordingEmbeddings>,
    pub speech: Vec<SpeechRegion>,
    /// Frame-level features for the refinement stage (same CSV layout as
    /// embeddings: each row a timed frame).
    pub frames: Option<RecordingEmbeddings>,
}

impl RecordingInput {
    pub fn recording_id(&self) -> &str {
        &self.channels[0].recording_id
    }
}

/// Per-recording processing facts for run reports.
#[derive(Debug, Clone)]
pub struct RecordingDiagnostics {
    pub recording_id: String,
    /// Clustering stop threshold actually used.
    pub threshold: f64,
    /// Cluster count out of agglomerative clustering.
    pub initial_clusters: usize,
    /// Speaker count after resegmentation, when that stage ran.
    pub vb_speakers: Option<usize>,
    pub vb_iterations: Option<usize>,
    pub overlap_segments_added: usize,
    pub overlap_warnings: usize,
}

/// Estimates the corpus-level centering/whitening transform from every
/// channel of every recording.
pub fn estimate_pooled_whitening(inputs: &[RecordingInput]) -> Result<AffineTransform> {
    let mut all: Vec<DVector<f64>> = Vec::new();
    for input in inputs {
        for channel in &input.channels {
            all.extend(channel.vectors());
        }
    }
    estimate_center_whiten(&all)
}

fn conditioned_channels(
    input: &RecordingInput,
    whiten: &AffineTransform,
) -> Result<Vec<Vec<DVector<f64>>>> {
    input
        .channels
        .iter()
        .map(|ch| length_normalize_all(&whiten.apply_all(&ch.vectors())))
        .collect()
}

/// Mean of the conditioned channels, re-normalized (the single-channel
/// case reduces to that channel).
fn fused_vectors(conditioned: &[Vec<DVector<f64>>]) -> Result<Vec<DVector<f64>>> {
    let n = conditioned[0].len();
    let mut fused = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = conditioned[0][i].clone();
        for channel in &conditioned[1..] {
            acc += &channel[i];
        }
        acc /= conditioned.len() as f64;
        fused.push(length_normalize(&acc)?);
    }
    Ok(fused)
}

/// Diarizes one recording through every configured stage. With pooled
/// whitening scope the corpus transform must be supplied.
pub fn diarize_recording(
    input: &RecordingInput,
    models: &ModelSet,
    config: &PipelineConfig,
    pooled_whitening: Option<&AffineTransform>,
) -> Result<(DiarizationHypothesis, RecordingDiagnostics)> {
    config.validate()?;
    if input.channels.is_empty() {
        return Err(Error::EmptyInput("recording has no channels".into()));
    }
    let n_segments = input.channels[0].len();
    if n_segments == 0 {
        return Err(Error::EmptyInput(format!(
            "recording {} has no embeddings",
            input.recording_id()
        )));
    }
    for ch in &input.channels[1..] {
        if ch.len() != n_segments || ch.dim != input.channels[0].dim {
            return Err(Error::Dimension(format!(
                "channels of {} disagree in segment count or dimension",
                input.recording_id()
            )));
        }
    }
    if config.frame_vb.is_some() {
        if models.eigenvoice.is_none() {
            return Err(Error::Config(
                "frame refinement is enabled but no eigenvoice model was given".into(),
            ));
        }
        if input.frames.is_none() {
            return Err(Error::Config(format!(
                "frame refinement is enabled but recording {} has no frame features",
                input.recording_id()
            )));
        }
    }
    if config.overlap_threshold.is_some() && models.overlap_model.is_none() {
        return Err(Error::Config(
            "overlap handling is enabled but no overlap detector was given".into(),
        ));
    }

    // Conditioning.
    let per_recording;
    let whiten = match config.whiten_scope {
        WhitenScope::Pooled => pooled_whitening.ok_or_else(|| {
            Error::Config("pooled whitening scope requires the corpus transform".into())
        })?,
        WhitenScope::PerRecording => {
            let mut all = Vec::new();
            for ch in &input.channels {
                all.extend(ch.vectors());
            }
            // A recording too small to estimate statistics from is passed
            // through unwhitened.
            per_recording = if all.len() < 2 {
                AffineTransform::identity(input.channels[0].dim)
            } else {
                estimate_center_whiten(&all)?
            };
            &per_recording
        }
    };
    let conditioned = conditioned_channels(input, whiten)?;
    let plda = models.effective_plda()?;

    // Pairwise scores per channel in that channel's reduced space, then
    // fused by averaging.
    let mut channel_scores = Vec::with_capacity(conditioned.len());
    for channel in &conditioned {
        if n_segments < 2 {
            break;
        }
        let pca = per_recording_pca(channel, config.pca_variance)?;
        let reduced = pca.apply_all(channel);
        let model = plda.transformed(&pca)?;
        channel_scores.push(llr_matrix(&model, &reduced)?);
    }

    let (labels, threshold) = if n_segments < 2 {
        (ClusterLabels::from_raw(vec![0]), f64::NAN)
    } else {
        let scores = average_similarities(&channel_scores)?;
        let threshold = match config.fixed_threshold {
            Some(t) => t,
            None => {
                let off = scores.off_diagonal_scores();
                if off.len() >= 10 {
                    let fit = fit_two_gaussians(&off)?;
                    calibration_threshold(&fit, config.threshold_bias)?
                } else {
                    // Too few pairs to calibrate: fall back to the neutral
                    // likelihood-ratio decision point plus the bias.
                    config.threshold_bias
                }
            }
        };
        (upgma_cluster(&scores, threshold), threshold)
    };

    let mut diagnostics = RecordingDiagnostics {
        recording_id: input.recording_id().to_string(),
        threshold,
        initial_clusters: labels.n_clusters(),
        vb_speakers: None,
        vb_iterations: None,
        overlap_segments_added: 0,
        overlap_warnings: 0,
    };

    // Embedding-level resegmentation in the discriminant space.
    let fused = fused_vectors(&conditioned)?;
    let mut labels = labels;
    if let Some(vb_config) = &config.vb {
        if n_segments >= 2 {
            let lda_dim = config.lda_dim.min(plda.dim());
            let (lda, phi) = lda_from_plda(&plda, lda_dim)?;
            let projected = lda.apply_all(&fused);
            let mut observations = DMatrix::zeros(n_segments, lda_dim);
            for (i, v) in projected.iter().enumerate() {
                observations.row_mut(i).copy_from(&v.transpose());
            }
            let init = init_soft(&labels, vb_config.init_smoothing);
            let outcome = run_vb(&observations, init, &phi, vb_config)?;
            diagnostics.vb_speakers = Some(outcome.speaker_count);
            diagnostics.vb_iterations = Some(outcome.elbo_trace.len());
            labels = ClusterLabels::from_raw(outcome.assignment.argmax_labels())
                .relabeled_by_first_appearance();
        }
    }

    let mut hypothesis = labels_to_hypothesis(&input.channels[0], labels.labels());

    // Frame-level refinement inside speech regions.
    if let Some(frame_config) = &config.frame_vb {
        let frames = input.frames.as_ref().unwrap();
        let eigenvoice = models.eigenvoice.as_ref().unwrap();
        let speech = merge_regions(input.speech.clone());
        let mut kept = Vec::new();
        for seg in &frames.segments {
            let center = seg.onset + 0.5 * seg.duration;
            if speech
                .iter()
                .any(|r| center >= r.onset - 1e-9 && center <= r.offset + 1e-9)
            {
                kept.push(seg.clone());
            }
        }
        if !kept.is_empty() {
            let masked = RecordingEmbeddings {
                recording_id: frames.recording_id.clone(),
                dim: frames.dim,
                segments: kept,
            };
            let times: Vec<f64> = masked
                .segments
                .iter()
                .map(|s| s.onset + 0.5 * s.duration)
                .collect();
            let init = frame_init_from_times(&hypothesis, &times)?;
            let refined = single_vb_pass(&masked.matrix(), &init, eigenvoice, frame_config)?;
            hypothesis = labels_to_hypothesis(&masked, &refined.argmax_labels());
        }
    }

    // Overlap post-processing: detect on fused conditioned embeddings and
    // add the nearest other speaker inside flagged windows.
    if let Some(threshold) = config.overlap_threshold {
        let detector = models.overlap_model.as_ref().unwrap();
        let flags = detect(detector, &fused, threshold);
        let mut regions = Vec::new();
        for (seg, flagged) in input.channels[0].segments.iter().zip(&flags) {
            if *flagged {
                regions.push(SpeechRegion {
                    onset: seg.onset,
                    offset: seg.onset + seg.duration,
                });
            }
        }
        let regions = merge_regions(regions);
        let before = hypothesis.segments.len();
        let (augmented, warnings) = assign_two_closest(&hypothesis, &regions)?;
        diagnostics.overlap_segments_added = augmented.segments.len() - before;
        diagnostics.overlap_warnings = warnings;
        hypothesis = augmented;
    }

    Ok((hypothesis, diagnostics))
}

/// Sequential corpus driver: estimates pooled whitening when needed, then
/// diarizes every recording in input order.
pub fn diarize_corpus(
    inputs: &[RecordingInput],
    models: &ModelSet,
    config: &PipelineConfig,
) -> Result<Vec<(DiarizationHypothesis, RecordingDiagnostics)>> {
    if inputs.is_empty() {
        return Err(Error::EmptyInput("no recordings to diarize".into()));
    }
    let pooled = match config.whiten_scope {
        WhitenScope::Pooled => Some(estimate_pooled_whitening(inputs)?),
        WhitenScope::PerRecording => None,
    };
    inputs
        .iter()
        .map(|input| diarize_recording(input, models, config, pooled.as_ref()))
        .collect()
}

/// Unsupervised scoring-model adaptation: clusters each adaptation
/// recording with a permissive threshold shift, treats the clusters as
/// speaker labels, trains a second model on them, and returns the equal
/// interpolation with the base model.
pub fn adapt_plda_unsupervised(
    base: &PldaModel,
    recordings: &[Vec<DVector<f64>>],
    threshold_bias: f64,
    em_iterations: usize,
) -> Result<PldaModel> {
    let mut classes: Vec<Vec<DVector<f64>>> = Vec::new();
    for vectors in recordings {
        if vectors.len() < 2 {
            continue;
        }
        let scores = llr_matrix(base, vectors)?;
        let off = scores.off_diagonal_scores();
        let threshold = if off.len() >= 10 {
            let fit = fit_two_gaussians(&off)?;
            calibration_threshold(&fit, threshold_bias)?
        } else {
            threshold_bias
        };
        let labels = upgma_cluster(&scores, threshold);
        let n_clusters = labels.n_clusters();
        let mut grouped: Vec<Vec<DVector<f64>>> = vec![Vec::new(); n_clusters];
        for (vector, &label) in vectors.iter().zip(labels.labels()) {
            grouped[label].push(vector.clone());
        }
        classes.extend(grouped);
    }
    if classes.len() < 2 {
        return Err(Error::InsufficientData(
            "adaptation produced fewer than two pseudo-speaker classes".into(),
        ));
    }
    let adapted = train_em(&classes, em_iterations)?;
    interpolate(base, &adapted, 0.5)
}
