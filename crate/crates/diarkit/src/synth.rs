//! Generative test harness: samples synthetic recordings from known PLDA /
//! eigenvoice models with ground-truth labels, so that every clustering and
//! resegmentation stage can be validated against the model it assumes.
//!
//! All randomness comes from an own, fully specified counter-based PRNG so
//! that seeded tests are reproducible across platforms and unaffected by
//! library upgrades.

use nalgebra::{DMatrix, DVector};

use crate::ahc::ClusterLabels;
use crate::framevb::EigenvoiceModel;
use crate::io::{RecordingEmbeddings, SegmentEmbedding, SpeechRegion};
use crate::linalg;
use crate::plda::PldaModel;

/// Embedding grid used by sampled recordings: a new sub-segment every 0.25 s.
pub const GRID_STEP: f64 = 0.25;
/// Window length of sampled sub-segments in seconds.
pub const GRID_WINDOW: f64 = 1.5;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Finalizer of the splitmix64 generator (Steele, Lea & Flood 2014).
fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based 64-bit PRNG: output i is `mix(seed + (i+1) * 0x9E3779B97F4A7C15)`
/// with the splitmix64 mixing function. The integer stream is exactly
/// reproducible on any platform; derived Gaussians additionally depend on
/// the platform's `ln`/`cos`/`sin` rounding (at most one ulp of drift).
#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
    cached_normal: Option<f64>,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng {
            state: seed,
            cached_normal: None,
        }
    }

    /// Deterministic child generator for parallel sampling: stream `index`
    /// of a given seed never overlaps other streams' outputs in practice
    /// (distinct affine counter lanes through the same mixer).
    pub fn substream(seed: u64, index: u64) -> Self {
        CounterRng::new(splitmix64_mix(
            seed ^ (index.wrapping_add(1)).wrapping_mul(GOLDEN_GAMMA),
        ))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        splitmix64_mix(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1]; safe as a logarithm argument.
    fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    /// Uniform index in 0..n. The modulo bias is below 2^-53 for any
    /// realistic n and irrelevant for test-harness purposes.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via the Box-Muller transform (pairs cached).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let r = (-2.0 * self.uniform_open().ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * self.uniform();
        self.cached_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal_vector(&mut self, dim: usize) -> DVector<f64> {
        DVector::from_fn(dim, |_, _| self.standard_normal())
    }
}

/// First-order Markov speaker sequence: the first state is uniform, each
/// later state repeats the previous one with probability `p_loop` and
/// otherwise switches uniformly to one of the other speakers.
pub fn markov_speaker_chain(
    rng: &mut CounterRng,
    n_speakers: usize,
    length: usize,
    p_loop: f64,
) -> Vec<usize> {
    assert!(n_speakers >= 1);
    let mut labels = Vec::with_capacity(length);
    if length == 0 {
        return labels;
    }
    let mut current = rng.index(n_speakers);
    labels.push(current);
    for _ in 1..length {
        if n_speakers > 1 && rng.uniform() >= p_loop {
            let pick = rng.index(n_speakers - 1);
            current = if pick >= current { pick + 1 } else { pick };
        }
        labels.push(current);
    }
    labels
}

/// Samples one recording from a PLDA model: speaker means from
/// `N(model.mean, across)`, observations from `N(speaker mean, within)`,
/// speaker turns from a Markov chain, timestamps on the 0.25 s grid.
/// Deterministic given the seed.
pub fn sample_recording(
    model: &PldaModel,
    n_speakers: usize,
    n_segments: usize,
    p_loop: f64,
    seed: u64,
) -> (RecordingEmbeddings, ClusterLabels) {
    let mut rng = CounterRng::new(seed);
    let dim = model.dim();
    let across_sqrt = linalg::sym_sqrt(&model.across);
    let within_sqrt = linalg::sym_sqrt(&model.within);

    let speaker_means: Vec<DVector<f64>> = (0..n_speakers)
        .map(|_| &model.mean + &across_sqrt * rng.normal_vector(dim))
        .collect();
    let labels = markov_speaker_chain(&mut rng, n_speakers, n_segments, p_loop);

    let segments = labels
        .iter()
        .enumerate()
        .map(|(i, &s)| SegmentEmbedding {
            onset: i as f64 * GRID_STEP,
            duration: GRID_WINDOW,
            vector: &speaker_means[s] + &within_sqrt * rng.normal_vector(dim),
        })
        .collect();

    (
        RecordingEmbeddings {
            recording_id: format!("synth{seed}"),
            dim,
            segments,
        },
        ClusterLabels::from_raw(labels),
    )
}

/// The single speech region spanned by a sampled recording's grid.
pub fn recording_span(rec: &RecordingEmbeddings) -> SpeechRegion {
    let onset = rec.segments.first().map(|s| s.onset).unwrap_or(0.0);
    let offset = rec
        .segments
        .iter()
        .map(|s| s.onset + s.duration)
        .fold(onset, f64::max);
    SpeechRegion { onset, offset }
}

/// Samples a frame-level recording from an eigenvoice model: one standard
/// normal speaker coordinate per speaker, a Markov speaker chain over
/// frames, and each frame drawn from the speaker-shifted mixture.
/// Returns the T x F frame matrix and per-frame speaker labels.
pub fn sample_frame_recording(
    model: &EigenvoiceModel,
    n_speakers: usize,
    n_frames: usize,
    p_loop: f64,
    seed: u64,
) -> (DMatrix<f64>, Vec<usize>) {
    let mut rng = CounterRng::new(seed);
    let f = model.feature_dim();
    let speaker_coords: Vec<DVector<f64>> = (0..n_speakers)
        .map(|_| rng.normal_vector(model.rank()))
        .collect();
    // Per-speaker shifted component means.
    let shifted_means: Vec<Vec<DVector<f64>>> = speaker_coords
        .iter()
        .map(|y| {
            (0..model.components())
                .map(|c| model.component_mean(c) + model.subspace_block(c) * y)
                .collect()
        })
        .collect();

    let labels = markov_speaker_chain(&mut rng, n_speakers, n_frames, p_loop);
    let mut frames = DMatrix::zeros(n_frames, f);
    for (t, &s) in labels.iter().enumerate() {
        // Component draw by inverse CDF over the mixture weights.
        let u = rng.uniform();
        let mut c = 0;
        let mut acc = 0.0;
        for (ci, w) in model.weights.iter().enumerate() {
            acc += w;
            c = ci;
            if u < acc {
                break;
            }
        }
        let mean = &shifted_means[s][c];
        for d in 0..f {
            frames[(t, d)] = mean[d] + model.diag_covs[(c, d)].sqrt() * rng.standard_normal();
        }
    }
    (frames, labels)
}

/// Samples frames for a fixed speaker-label sequence: fresh standard
/// normal speaker coordinates, then frames drawn exactly as in
/// [`sample_frame_recording`] but without a Markov chain draw.
pub fn sample_frames_with_labels(
    model: &EigenvoiceModel,
    labels: &[usize],
    n_speakers: usize,
    seed: u64,
) -> DMatrix<f64> {
    let mut rng = CounterRng::new(seed);
    let f = model.feature_dim();
    let speaker_coords: Vec<DVector<f64>> = (0..n_speakers)
        .map(|_| rng.normal_vector(model.rank()))
        .collect();
    let shifted_means: Vec<Vec<DVector<f64>>> = speaker_coords
        .iter()
        .map(|y| {
            (0..model.components())
                .map(|c| model.component_mean(c) + model.subspace_block(c) * y)
                .collect()
        })
        .collect();
    let mut frames = DMatrix::zeros(labels.len(), f);
    for (t, &s) in labels.iter().enumerate() {
        let u = rng.uniform();
        let mut c = 0;
        let mut acc = 0.0;
        for (ci, w) in model.weights.iter().enumerate() {
            acc += w;
            c = ci;
            if u < acc {
                break;
            }
        }
        let mean = &shifted_means[s][c];
        for d in 0..f {
            frames[(t, d)] = mean[d] + model.diag_covs[(c, d)].sqrt() * rng.standard_normal();
        }
    }
    frames
}
