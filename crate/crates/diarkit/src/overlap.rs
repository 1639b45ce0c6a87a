//! Overlapped-speech handling: a regularized logistic detector over
//! segment embeddings, and a post-processing step that adds the nearest
//! other speaker as a second label inside detected overlap regions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::io::{DiarizationHypothesis, LabeledSegment, SpeechRegion};
use crate::transforms::parse_csv_rows;

/// Width of the assignment grid inside overlap regions, in seconds.
const FRAME_STEP: f64 = 0.01;

/// Binary logistic classifier with an explicit intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: DVector<f64>,
    pub bias: f64,
}

impl LogRegModel {
    pub fn probability(&self, x: &DVector<f64>) -> f64 {
        sigmoid(self.weights.dot(x) + self.bias)
    }

    /// Writes the model as one CSV line: bias first, then the weights.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut cells = vec![format!("{}", self.bias)];
        cells.extend(self.weights.iter().map(|v| format!("{v}")));
        std::fs::write(path, cells.join(",") + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<LogRegModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows = parse_csv_rows(&text, path)?;
        if rows.len() != 1 || rows[0].len() < 2 {
            return Err(Error::Format(format!(
                "overlap model {} must hold one line with a bias and at least one weight",
                path.display()
            )));
        }
        let bias = rows[0][0];
        let weights = DVector::from_vec(rows[0][1..].to_vec());
        Ok(LogRegModel { weights, bias })
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z), stable for large |z|.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Penalized negative log-likelihood; the intercept is not penalized.
fn objective(
    vectors: &[DVector<f64>],
    labels: &[bool],
    weights: &DVector<f64>,
    bias: f64,
    l2: f64,
) -> f64 {
    let mut nll = 0.0;
    for (x, &y) in vectors.iter().zip(labels) {
        let z = weights.dot(x) + bias;
        // -ln sigma(z) = softplus(-z); -ln(1 - sigma(z)) = softplus(z).
        nll += if y { softplus(-z) } else { softplus(z) };
    }
    nll + 0.5 * l2 * weights.norm_squared()
}

/// Fits the detector by Newton iterations with step halving on the
/// penalized log-likelihood. The intercept is left unregularized, so on
/// data whose labels carry no feature information the fitted bias is the
/// log-odds of the label prior. Fails on single-class data and when the
/// gradient has not reached 1e-8 within the iteration budget.
pub fn train_logreg(
    vectors: &[DVector<f64>],
    labels: &[bool],
    l2: f64,
) -> Result<LogRegModel> {
    if vectors.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} vectors but {} labels",
            vectors.len(),
            labels.len()
        )));
    }
    if vectors.is_empty() {
        return Err(Error::EmptyInput("no training vectors".into()));
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Dimension("inconsistent feature dimensions".into()));
    }
    if l2 < 0.0 {
        return Err(Error::Config(format!("negative regularization {l2}")));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::DegenerateInput(
            "training labels contain a single class".into(),
        ));
    }

    let mut weights = DVector::zeros(dim);
    let mut bias = 0.0;
    let mut value = objective(vectors, labels, &weights, bias, l2);
    for _ in 0..100 {
        // Gradient and Hessian over the augmented parameter [w; b].
        let mut grad = DVector::zeros(dim + 1);
        let mut hess = DMatrix::zeros(dim + 1, dim + 1);
        for (x, &y) in vectors.iter().zip(labels) {
            let p = sigmoid(weights.dot(x) + bias);
            let residual = p - if y { 1.0 } else { 0.0 };
            let curvature = (p * (1.0 - p)).max(1e-12);
            for a in 0..dim {
                grad[a] += residual * x[a];
                for b in 0..dim {
                    hess[(a, b)] += curvature * x[a] * x[b];
                }
                hess[(a, dim)] += curvature * x[a];
                hess[(dim, a)] += curvature * x[a];
            }
            grad[dim] += residual;
            hess[(dim, dim)] += curvature;
        }
        for a in 0..dim {
            grad[a] += l2 * weights[a];
            hess[(a, a)] += l2;
        }
        if grad.norm() < 1e-8 {
            return Ok(LogRegModel { weights, bias });
        }
        let chol = hess.cholesky().ok_or_else(|| {
            Error::Numerical("logistic Hessian is not positive definite".into())
        })?;
        let step = chol.solve(&grad);
        // Step halving keeps the penalized likelihood monotone up to
        // evaluation round-off; without the slack the search can dead-lock
        // one ulp away from the optimum, with the gradient still above
        // tolerance but every measurable decrease below float resolution.
        let slack = 1e-12 * (1.0 + value.abs());
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let w_try = &weights - step.rows(0, dim) * scale;
            let b_try = bias - step[dim] * scale;
            let v_try = objective(vectors, labels, &w_try, b_try, l2);
            if v_try <= value + slack {
                weights = w_try;
                bias = b_try;
                value = v_try;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(Error::Numerical(
                "logistic fit stalled without reaching the gradient tolerance".into(),
            ));
        }
    }
    Err(Error::Numerical(
        "logistic fit did not converge within 100 iterations".into(),
    ))
}

/// Flags vectors whose overlap probability strictly exceeds the threshold.
pub fn detect(model: &LogRegModel, vectors: &[DVector<f64>], threshold: f64) -> Vec<bool> {
    vectors
        .iter()
        .map(|x| model.probability(x) > threshold)
        .collect()
}

/// Labels feature windows for detector training: a window is positive
/// when more than half of its duration has at least two simultaneous
/// reference speakers. Windows are (onset, duration) pairs.
pub fn overlap_training_labels(
    reference: &DiarizationHypothesis,
    windows: &[(f64, f64)],
) -> Vec<bool> {
    let overlapped = overlap_regions_of(reference);
    windows
        .iter()
        .map(|&(onset, duration)| {
            let offset = onset + duration;
            let mut covered = 0.0;
            for region in &overlapped {
                covered += (region.offset.min(offset) - region.onset.max(onset)).max(0.0);
            }
            covered > 0.5 * duration
        })
        .collect()
}

/// Maximal regions where at least two reference speakers talk at once.
fn overlap_regions_of(reference: &DiarizationHypothesis) -> Vec<SpeechRegion> {
    let mut cuts: Vec<f64> = Vec::new();
    for seg in &reference.segments {
        cuts.push(seg.onset);
        cuts.push(seg.offset());
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut regions = Vec::new();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let count = reference
            .segments
            .iter()
            .filter(|seg| seg.onset <= mid && mid < seg.offset())
            .count();
        if count >= 2 {
            regions.push(SpeechRegion { onset: a, offset: b });
        }
    }
    crate::io::merge_regions(regions)
}

/// Inside each detected overlap region, adds the nearest other speaker as
/// a second label on a 10 ms grid: the base speaker is whoever the
/// hypothesis assigns at each instant, and the added speaker is the one
/// whose closest segment edge (zero if the instant is inside a segment)
/// is nearest, with ties broken by earlier segment onset, then speaker
/// name. Consecutive grid frames with the same added speaker merge into
/// one segment. The input hypothesis must have at most one speaker per
/// instant (overlap regions must not yet have been processed) and the
/// regions must be disjoint.
///
/// Returns the augmented hypothesis (original segments untouched, added
/// segments appended) and the number of regions skipped because fewer
/// than two speakers exist in the hypothesis.
pub fn assign_two_closest(
    hypothesis: &DiarizationHypothesis,
    regions: &[SpeechRegion],
) -> Result<(DiarizationHypothesis, usize)> {
    hypothesis.validate()?;
    let speakers = hypothesis.speakers();
    if speakers.len() < 2 {
        return Ok((hypothesis.clone(), regions.len()));
    }

    struct Frame {
        index: usize,
        start: f64,
        end: f64,
        speaker: String,
    }

    let mut additions: Vec<LabeledSegment> = Vec::new();
    for region in regions {
        if region.offset <= region.onset {
            return Err(Error::Format(format!(
                "empty overlap region [{}, {}]",
                region.onset, region.offset
            )));
        }
        let mut frames: Vec<Frame> = Vec::new();
        let mut k = 0usize;
        loop {
            let start = region.onset + k as f64 * FRAME_STEP;
            if start >= region.offset - 1e-12 {
                break;
            }
            let end = (start + FRAME_STEP).min(region.offset);
            let center = 0.5 * (start + end);
            // Base speaker: the hypothesis segment covering this instant.
            let base = hypothesis
                .segments
                .iter()
                .find(|seg| seg.onset <= center && center < seg.offset())
                .map(|seg| seg.speaker.clone());
            if let Some(base) = base {
                // Nearest segment of any other speaker, by edge distance.
                let mut best: Option<(f64, f64, &str)> = None;
                for seg in &hypothesis.segments {
                    if seg.speaker == base {
                        continue;
                    }
                    let distance = if center >= seg.onset && center <= seg.offset() {
                        0.0
                    } else {
                        (center - seg.onset).abs().min((center - seg.offset()).abs())
                    };
                    let candidate = (distance, seg.onset, seg.speaker.as_str());
                    let better = match best {
                        None => true,
                        Some(cur) => {
                            (candidate.0, candidate.1, candidate.2)
                                < (cur.0, cur.1, cur.2)
                        }
                    };
                    if better {
                        best = Some(candidate);
                    }
                }
                if let Some((_, _, second)) = best {
                    frames.push(Frame {
                        index: k,
                        start,
                        end,
                        speaker: second.to_string(),
                    });
                }
            }
            k += 1;
        }
        // Merge consecutive frames sharing the added speaker.
        let mut run: Option<(usize, f64, f64, String)> = None;
        for frame in frames {
            match &mut run {
                Some((last, _, end, speaker))
                    if *last + 1 == frame.index && *speaker == frame.speaker =>
                {
                    *last = frame.index;
                    *end = frame.end;
                }
                _ => {
                    if let Some((_, start, end, speaker)) = run.take() {
                        additions.push(LabeledSegment {
                            onset: start,
                            duration: end - start,
                            speaker,
                        });
                    }
                    run = Some((frame.index, frame.start, frame.end, frame.speaker));
                }
            }
        }
        if let Some((_, start, end, speaker)) = run {
            additions.push(LabeledSegment {
                onset: start,
                duration: end - start,
                speaker,
            });
        }
    }

    let mut segments = hypothesis.segments.clone();
    segments.extend(additions);
    Ok((
        DiarizationHypothesis::new(hypothesis.recording_id.clone(), segments),
        0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::CounterRng;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("diarkit-overlap-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    fn hyp(segments: Vec<(f64, f64, &str)>) -> DiarizationHypothesis {
        DiarizationHypothesis::new(
            "rec",
            segments
                .into_iter()
                .map(|(onset, duration, speaker)| LabeledSegment {
                    onset,
                    duration,
                    speaker: speaker.to_string(),
                })
                .collect(),
        )
    }

    #[test]
    fn separable_data_is_fit_perfectly() {
        let mut rng = CounterRng::new(1);
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..200 {
            let y = rng.uniform() < 0.5;
            let shift = if y { 2.0 } else { -2.0 };
            vectors.push(DVector::from_vec(vec![
                shift + 0.3 * rng.standard_normal(),
                rng.standard_normal(),
            ]));
            labels.push(y);
        }
        let model = train_logreg(&vectors, &labels, 1.0).unwrap();
        let correct = vectors
            .iter()
            .zip(&labels)
            .filter(|(x, &y)| (model.probability(x) > 0.5) == y)
            .count();
        assert_eq!(correct, vectors.len());
        assert!(model.weights[0] > 1.0, "separating weight {}", model.weights[0]);
    }

    #[test]
    fn uninformative_features_give_prior_log_odds_bias() {
        // Every vector identical: the penalty forces the weights to zero
        // and the unregularized bias carries the class prior exactly.
        let vectors: Vec<DVector<f64>> = (0..100)
            .map(|_| DVector::from_vec(vec![1.5, -2.0]))
            .collect();
        let labels: Vec<bool> = (0..100).map(|i| i < 30).collect();
        let model = train_logreg(&vectors, &labels, 1.0).unwrap();
        let prior_log_odds = (0.3f64 / 0.7).ln();
        assert!(
            (model.bias - prior_log_odds).abs() < 1e-3,
            "bias {} vs {prior_log_odds}",
            model.bias
        );
        assert!(model.weights.norm() < 1e-3, "weights {:?}", model.weights);
    }

    #[test]
    fn huge_regularization_shrinks_weights_to_zero() {
        let mut rng = CounterRng::new(2);
        let vectors: Vec<DVector<f64>> = (0..120)
            .map(|_| DVector::from_vec(vec![rng.standard_normal(), rng.standard_normal()]))
            .collect();
        let labels: Vec<bool> = (0..120).map(|i| i % 3 == 0).collect();
        let model = train_logreg(&vectors, &labels, 1e9).unwrap();
        assert!(model.weights.norm() < 1e-6);
        let prior = 40.0_f64 / 120.0;
        assert!((model.bias - (prior / (1.0 - prior)).ln()).abs() < 0.05);
    }

    #[test]
    fn single_class_is_rejected() {
        let vectors = vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![2.0])];
        assert!(matches!(
            train_logreg(&vectors, &[true, true], 1.0),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn model_round_trips_through_csv() {
        let model = LogRegModel {
            weights: DVector::from_vec(vec![0.25, -1.5, 3.0]),
            bias: -0.75,
        };
        let path = tmp("logreg.csv");
        model.save(&path).unwrap();
        assert_eq!(LogRegModel::load(&path).unwrap(), model);
    }

    #[test]
    fn detect_thresholds_probabilities() {
        let zero = LogRegModel {
            weights: DVector::zeros(2),
            bias: 0.0,
        };
        let xs = vec![DVector::from_vec(vec![5.0, -3.0])];
        // A zero model scores exactly one half everywhere.
        assert_eq!(detect(&zero, &xs, 0.7), vec![false]);
        assert_eq!(detect(&zero, &xs, 0.0), vec![true]);
        assert_eq!(detect(&zero, &xs, 0.5), vec![false], "strict comparison");
    }

    #[test]
    fn boundary_region_adds_each_side_to_the_other() {
        let hypothesis = hyp(vec![(0.0, 5.0, "a"), (5.0, 5.0, "b")]);
        let regions = vec![SpeechRegion { onset: 4.5, offset: 5.5 }];
        let (out, warnings) = assign_two_closest(&hypothesis, &regions).unwrap();
        assert_eq!(warnings, 0);
        let added: Vec<&LabeledSegment> = out.segments.iter().filter(|s| s.duration < 5.0).collect();
        assert_eq!(added.len(), 2);
        // Left half of the region: base a, added b; right half: base b, added a.
        let b_add = added.iter().find(|s| s.speaker == "b").unwrap();
        let a_add = added.iter().find(|s| s.speaker == "a").unwrap();
        assert!((b_add.onset - 4.5).abs() < 1e-9);
        assert!((b_add.offset() - 5.0).abs() < 1e-9);
        assert!((a_add.onset - 5.0).abs() < 1e-9);
        assert!((a_add.offset() - 5.5).abs() < 1e-9);
    }

    #[test]
    fn nearest_speaker_wins_inside_long_segment() {
        // A base segment with b before and c after; every instant of the
        // region is 2-ish seconds from b's edge and 3-ish from c's, so b
        // is the added speaker throughout.
        let hypothesis = hyp(vec![
            (0.0, 4.0, "b"),
            (4.0, 5.5, "a"),
            (9.5, 3.0, "c"),
        ]);
        let regions = vec![SpeechRegion { onset: 6.0, offset: 6.5 }];
        let (out, _) = assign_two_closest(&hypothesis, &regions).unwrap();
        let added: Vec<&LabeledSegment> = out
            .segments
            .iter()
            .filter(|s| !hypothesis.segments.contains(s))
            .collect();
        assert_eq!(added.len(), 1);
        assert_eq!(added[0].speaker, "b");
        assert!((added[0].onset - 6.0).abs() < 1e-9);
        assert!((added[0].offset() - 6.5).abs() < 1e-9);
    }

    #[test]
    fn single_speaker_hypothesis_skips_regions_with_warning() {
        let hypothesis = hyp(vec![(0.0, 10.0, "a")]);
        let regions = vec![
            SpeechRegion { onset: 1.0, offset: 2.0 },
            SpeechRegion { onset: 5.0, offset: 6.0 },
        ];
        let (out, warnings) = assign_two_closest(&hypothesis, &regions).unwrap();
        assert_eq!(warnings, 2);
        assert_eq!(out.segments, hypothesis.segments);
    }

    #[test]
    fn additions_only_and_confined_to_regions() {
        let hypothesis = hyp(vec![
            (0.0, 3.0, "a"),
            (3.0, 3.0, "b"),
            (6.0, 3.0, "a"),
        ]);
        let regions = vec![
            SpeechRegion { onset: 2.5, offset: 3.5 },
            SpeechRegion { onset: 5.8, offset: 6.4 },
        ];
        let (out, _) = assign_two_closest(&hypothesis, &regions).unwrap();
        // Every original segment survives untouched.
        for seg in &hypothesis.segments {
            assert!(out.segments.contains(seg), "lost {seg:?}");
        }
        // Added material stays inside the regions.
        let added: Vec<&LabeledSegment> = out
            .segments
            .iter()
            .filter(|s| !hypothesis.segments.contains(s))
            .collect();
        assert!(!added.is_empty());
        for seg in added {
            let inside = regions.iter().any(|r| {
                seg.onset >= r.onset - 1e-9 && seg.offset() <= r.offset + 1e-9
            });
            assert!(inside, "{seg:?} escapes the regions");
        }
    }

    #[test]
    fn instants_inside_regions_carry_exactly_two_speakers() {
        let hypothesis = hyp(vec![(0.0, 4.0, "a"), (4.0, 4.0, "b")]);
        let regions = vec![SpeechRegion { onset: 3.0, offset: 5.0 }];
        let (out, _) = assign_two_closest(&hypothesis, &regions).unwrap();
        let mut probe = 3.005;
        while probe < 5.0 {
            let count = out
                .segments
                .iter()
                .filter(|s| s.onset <= probe && probe < s.offset())
                .count();
            assert_eq!(count, 2, "at {probe}");
            probe += 0.01;
        }
        // Outside the region the hypothesis is untouched: one speaker.
        for probe in [1.0, 2.5, 6.0, 7.9] {
            let count = out
                .segments
                .iter()
                .filter(|s| s.onset <= probe && probe < s.offset())
                .count();
            assert_eq!(count, 1, "at {probe}");
        }
    }

    #[test]
    fn training_labels_need_majority_overlap() {
        let reference = hyp(vec![(0.0, 10.0, "a"), (4.0, 2.0, "b")]);
        // Overlapped region is [4, 6).
        let windows = vec![
            (4.0, 1.5),  // fully overlapped
            (3.5, 1.0),  // half overlapped: strict majority fails
            (3.0, 4.0),  // 2 of 4 seconds: fails
            (4.5, 2.0),  // 1.5 of 2 seconds: positive
            (8.0, 1.5),  // no overlap
        ];
        assert_eq!(
            overlap_training_labels(&reference, &windows),
            vec![true, false, false, true, false]
        );
    }
}
