//! Diarization scoring: time-weighted diarization error (missed speech,
//! false alarm, speaker confusion) under an optimal speaker mapping, a
//! per-speaker Jaccard error, and corpus-level report generation.
//!
//! The time axis is cut at every reference and hypothesis boundary into
//! elementary intervals; each interval contributes per-second counts
//! following the standard convention: miss when the reference has more
//! simultaneous speakers than the hypothesis, false alarm in the opposite
//! case, and confusion for matched-but-mismapped speakers. The reference
//! to hypothesis speaker mapping maximizes total attributed time via the
//! Hungarian algorithm.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::io::DiarizationHypothesis;

/// Diarization error decomposition. All four error figures are rates:
/// fractions of the scored reference speech time, so
/// `miss + false_alarm + confusion == der`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerBreakdown {
    pub der: f64,
    pub miss: f64,
    pub false_alarm: f64,
    pub confusion: f64,
    /// Scored reference speech time in seconds (overlap counted once per
    /// simultaneous speaker); multiply the rates by this to get durations.
    pub ref_speech_time: f64,
}

/// Scores for one recording.
#[derive(Debug, Clone)]
pub struct RecordingScore {
    pub recording_id: String,
    pub der: DerBreakdown,
    pub jer: f64,
}

/// Corpus-level scores: per-recording rows plus aggregate figures.
#[derive(Debug, Clone)]
pub struct ScoreReport {
    pub recordings: Vec<RecordingScore>,
    /// Time-weighted aggregate over all recordings.
    pub total_der: DerBreakdown,
    /// Unweighted mean of the per-recording Jaccard error rates.
    pub mean_jer: f64,
    pub collar: f64,
    pub score_overlaps: bool,
}

/// One elementary interval: duration plus the reference and hypothesis
/// speakers active inside it.
struct TimelinePart {
    duration: f64,
    ref_active: Vec<usize>,
    hyp_active: Vec<usize>,
}

struct Timeline {
    parts: Vec<TimelinePart>,
    /// Attributed time per (reference speaker, hypothesis speaker).
    overlap: DMatrix<f64>,
    ref_speakers: Vec<String>,
    hyp_speakers: Vec<String>,
    ref_time: f64,
    ref_speaker_time: Vec<f64>,
    hyp_speaker_time: Vec<f64>,
}

fn merge_sorted_intervals(mut intervals: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    intervals.retain(|&(a, b)| b > a);
    intervals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in intervals {
        match merged.last_mut() {
            Some((_, end)) if a <= *end => *end = end.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
}

/// Maximal intervals where at least two reference speakers are active.
fn reference_overlap_intervals(reference: &DiarizationHypothesis) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = Vec::new();
    for seg in &reference.segments {
        cuts.push(seg.onset);
        cuts.push(seg.offset());
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut intervals = Vec::new();
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
            intervals.push((a, b));
        }
    }
    merge_sorted_intervals(intervals)
}

fn build_timeline(
    reference: &DiarizationHypothesis,
    hypothesis: &DiarizationHypothesis,
    collar: f64,
    score_overlaps: bool,
) -> Result<Timeline> {
    reference.validate()?;
    hypothesis.validate()?;
    if reference.recording_id != hypothesis.recording_id {
        return Err(Error::Format(format!(
            "scoring {} against {}: recording ids differ",
            reference.recording_id, hypothesis.recording_id
        )));
    }
    if collar < 0.0 {
        return Err(Error::Config(format!("negative collar {collar}")));
    }

    let ref_speakers = reference.speakers();
    let hyp_speakers = hypothesis.speakers();
    let ref_index: BTreeMap<&str, usize> = ref_speakers
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let hyp_index: BTreeMap<&str, usize> = hyp_speakers
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();

    // Excluded stretches: a collar around every reference boundary, plus
    // reference overlap regions when overlap is not scored.
    let mut exclusions: Vec<(f64, f64)> = Vec::new();
    if collar > 0.0 {
        for seg in &reference.segments {
            exclusions.push((seg.onset - collar, seg.onset + collar));
            exclusions.push((seg.offset() - collar, seg.offset() + collar));
        }
    }
    if !score_overlaps {
        exclusions.extend(reference_overlap_intervals(reference));
    }
    let exclusions = merge_sorted_intervals(exclusions);

    let mut cuts: Vec<f64> = Vec::new();
    for seg in reference.segments.iter().chain(&hypothesis.segments) {
        cuts.push(seg.onset);
        cuts.push(seg.offset());
    }
    for &(a, b) in &exclusions {
        cuts.push(a);
        cuts.push(b);
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();

    let mut parts = Vec::new();
    let mut overlap = DMatrix::zeros(ref_speakers.len().max(1), hyp_speakers.len().max(1));
    let mut ref_time = 0.0;
    let mut ref_speaker_time = vec![0.0; ref_speakers.len()];
    let mut hyp_speaker_time = vec![0.0; hyp_speakers.len()];
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let duration = b - a;
        if duration <= 0.0 {
            continue;
        }
        let mid = 0.5 * (a + b);
        if exclusions.iter().any(|&(s, e)| s < mid && mid < e) {
            continue;
        }
        let ref_active: Vec<usize> = reference
            .segments
            .iter()
            .filter(|seg| seg.onset <= mid && mid < seg.offset())
            .map(|seg| ref_index[seg.speaker.as_str()])
            .collect();
        let hyp_active: Vec<usize> = hypothesis
            .segments
            .iter()
            .filter(|seg| seg.onset <= mid && mid < seg.offset())
            .map(|seg| hyp_index[seg.speaker.as_str()])
            .collect();
        if ref_active.is_empty() && hyp_active.is_empty() {
            continue;
        }
        ref_time += duration * ref_active.len() as f64;
        for &r in &ref_active {
            ref_speaker_time[r] += duration;
            for &h in &hyp_active {
                overlap[(r, h)] += duration;
            }
        }
        for &h in &hyp_active {
            hyp_speaker_time[h] += duration;
        }
        parts.push(TimelinePart { duration, ref_active, hyp_active });
    }

    Ok(Timeline {
        parts,
        overlap,
        ref_speakers,
        hyp_speakers,
        ref_time,
        ref_speaker_time,
        hyp_speaker_time,
    })
}

/// Hungarian algorithm: returns, for each row of the square cost matrix,
/// the column of a minimum-total-cost perfect assignment.
pub fn min_cost_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(cost.ncols(), n, "cost matrix must be square");
    if n == 0 {
        return Vec::new();
    }
    // Potentials-based shortest augmenting path construction; row and
    // column 0 are sentinels.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut assigned_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        assigned_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let reduced = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if reduced < minv[j] {
                        minv[j] = reduced;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if assigned_row[j] > 0 {
            assignment[assigned_row[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Best reference-to-hypothesis speaker mapping: maximizes attributed
/// time. Returns `map[r] = Some(h)` for mapped reference speakers.
fn best_mapping(overlap: &DMatrix<f64>, n_ref: usize, n_hyp: usize) -> Vec<Option<usize>> {
    if n_ref == 0 || n_hyp == 0 {
        return vec![None; n_ref];
    }
    let n = n_ref.max(n_hyp);
    let cost = DMatrix::from_fn(n, n, |r, h| {
        if r < n_ref && h < n_hyp {
            -overlap[(r, h)]
        } else {
            0.0
        }
    });
    let assignment = min_cost_assignment(&cost);
    (0..n_ref)
        .map(|r| {
            let h = assignment[r];
            if h < n_hyp {
                Some(h)
            } else {
                None
            }
        })
        .collect()
}

/// Diarization error rate of a hypothesis against a reference, with a
/// no-score collar around reference boundaries. With
/// `score_overlaps = false`, stretches where the reference has two or
/// more simultaneous speakers are excluded entirely. Fails when no
/// reference speech survives scoring (the rate is undefined).
pub fn der(
    reference: &DiarizationHypothesis,
    hypothesis: &DiarizationHypothesis,
    collar: f64,
    score_overlaps: bool,
) -> Result<DerBreakdown> {
    let timeline = build_timeline(reference, hypothesis, collar, score_overlaps)?;
    if timeline.ref_time <= 0.0 {
        return Err(Error::DegenerateInput(format!(
            "no scored reference speech in {}: diarization error is undefined",
            reference.recording_id
        )));
    }
    let mapping = best_mapping(
        &timeline.overlap,
        timeline.ref_speakers.len(),
        timeline.hyp_speakers.len(),
    );
    let mut miss = 0.0;
    let mut false_alarm = 0.0;
    let mut confusion = 0.0;
    for part in &timeline.parts {
        let n_ref = part.ref_active.len() as f64;
        let n_hyp = part.hyp_active.len() as f64;
        let correct = part
            .ref_active
            .iter()
            .filter(|&&r| match mapping[r] {
                Some(h) => part.hyp_active.contains(&h),
                None => false,
            })
            .count() as f64;
        miss += part.duration * (n_ref - n_hyp).max(0.0);
        false_alarm += part.duration * (n_hyp - n_ref).max(0.0);
        confusion += part.duration * (n_ref.min(n_hyp) - correct);
    }
    let t = timeline.ref_time;
    Ok(DerBreakdown {
        der: (miss + false_alarm + confusion) / t,
        miss: miss / t,
        false_alarm: false_alarm / t,
        confusion: confusion / t,
        ref_speech_time: t,
    })
}

/// Jaccard error rate: one minus the Jaccard index between each reference
/// speaker's speech and their mapped hypothesis speaker's speech (the
/// mapping maximizes attributed time, no collar, overlap scored),
/// averaged over reference speakers. Unmapped reference speakers score 1.
pub fn jer(reference: &DiarizationHypothesis, hypothesis: &DiarizationHypothesis) -> Result<f64> {
    let timeline = build_timeline(reference, hypothesis, 0.0, true)?;
    if timeline.ref_speakers.is_empty() || timeline.ref_time <= 0.0 {
        return Err(Error::DegenerateInput(format!(
            "no reference speech in {}: Jaccard error is undefined",
            reference.recording_id
        )));
    }
    let mapping = best_mapping(
        &timeline.overlap,
        timeline.ref_speakers.len(),
        timeline.hyp_speakers.len(),
    );
    let mut total = 0.0;
    for (r, mapped) in mapping.iter().enumerate() {
        let error = match mapped {
            Some(h) => {
                let inter = timeline.overlap[(r, *h)];
                let union =
                    timeline.ref_speaker_time[r] + timeline.hyp_speaker_time[*h] - inter;
                if union > 0.0 {
                    1.0 - inter / union
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        total += error;
    }
    Ok(total / timeline.ref_speakers.len() as f64)
}

/// Scores every reference recording: hypotheses are matched by recording
/// id, and a reference without a hypothesis is scored against an empty
/// one (pure missed speech, Jaccard error 1). Hypothesis recordings
/// without a reference are ignored. Rows come back sorted by recording
/// id; aggregate DER is time-weighted while aggregate JER is the
/// unweighted mean over recordings.
pub fn score_corpus(
    references: &[DiarizationHypothesis],
    hypotheses: &[DiarizationHypothesis],
    collar: f64,
    score_overlaps: bool,
) -> Result<ScoreReport> {
    if references.is_empty() {
        return Err(Error::EmptyInput("no reference recordings to score".into()));
    }
    let by_id: BTreeMap<&str, &DiarizationHypothesis> = hypotheses
        .iter()
        .map(|h| (h.recording_id.as_str(), h))
        .collect();
    let mut refs_sorted: Vec<&DiarizationHypothesis> = references.iter().collect();
    refs_sorted.sort_by(|a, b| a.recording_id.cmp(&b.recording_id));

    let mut recordings = Vec::new();
    let mut err_time = [0.0f64; 3]; // miss, false alarm, confusion
    let mut total_time = 0.0;
    let mut jer_sum = 0.0;
    for reference in refs_sorted {
        let empty;
        let hypothesis = match by_id.get(reference.recording_id.as_str()) {
            Some(h) => *h,
            None => {
                empty = DiarizationHypothesis::new(reference.recording_id.clone(), Vec::new());
                &empty
            }
        };
        let breakdown = der(reference, hypothesis, collar, score_overlaps)?;
        let jer_value = jer(reference, hypothesis)?;
        err_time[0] += breakdown.miss * breakdown.ref_speech_time;
        err_time[1] += breakdown.false_alarm * breakdown.ref_speech_time;
        err_time[2] += breakdown.confusion * breakdown.ref_speech_time;
        total_time += breakdown.ref_speech_time;
        jer_sum += jer_value;
        recordings.push(RecordingScore {
            recording_id: reference.recording_id.clone(),
            der: breakdown,
            jer: jer_value,
        });
    }
    let total_der = DerBreakdown {
        der: (err_time[0] + err_time[1] + err_time[2]) / total_time,
        miss: err_time[0] / total_time,
        false_alarm: err_time[1] / total_time,
        confusion: err_time[2] / total_time,
        ref_speech_time: total_time,
    };
    Ok(ScoreReport {
        mean_jer: jer_sum / recordings.len() as f64,
        recordings,
        total_der,
        collar,
        score_overlaps,
    })
}

impl ScoreReport {
    /// CSV rendering: per-recording rows plus a TOTAL row. The aggregate
    /// DER is time-weighted; the aggregate JER is the unweighted mean of
    /// the per-recording values, as noted in the header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# collar={:.3} overlaps={}\n",
            self.collar,
            if self.score_overlaps { "scored" } else { "excluded" }
        ));
        out.push_str(
            "# TOTAL der is time-weighted; TOTAL jer is the unweighted mean over recordings\n",
        );
        out.push_str("recording_id,der,miss,fa,confusion,jer\n");
        for row in &self.recordings {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                row.recording_id,
                row.der.der,
                row.der.miss,
                row.der.false_alarm,
                row.der.confusion,
                row.jer
            ));
        }
        out.push_str(&format!(
            "TOTAL,{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            self.total_der.der,
            self.total_der.miss,
            self.total_der.false_alarm,
            self.total_der.confusion,
            self.mean_jer
        ));
        out
    }
}
