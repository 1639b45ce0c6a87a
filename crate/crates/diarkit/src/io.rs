//! On-disk corpus artifacts: embedding CSV archives, VAD label files and
//! RTTM hypothesis/reference files, plus the uniform sub-segmentation grid
//! that ties embeddings to the time axis.
//!
//! Formats:
//! - embedding CSV: `onset,duration,v0,v1,...` one sub-segment per line, no header
//! - VAD LAB: `onset offset speech`, whitespace separated, seconds
//! - RTTM: `SPEAKER <rec> 1 <onset:%.3f> <dur:%.3f> <NA> <NA> <speaker> <NA> <NA>`

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One embedded speech sub-segment: where it sits on the time axis and the
/// fixed-dimensional vector extracted from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentEmbedding {
    pub onset: f64,
    pub duration: f64,
    pub vector: DVector<f64>,
}

/// The time-ordered embedding sequence of one recording (or one channel of
/// a multi-channel recording).
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingEmbeddings {
    pub recording_id: String,
    pub dim: usize,
    pub segments: Vec<SegmentEmbedding>,
}

impl RecordingEmbeddings {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Row-per-segment observation matrix (T x D).
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.segments.len(), self.dim, |t, d| {
            self.segments[t].vector[d]
        })
    }

    pub fn vectors(&self) -> Vec<DVector<f64>> {
        self.segments.iter().map(|s| s.vector.clone()).collect()
    }
}

/// A contiguous speech region from a VAD label file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeechRegion {
    pub onset: f64,
    pub offset: f64,
}

impl SpeechRegion {
    pub fn duration(&self) -> f64 {
        self.offset - self.onset
    }
}

/// One speaker-labeled span of a diarization hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSegment {
    pub onset: f64,
    pub duration: f64,
    pub speaker: String,
}

impl LabeledSegment {
    pub fn new(onset: f64, duration: f64, speaker: impl Into<String>) -> Self {
        LabeledSegment {
            onset,
            duration,
            speaker: speaker.into(),
        }
    }

    pub fn offset(&self) -> f64 {
        self.onset + self.duration
    }
}

/// Speaker-labeled time segments for one recording. Segments of different
/// speakers may overlap (overlap post-processing emits such labels);
/// segments of the same speaker never do.
#[derive(Debug, Clone, PartialEq)]
pub struct DiarizationHypothesis {
    pub recording_id: String,
    pub segments: Vec<LabeledSegment>,
}

impl DiarizationHypothesis {
    pub fn new(recording_id: impl Into<String>, segments: Vec<LabeledSegment>) -> Self {
        let mut hyp = DiarizationHypothesis {
            recording_id: recording_id.into(),
            segments,
        };
        hyp.sort_segments();
        hyp
    }

    pub fn sort_segments(&mut self) {
        self.segments.sort_by(|a, b| {
            a.onset
                .partial_cmp(&b.onset)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.speaker.cmp(&b.speaker))
        });
    }

    /// Distinct speaker labels in first-appearance order.
    pub fn speakers(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for s in &self.segments {
            if !seen.contains(&s.speaker) {
                seen.push(s.speaker.clone());
            }
        }
        seen
    }

    /// Checks per-speaker non-overlap and positive durations.
    pub fn validate(&self) -> Result<()> {
        let mut by_speaker: BTreeMap<&str, Vec<&LabeledSegment>> = BTreeMap::new();
        for seg in &self.segments {
            if seg.duration <= 0.0 || !seg.duration.is_finite() || !seg.onset.is_finite() {
                return Err(Error::Format(format!(
                    "segment of {} at {} has non-positive or non-finite extent",
                    seg.speaker, seg.onset
                )));
            }
            by_speaker.entry(&seg.speaker).or_default().push(seg);
        }
        for (speaker, mut segs) in by_speaker {
            segs.sort_by(|a, b| a.onset.partial_cmp(&b.onset).unwrap());
            for pair in segs.windows(2) {
                if pair[1].onset < pair[0].offset() - 1e-9 {
                    return Err(Error::Format(format!(
                        "segments of speaker {speaker} overlap at {:.3}",
                        pair[1].onset
                    )));
                }
            }
        }
        Ok(())
    }
}

fn parse_float(path: &Path, line: usize, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("non-numeric {what}: '{field}'")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, format!("non-finite {what}: '{field}'")));
    }
    Ok(v)
}

/// Reads an embedding CSV archive. The recording id is the file stem.
pub fn read_embeddings(path: &Path) -> Result<RecordingEmbeddings> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let recording_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unknown".to_string());

    let mut segments = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() < 3 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected onset,duration,v0,... got {} fields", fields.len()),
            ));
        }
        let onset = parse_float(path, lineno, fields[0], "onset")?;
        let duration = parse_float(path, lineno, fields[1], "duration")?;
        if onset < 0.0 {
            return Err(Error::parse(path, lineno, "negative onset"));
        }
        if duration <= 0.0 {
            return Err(Error::parse(path, lineno, "non-positive duration"));
        }
        let mut values = Vec::with_capacity(fields.len() - 2);
        for f in &fields[2..] {
            values.push(parse_float(path, lineno, f, "embedding value")?);
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::Format(format!(
                    "{}:{lineno}: dimension {} differs from {} seen earlier",
                    path.display(),
                    values.len(),
                    d
                )));
            }
            _ => {}
        }
        segments.push(SegmentEmbedding {
            onset,
            duration,
            vector: DVector::from_vec(values),
        });
    }
    let dim = dim.ok_or_else(|| {
        Error::EmptyInput(format!("embedding file {} has no segments", path.display()))
    })?;
    segments.sort_by(|a, b| {
        a.onset
            .partial_cmp(&b.onset)
            .unwrap()
            .then(a.duration.partial_cmp(&b.duration).unwrap())
    });
    Ok(RecordingEmbeddings {
        recording_id,
        dim,
        segments,
    })
}

/// Writes an embedding archive in the same CSV layout `read_embeddings` expects.
pub fn write_embeddings(rec: &RecordingEmbeddings, path: &Path) -> Result<()> {
    let mut out = String::new();
    for seg in &rec.segments {
        out.push_str(&format!("{},{}", seg.onset, seg.duration));
        for v in seg.vector.iter() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a VAD label file and returns merged, sorted speech regions.
/// Overlapping or adjacent regions (gap below 1e-6 s) are merged.
pub fn read_vad(path: &Path) -> Result<Vec<SpeechRegion>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut regions = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 'onset offset speech', got {} fields", fields.len()),
            ));
        }
        let onset = parse_float(path, lineno, fields[0], "onset")?;
        let offset = parse_float(path, lineno, fields[1], "offset")?;
        if fields[2] != "speech" {
            return Err(Error::Format(format!(
                "{}:{lineno}: unknown label '{}' (expected 'speech')",
                path.display(),
                fields[2]
            )));
        }
        if offset <= onset {
            return Err(Error::Format(format!(
                "{}:{lineno}: offset {offset} not after onset {onset}",
                path.display()
            )));
        }
        regions.push(SpeechRegion { onset, offset });
    }
    Ok(merge_regions(regions))
}

/// Serializes speech regions in the LAB layout `read_vad` expects.
pub fn write_vad(regions: &[SpeechRegion], path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in regions {
        out.push_str(&format!("{} {} speech\n", r.onset, r.offset));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Sorts regions and merges any that overlap or sit closer than 1e-6 s.
pub fn merge_regions(mut regions: Vec<SpeechRegion>) -> Vec<SpeechRegion> {
    regions.sort_by(|a, b| a.onset.partial_cmp(&b.onset).unwrap());
    let mut merged: Vec<SpeechRegion> = Vec::with_capacity(regions.len());
    for r in regions {
        match merged.last_mut() {
            Some(last) if r.onset <= last.offset + 1e-6 => {
                last.offset = last.offset.max(r.offset);
            }
            _ => merged.push(r),
        }
    }
    merged
}

/// Lays a sliding window grid over each speech region.
///
/// A region no longer than `window` yields a single sub-segment covering it.
/// Longer regions yield windows at `onset + k*shift` while they fit; if the
/// uncovered tail is at least `shift/2`, one trailing short sub-segment is
/// emitted from the next grid position to the region offset.
pub fn uniform_subsegmentation(
    regions: &[SpeechRegion],
    window: f64,
    shift: f64,
) -> Vec<(f64, f64)> {
    assert!(window > 0.0 && shift > 0.0);
    let mut out = Vec::new();
    for r in regions {
        let len = r.duration();
        if len <= window {
            out.push((r.onset, len));
            continue;
        }
        let mut k: usize = 0;
        let mut covered_to = r.onset;
        loop {
            let s = r.onset + k as f64 * shift;
            if s + window > r.offset + 1e-9 {
                break;
            }
            out.push((s, window));
            covered_to = s + window;
            k += 1;
        }
        let remainder = r.offset - covered_to;
        if remainder >= shift / 2.0 - 1e-9 {
            let s = r.onset + k as f64 * shift;
            let start = if s < r.offset { s } else { covered_to };
            out.push((start, r.offset - start));
        }
    }
    out
}

fn format_rttm_line(recording_id: &str, seg: &LabeledSegment) -> String {
    format!(
        "SPEAKER {} 1 {:.3} {:.3} <NA> <NA> {} <NA> <NA>",
        recording_id, seg.onset, seg.duration, seg.speaker
    )
}

/// Writes one hypothesis as RTTM, lines sorted by onset then speaker label.
pub fn write_rttm(hyp: &DiarizationHypothesis, path: &Path) -> Result<()> {
    hyp.validate()?;
    let mut sorted = hyp.clone();
    sorted.sort_segments();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for seg in &sorted.segments {
        writeln!(file, "{}", format_rttm_line(&sorted.recording_id, seg))
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Writes hypotheses for several recordings into a single RTTM file.
pub fn write_rttm_multi(hyps: &[DiarizationHypothesis], path: &Path) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for hyp in hyps {
        hyp.validate()?;
        let mut sorted = hyp.clone();
        sorted.sort_segments();
        for seg in &sorted.segments {
            writeln!(file, "{}", format_rttm_line(&sorted.recording_id, seg))
                .map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(())
}

fn parse_rttm_lines(path: &Path) -> Result<BTreeMap<String, Vec<LabeledSegment>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut by_rec: BTreeMap<String, Vec<LabeledSegment>> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != 10 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 10 RTTM fields, got {}", fields.len()),
            ));
        }
        if fields[0] != "SPEAKER" {
            return Err(Error::parse(
                path,
                lineno,
                format!("unsupported RTTM record type '{}'", fields[0]),
            ));
        }
        let onset = parse_float(path, lineno, fields[3], "onset")?;
        let duration = parse_float(path, lineno, fields[4], "duration")?;
        if duration <= 0.0 {
            return Err(Error::Format(format!(
                "{}:{lineno}: non-positive duration {duration}",
                path.display()
            )));
        }
        by_rec
            .entry(fields[1].to_string())
            .or_default()
            .push(LabeledSegment::new(onset, duration, fields[7]));
    }
    Ok(by_rec)
}

/// Reads an RTTM file that must contain exactly one recording.
pub fn read_rttm(path: &Path) -> Result<DiarizationHypothesis> {
    let by_rec = parse_rttm_lines(path)?;
    match by_rec.len() {
        0 => Err(Error::EmptyInput(format!(
            "RTTM file {} has no segments",
            path.display()
        ))),
        1 => {
            let (rec, segs) = by_rec.into_iter().next().unwrap();
            Ok(DiarizationHypothesis::new(rec, segs))
        }
        n => Err(Error::Format(format!(
            "RTTM file {} holds {n} recordings where one was expected",
            path.display()
        ))),
    }
}

/// Reads an RTTM file with any number of recordings, sorted by recording id.
pub fn read_rttm_multi(path: &Path) -> Result<Vec<DiarizationHypothesis>> {
    let by_rec = parse_rttm_lines(path)?;
    Ok(by_rec
        .into_iter()
        .map(|(rec, segs)| DiarizationHypothesis::new(rec, segs))
        .collect())
}

/// Converts per-embedding cluster labels back into speaker time spans.
///
/// Each embedding owns the span from its onset to the next embedding's onset
/// when the windows are contiguous, otherwise to its own offset; runs of
/// identical labels merge into one segment. Speaker names are `spk<label>`.
pub fn labels_to_hypothesis(rec: &RecordingEmbeddings, labels: &[usize]) -> DiarizationHypothesis {
    assert_eq!(rec.segments.len(), labels.len());
    let mut segments: Vec<LabeledSegment> = Vec::new();
    let mut current: Option<(f64, f64, usize)> = None; // onset, end, label
    for (i, (seg, &label)) in rec.segments.iter().zip(labels).enumerate() {
        let own_end = match rec.segments.get(i + 1) {
            Some(next) if next.onset <= seg.onset + seg.duration + 1e-9 => next.onset,
            _ => seg.onset + seg.duration,
        };
        if own_end <= seg.onset {
            continue;
        }
        match current.as_mut() {
            Some((_, end, lab)) if *lab == label && seg.onset <= *end + 1e-9 => {
                *end = own_end.max(*end);
            }
            _ => {
                if let Some((s, e, lab)) = current.take() {
                    segments.push(LabeledSegment::new(s, e - s, format!("spk{lab}")));
                }
                current = Some((seg.onset, own_end, label));
            }
        }
    }
    if let Some((s, e, lab)) = current {
        segments.push(LabeledSegment::new(s, e - s, format!("spk{lab}")));
    }
    DiarizationHypothesis::new(rec.recording_id.clone(), segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn tmpfile(name: &str, content: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("diarkit-io-tests");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("{}-{name}", std::process::id()));
        fs::write(&path, content).unwrap();
        path
    }

    #[test]
    fn read_embeddings_two_rows() {
        let path = tmpfile("emb2.csv", "0.0,1.5,1.0,0.0\n0.25,1.5,0.0,1.0\n");
        let rec = read_embeddings(&path).unwrap();
        assert_eq!(rec.len(), 2);
        assert_eq!(rec.dim, 2);
        assert_eq!(rec.segments[0].vector[0], 1.0);
        assert_eq!(rec.segments[1].onset, 0.25);
    }

    #[test]
    fn read_embeddings_one_dim() {
        let path = tmpfile("emb1.csv", "0.0,1.5,0.5\n");
        let rec = read_embeddings(&path).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.dim, 1);
    }

    #[test]
    fn read_embeddings_dimension_mismatch() {
        let path = tmpfile("embdim.csv", "0.0,1.5,1.0,2.0\n0.25,1.5,1.0,2.0,3.0\n");
        match read_embeddings(&path) {
            Err(Error::Format(_)) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn read_embeddings_empty_file() {
        let path = tmpfile("embempty.csv", "");
        assert!(matches!(read_embeddings(&path), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn read_embeddings_bad_line_reports_line_number() {
        let path = tmpfile("embbad.csv", "0.0,1.5,1.0\n0.25,oops,1.0\n");
        match read_embeddings(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn read_vad_single_region() {
        let path = tmpfile("vad1.lab", "0.00 5.00 speech\n");
        let regions = read_vad(&path).unwrap();
        assert_eq!(regions, vec![SpeechRegion { onset: 0.0, offset: 5.0 }]);
    }

    #[test]
    fn read_vad_merges_adjacent() {
        let path = tmpfile("vad2.lab", "0.0 2.0 speech\n2.0 4.0 speech\n");
        let regions = read_vad(&path).unwrap();
        assert_eq!(regions, vec![SpeechRegion { onset: 0.0, offset: 4.0 }]);
    }

    #[test]
    fn read_vad_rejects_inverted_region() {
        let path = tmpfile("vad3.lab", "3.0 1.0 speech\n");
        assert!(matches!(read_vad(&path), Err(Error::Format(_))));
    }

    #[test]
    fn read_vad_rejects_unknown_label() {
        let path = tmpfile("vad4.lab", "0.0 1.0 music\n");
        assert!(matches!(read_vad(&path), Err(Error::Format(_))));
    }

    #[test]
    fn vad_merge_is_idempotent() {
        let path = tmpfile("vad5.lab", "0.0 2.0 speech\n1.5 4.0 speech\n6.0 7.0 speech\n");
        let first = read_vad(&path).unwrap();
        let path2 = tmpfile("vad5b.lab", "");
        write_vad(&first, &path2).unwrap();
        let second = read_vad(&path2).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn subsegmentation_matches_enumeration() {
        // Oracle: every k with k*shift + window <= region length.
        let regions = [SpeechRegion { onset: 0.0, offset: 3.0 }];
        let got = uniform_subsegmentation(&regions, 1.5, 0.25);
        let mut expect = Vec::new();
        let mut k = 0u32;
        while f64::from(k) * 0.25 + 1.5 <= 3.0 + 1e-12 {
            expect.push((f64::from(k) * 0.25, 1.5));
            k += 1;
        }
        assert_eq!(expect.len(), 7);
        assert_eq!(got.len(), expect.len());
        for (g, e) in got.iter().zip(&expect) {
            assert!((g.0 - e.0).abs() < 1e-9 && (g.1 - e.1).abs() < 1e-9);
        }
    }

    #[test]
    fn subsegmentation_short_region() {
        let regions = [SpeechRegion { onset: 0.0, offset: 1.0 }];
        assert_eq!(uniform_subsegmentation(&regions, 1.5, 0.25), vec![(0.0, 1.0)]);
    }

    #[test]
    fn subsegmentation_empty() {
        assert!(uniform_subsegmentation(&[], 1.5, 0.25).is_empty());
    }

    #[test]
    fn subsegmentation_trailing_remainder() {
        // Region 3.2 s: windows end at 3.0, remainder 0.2 >= shift/2 so one
        // short trailing sub-segment starts at the next grid point 1.75.
        let regions = [SpeechRegion { onset: 0.0, offset: 3.2 }];
        let got = uniform_subsegmentation(&regions, 1.5, 0.25);
        let last = got.last().unwrap();
        assert!((last.0 - 1.75).abs() < 1e-9);
        assert!((last.0 + last.1 - 3.2).abs() < 1e-9);
        // Region 3.1 s: remainder 0.1 < shift/2, no trailing sub-segment.
        let regions = [SpeechRegion { onset: 0.0, offset: 3.1 }];
        let got = uniform_subsegmentation(&regions, 1.5, 0.25);
        let last = got.last().unwrap();
        assert!((last.0 - 1.5).abs() < 1e-9 && (last.1 - 1.5).abs() < 1e-9);
    }

    #[test]
    fn rttm_line_format_is_exact() {
        let hyp = DiarizationHypothesis::new("r1", vec![LabeledSegment::new(0.0, 2.5, "spk0")]);
        let path = tmpfile("hyp.rttm", "");
        write_rttm(&hyp, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "SPEAKER r1 1 0.000 2.500 <NA> <NA> spk0 <NA> <NA>\n");
    }

    #[test]
    fn rttm_empty_hypothesis_writes_empty_file() {
        let hyp = DiarizationHypothesis::new("r1", vec![]);
        let path = tmpfile("hypempty.rttm", "");
        write_rttm(&hyp, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "");
    }

    #[test]
    fn rttm_keeps_overlapping_speakers() {
        let hyp = DiarizationHypothesis::new(
            "r1",
            vec![
                LabeledSegment::new(0.0, 2.0, "a"),
                LabeledSegment::new(1.0, 2.0, "b"),
            ],
        );
        let path = tmpfile("hypov.rttm", "");
        write_rttm(&hyp, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn rttm_round_trip() {
        let hyp = DiarizationHypothesis::new(
            "rec7",
            vec![
                LabeledSegment::new(0.125, 2.25, "spk0"),
                LabeledSegment::new(2.375, 1.0, "spk1"),
                LabeledSegment::new(3.0, 0.5, "spk0"),
            ],
        );
        let path = tmpfile("hyprt.rttm", "");
        write_rttm(&hyp, &path).unwrap();
        let back = read_rttm(&path).unwrap();
        assert_eq!(back.recording_id, "rec7");
        assert_eq!(back.segments.len(), 3);
        for (a, b) in back.segments.iter().zip(&hyp.segments) {
            assert!((a.onset - b.onset).abs() <= 0.001);
            assert!((a.duration - b.duration).abs() <= 0.001);
            assert_eq!(a.speaker, b.speaker);
        }
    }

    #[test]
    fn rttm_rejects_nine_fields() {
        let path = tmpfile("hypbad.rttm", "SPEAKER r1 1 0.000 2.500 <NA> <NA> spk0 <NA>\n");
        assert!(matches!(read_rttm(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn rttm_resorts_out_of_order_lines() {
        let path = tmpfile(
            "hypooo.rttm",
            "SPEAKER r1 1 5.000 1.000 <NA> <NA> b <NA> <NA>\n\
             SPEAKER r1 1 0.000 1.000 <NA> <NA> a <NA> <NA>\n",
        );
        let hyp = read_rttm(&path).unwrap();
        assert_eq!(hyp.segments[0].speaker, "a");
        assert_eq!(hyp.segments[1].speaker, "b");
    }

    #[test]
    fn labels_to_hypothesis_merges_runs() {
        let segs = vec![
            SegmentEmbedding { onset: 0.0, duration: 1.5, vector: DVector::zeros(1) },
            SegmentEmbedding { onset: 0.25, duration: 1.5, vector: DVector::zeros(1) },
            SegmentEmbedding { onset: 0.5, duration: 1.5, vector: DVector::zeros(1) },
            // Gap, new region.
            SegmentEmbedding { onset: 10.0, duration: 1.5, vector: DVector::zeros(1) },
        ];
        let rec = RecordingEmbeddings { recording_id: "r".into(), dim: 1, segments: segs };
        let hyp = labels_to_hypothesis(&rec, &[0, 0, 1, 1]);
        assert_eq!(hyp.segments.len(), 3);
        assert_eq!(hyp.segments[0].speaker, "spk0");
        assert!((hyp.segments[0].onset - 0.0).abs() < 1e-9);
        assert!((hyp.segments[0].duration - 0.5).abs() < 1e-9);
        assert_eq!(hyp.segments[1].speaker, "spk1");
        assert!((hyp.segments[1].offset() - 2.0).abs() < 1e-9);
        assert!((hyp.segments[2].onset - 10.0).abs() < 1e-9);
        hyp.validate().unwrap();
    }
}
