//! The `diarize` and `score` subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use diarkit::framevb::EigenvoiceModel;
use diarkit::io::{
    read_embeddings, read_rttm_multi, read_vad, write_rttm, write_rttm_multi, RecordingEmbeddings,
};
use diarkit::metrics::score_corpus;
use diarkit::overlap::LogRegModel;
use diarkit::pipeline::{
    diarize_recording, estimate_pooled_whitening, ModelSet, PipelineConfig, Preset,
    RecordingDiagnostics, RecordingInput, WhitenScope,
};
use diarkit::plda::PldaModel;
use diarkit::{Error, Result};

use crate::{DiarizeArgs, ScoreArgs};

/// Expands one glob pattern into a sorted file list; matching nothing is
/// an error because it always signals a mistyped path.
fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>> {
    let entries = glob::glob(pattern)
        .map_err(|e| Error::Config(format!("bad glob pattern '{pattern}': {e}")))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path =
            entry.map_err(|e| Error::Format(format!("unreadable path under '{pattern}': {e}")))?;
        if path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyInput(format!("no files match '{pattern}'")));
    }
    Ok(paths)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Applies a flat `key = value` config file; `#` starts a comment.
fn apply_config_file(config: &mut PipelineConfig, path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(path, idx + 1, format!("expected 'key = value', got '{line}'"))
        })?;
        config.set(key.trim(), value.trim())?;
    }
    Ok(())
}

fn build_config(args: &DiarizeArgs) -> Result<PipelineConfig> {
    let mut config = Preset::parse(&args.preset)?.config();
    if let Some(path) = &args.config {
        apply_config_file(&mut config, path)?;
    }
    for entry in &args.overrides {
        let (key, value) = entry.split_once('=').ok_or_else(|| {
            Error::Config(format!("--set expects key=value, got '{entry}'"))
        })?;
        config.set(key.trim(), value.trim())?;
    }
    config.validate()?;
    Ok(config)
}

fn load_models(args: &DiarizeArgs, config: &PipelineConfig) -> Result<ModelSet> {
    // Surface stage/model contradictions before touching any data.
    if config.frame_vb.is_some() {
        if args.eigenvoice.is_none() {
            return Err(Error::Config(
                "frame refinement is enabled but no --eigenvoice model was given".into(),
            ));
        }
        if args.frames.is_none() {
            return Err(Error::Config(
                "frame refinement is enabled but no --frames glob was given".into(),
            ));
        }
    }
    if config.overlap_threshold.is_some() && args.overlap_model.is_none() {
        return Err(Error::Config(
            "overlap handling is enabled but no --overlap-model was given".into(),
        ));
    }
    let mut models = ModelSet::new(PldaModel::load(&args.plda)?);
    if let Some(path) = &args.plda2 {
        models.second_plda = Some(PldaModel::load(path)?);
    }
    if let Some(path) = &args.eigenvoice {
        models.eigenvoice = Some(EigenvoiceModel::load(path)?);
    }
    if let Some(path) = &args.overlap_model {
        models.overlap_model = Some(LogRegModel::load(path)?);
    }
    Ok(models)
}

/// Loads every channel, VAD and frame file into per-recording inputs.
/// The first channel glob defines the recording set.
fn load_inputs(args: &DiarizeArgs, config: &PipelineConfig) -> Result<Vec<RecordingInput>> {
    let primary = expand_glob(&args.embeddings[0])?;
    let mut recordings: Vec<RecordingEmbeddings> = Vec::with_capacity(primary.len());
    for path in &primary {
        recordings.push(read_embeddings(path)?);
    }
    for pair in recordings.windows(2) {
        if pair[0].recording_id == pair[1].recording_id {
            return Err(Error::Format(format!(
                "two embedding files share the recording id '{}'",
                pair[0].recording_id
            )));
        }
    }

    let mut extra_channels: Vec<BTreeMap<String, PathBuf>> = Vec::new();
    for pattern in &args.embeddings[1..] {
        let mut by_stem = BTreeMap::new();
        for path in expand_glob(pattern)? {
            by_stem.insert(file_stem(&path), path);
        }
        extra_channels.push(by_stem);
    }

    let frame_files: Option<BTreeMap<String, PathBuf>> = match &args.frames {
        Some(pattern) => {
            let mut by_stem = BTreeMap::new();
            for path in expand_glob(pattern)? {
                by_stem.insert(file_stem(&path), path);
            }
            Some(by_stem)
        }
        None => None,
    };

    let mut inputs = Vec::with_capacity(recordings.len());
    for rec in recordings {
        let id = rec.recording_id.clone();
        let mut channels = vec![rec];
        for (idx, by_stem) in extra_channels.iter().enumerate() {
            let path = by_stem.get(&id).ok_or_else(|| {
                Error::Format(format!(
                    "channel {} glob has no file for recording '{id}'",
                    idx + 2
                ))
            })?;
            channels.push(read_embeddings(path)?);
        }

        let vad_path = args.vad.join(format!("{id}.lab"));
        let speech = read_vad(&vad_path)?;

        let frames = match &frame_files {
            Some(by_stem) => match by_stem.get(&id) {
                Some(path) => Some(read_embeddings(path)?),
                None if config.frame_vb.is_some() => {
                    return Err(Error::Config(format!(
                        "frame refinement is enabled but the frames glob has no file for \
                         recording '{id}'"
                    )));
                }
                None => None,
            },
            None => None,
        };

        inputs.push(RecordingInput {
            channels,
            speech,
            frames,
        });
    }
    Ok(inputs)
}

fn report_csv(config: &PipelineConfig, rows: &[RecordingDiagnostics]) -> String {
    let mut out = String::new();
    for (key, value) in config.describe() {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    out.push_str(
        "recording_id,threshold,initial_clusters,vb_speakers,vb_iterations,\
         overlap_segments_added,overlap_warnings\n",
    );
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
    for d in rows {
        out.push_str(&format!(
            "{},{:.6},{},{},{},{},{}\n",
            d.recording_id,
            d.threshold,
            d.initial_clusters,
            opt(d.vb_speakers),
            opt(d.vb_iterations),
            d.overlap_segments_added,
            d.overlap_warnings
        ));
    }
    out
}

pub fn run_diarize(args: &DiarizeArgs) -> Result<()> {
    let config = build_config(args)?;
    let models = load_models(args, &config)?;
    let inputs = load_inputs(args, &config)?;

    let pooled = match config.whiten_scope {
        WhitenScope::Pooled => Some(estimate_pooled_whitening(&inputs)?),
        WhitenScope::PerRecording => None,
    };

    let jobs = args
        .jobs
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build a {jobs}-thread worker pool: {e}")))?;

    // Parallel over recordings; collect preserves input order, so output
    // is deterministic regardless of scheduling.
    let results = pool.install(|| {
        use rayon::prelude::*;
        inputs
            .par_iter()
            .map(|input| diarize_recording(input, &models, &config, pooled.as_ref()))
            .collect::<Result<Vec<_>>>()
    })?;

    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut hypotheses = Vec::with_capacity(results.len());
    let mut diagnostics = Vec::with_capacity(results.len());
    for (hyp, diag) in results {
        write_rttm(&hyp, &args.out.join(format!("{}.rttm", diag.recording_id)))?;
        hypotheses.push(hyp);
        diagnostics.push(diag);
    }
    write_rttm_multi(&hypotheses, &args.out.join("all.rttm"))?;

    let report_path = args.out.join("report.csv");
    fs::write(&report_path, report_csv(&config, &diagnostics))
        .map_err(|e| Error::io(&report_path, e))?;

    println!(
        "diarized {} recording(s) into {}",
        hypotheses.len(),
        args.out.display()
    );
    Ok(())
}

pub fn run_score(args: &ScoreArgs) -> Result<()> {
    let references = read_rttm_multi(&args.reference)?;
    let hypotheses = read_rttm_multi(&args.hyp)?;
    let report = score_corpus(
        &references,
        &hypotheses,
        args.collar,
        !args.ignore_overlaps,
    )?;
    print!("{}", report.to_csv());
    Ok(())
}
