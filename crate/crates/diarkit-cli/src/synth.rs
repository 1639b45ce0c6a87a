//! The `synth` subcommand: a self-contained labeled corpus whose
//! recordings follow the same generative assumptions the pipeline models,
//! plus ready-to-use model files.
//!
//! Layout written under `--out`:
//! - `embeddings/<rec>.csv` — one embedding archive per recording
//! - `vad/<rec>.lab` — speech region covering each recording's span
//! - `ref.rttm` — reference diarization for every recording
//! - `plda.csv` — scoring model trained on conditioned embeddings with the
//!   true labels; feed this to `diarize --plda`
//! - `generator.csv` — the raw generative model the corpus was drawn from

use std::fs;

use diarkit::io::{labels_to_hypothesis, write_embeddings, write_rttm_multi, write_vad};
use diarkit::plda::{train_em, PldaModel};
use diarkit::synth::{recording_span, sample_recording};
use diarkit::transforms::{estimate_center_whiten, length_normalize_all};
use diarkit::{Error, Result};
use nalgebra::{DMatrix, DVector};

use crate::SynthArgs;

fn validate(args: &SynthArgs) -> Result<()> {
    if args.recordings == 0 || args.speakers == 0 || args.segments == 0 || args.dim == 0 {
        return Err(Error::Config(
            "recordings, speakers, segments and dim must all be positive".into(),
        ));
    }
    if args.speakers > args.segments {
        return Err(Error::Config(format!(
            "{} speakers cannot all appear in {} segments",
            args.speakers, args.segments
        )));
    }
    if !(args.p_loop > 0.0 && args.p_loop < 1.0) {
        return Err(Error::Config(format!(
            "p-loop {} outside (0, 1)",
            args.p_loop
        )));
    }
    if !(args.separation > 0.0 && args.separation.is_finite()) {
        return Err(Error::Config(format!(
            "separation {} must be positive",
            args.separation
        )));
    }
    Ok(())
}

pub fn run_synth(args: &SynthArgs) -> Result<()> {
    validate(args)?;
    let generator = PldaModel {
        mean: DVector::zeros(args.dim),
        across: DMatrix::identity(args.dim, args.dim) * args.separation,
        within: DMatrix::identity(args.dim, args.dim),
    };

    let emb_dir = args.out.join("embeddings");
    let vad_dir = args.out.join("vad");
    fs::create_dir_all(&emb_dir).map_err(|e| Error::io(&emb_dir, e))?;
    fs::create_dir_all(&vad_dir).map_err(|e| Error::io(&vad_dir, e))?;

    let mut corpus = Vec::with_capacity(args.recordings);
    let mut references = Vec::with_capacity(args.recordings);
    for r in 0..args.recordings {
        let (mut rec, truth) = sample_recording(
            &generator,
            args.speakers,
            args.segments,
            args.p_loop,
            args.seed.wrapping_add(r as u64),
        );
        rec.recording_id = format!("rec{r}");
        write_embeddings(&rec, &emb_dir.join(format!("rec{r}.csv")))?;
        write_vad(
            &[recording_span(&rec)],
            &vad_dir.join(format!("rec{r}.lab")),
        )?;
        references.push(labels_to_hypothesis(&rec, truth.labels()));
        corpus.push((rec, truth));
    }
    write_rttm_multi(&references, &args.out.join("ref.rttm"))?;

    // Scoring model in the space the pipeline scores in: pooled
    // centering/whitening plus length normalization, then supervised
    // training on the true speakers.
    let mut pooled = Vec::new();
    for (rec, _) in &corpus {
        pooled.extend(rec.vectors());
    }
    let whiten = estimate_center_whiten(&pooled)?;
    let mut classes: Vec<Vec<DVector<f64>>> = Vec::new();
    for (rec, truth) in &corpus {
        let conditioned = length_normalize_all(&whiten.apply_all(&rec.vectors()))?;
        let base = classes.len();
        classes.resize(base + args.speakers, Vec::new());
        for (v, &label) in conditioned.iter().zip(truth.labels()) {
            classes[base + label].push(v.clone());
        }
    }
    classes.retain(|c| !c.is_empty());
    let scoring = train_em(&classes, 10)?;
    scoring.save(&args.out.join("plda.csv"))?;
    generator.save(&args.out.join("generator.csv"))?;

    println!(
        "wrote {} recording(s), ref.rttm, plda.csv and generator.csv to {}",
        args.recordings,
        args.out.display()
    );
    Ok(())
}
