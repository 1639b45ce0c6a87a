//! End-to-end checks of the binary: synth → diarize → score round trip,
//! deterministic re-runs, config plumbing and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn diarkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diarkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn synth_diarize_score_round_trip_is_perfect_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let corpus_s = corpus.to_str().unwrap();

    assert_success(&diarkit(&[
        "synth",
        "--out",
        corpus_s,
        "--recordings",
        "3",
        "--speakers",
        "3",
        "--segments",
        "80",
        "--dim",
        "10",
        "--separation",
        "100",
        "--seed",
        "11",
    ]));
    assert!(corpus.join("ref.rttm").is_file());
    assert!(corpus.join("plda.csv").is_file());
    assert!(corpus.join("generator.csv").is_file());

    let emb_glob = corpus.join("embeddings").join("*.csv");
    let vad_dir = corpus.join("vad");
    let run = |out_dir: &Path| {
        assert_success(&diarkit(&[
            "diarize",
            "--preset",
            "system4",
            "--embeddings",
            emb_glob.to_str().unwrap(),
            "--vad",
            vad_dir.to_str().unwrap(),
            "--plda",
            corpus.join("plda.csv").to_str().unwrap(),
            "--set",
            "pca_variance=0.9",
            // Clustering scores sit well between the same-speaker and
            // different-speaker populations of this corpus.
            "--set",
            "fixed_threshold=-5",
            "--jobs",
            "2",
            "--out",
            out_dir.to_str().unwrap(),
        ]));
    };
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    run(&out1);
    run(&out2);

    for rec in ["rec0", "rec1", "rec2"] {
        assert!(out1.join(format!("{rec}.rttm")).is_file());
    }
    // Bit-identical output across identical runs.
    assert_eq!(read(&out1.join("all.rttm")), read(&out2.join("all.rttm")));
    assert_eq!(
        read(&out1.join("report.csv")),
        read(&out2.join("report.csv"))
    );

    // The report spells out the effective configuration, overrides included.
    let report = read(&out1.join("report.csv"));
    assert!(report.contains("# pca_variance = 0.9"), "{report}");
    assert!(report.contains("# fixed_threshold = -5"), "{report}");
    assert!(report.contains("# whiten_scope = pooled"), "{report}");
    assert!(report.lines().any(|l| l.starts_with("rec0,")), "{report}");

    // Perfect clustering on this clean corpus: DER and JER both zero.
    let score = diarkit(&[
        "score",
        "--ref",
        corpus.join("ref.rttm").to_str().unwrap(),
        "--hyp",
        out1.join("all.rttm").to_str().unwrap(),
    ]);
    assert_success(&score);
    let stdout = String::from_utf8_lossy(&score.stdout).into_owned();
    let total = stdout
        .lines()
        .find(|l| l.starts_with("TOTAL,"))
        .unwrap_or_else(|| panic!("no TOTAL row in:\n{stdout}"));
    assert_eq!(total, "TOTAL,0.000000,0.000000,0.000000,0.000000,0.000000");
}

#[test]
fn config_file_applies_before_set_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    assert_success(&diarkit(&[
        "synth",
        "--out",
        corpus.to_str().unwrap(),
        "--recordings",
        "1",
        "--speakers",
        "2",
        "--segments",
        "40",
        "--dim",
        "6",
        "--seed",
        "3",
    ]));
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# comment line\nfixed_threshold = 0.5\npca_variance = 0.6 # trailing comment\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    assert_success(&diarkit(&[
        "diarize",
        "--preset",
        "system4",
        "--embeddings",
        corpus.join("embeddings").join("*.csv").to_str().unwrap(),
        "--vad",
        corpus.join("vad").to_str().unwrap(),
        "--plda",
        corpus.join("plda.csv").to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "pca_variance=0.8",
        "--out",
        out.to_str().unwrap(),
    ]));
    let report = read(&out.join("report.csv"));
    assert!(report.contains("# fixed_threshold = 0.5"), "{report}");
    // --set wins over the config file.
    assert!(report.contains("# pca_variance = 0.8"), "{report}");
}

#[test]
fn exit_codes_distinguish_config_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");

    // Unknown preset: configuration error.
    let out = diarkit(&[
        "diarize",
        "--preset",
        "system99",
        "--embeddings",
        "x*.csv",
        "--vad",
        "v",
        "--plda",
        "p.csv",
        "--out",
        "o",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // Unreadable reference: data error.
    let out = diarkit(&[
        "score",
        "--ref",
        missing.to_str().unwrap(),
        "--hyp",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Bad usage: configuration error.
    let out = diarkit(&["diarize"]);
    assert_eq!(out.status.code(), Some(1));

    // Negative collar: configuration error from the scorer.
    let rttm = dir.path().join("a.rttm");
    std::fs::write(&rttm, "SPEAKER r 1 0.000 1.000 <NA> <NA> s <NA> <NA>\n").unwrap();
    let out = diarkit(&[
        "score",
        "--ref",
        rttm.to_str().unwrap(),
        "--hyp",
        rttm.to_str().unwrap(),
        "--collar",
        "-1",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // Identical files score clean.
    let out = diarkit(&[
        "score",
        "--ref",
        rttm.to_str().unwrap(),
        "--hyp",
        rttm.to_str().unwrap(),
    ]);
    assert_success(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("TOTAL,0.000000"));
}

#[test]
fn frame_stage_without_models_is_rejected_before_processing() {
    // system1 enables frame refinement and overlap handling; without the
    // models those stages need, the run must fail as a config error even
    // though the embedding glob matches nothing either (config checks come
    // first).
    let out = diarkit(&[
        "diarize",
        "--preset",
        "system1",
        "--embeddings",
        "definitely-missing-*.csv",
        "--vad",
        "v",
        "--plda",
        "p.csv",
        "--out",
        "o",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("eigenvoice"), "{stderr}");
}
