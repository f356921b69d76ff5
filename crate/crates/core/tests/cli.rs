use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn seqtime(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqtime"))
        .args(args)
        .env_remove("SEQ2TIME_CONFIG")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn sha(path: &Path) -> String {
    let bytes = std::fs::read(path).unwrap();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn tokenize_and_detokenize() {
    let o = seqtime(&["tokenize", "7", "96"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "<0><7><2><9>");
    let o = seqtime(&["detokenize", "<0><7><2><9>", "--duration", "60"]);
    assert_eq!(stdout(&o), "4.374");
    let o = seqtime(&["detokenize", "<0><7><2><9>"]);
    assert_eq!(stdout(&o), "0.0729");
    let o = seqtime(&["--json", "tokenize", "1", "1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["tokens"], "<9><9><9><9>");
    assert_eq!(seqtime(&["tokenize", "0", "96"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(seqtime(&["tokenize", "97", "96"]).status.code(), Some(2));
    assert_eq!(seqtime(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(seqtime(&["detokenize", "<1><2>"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.jsonl");
    let o = seqtime(&[
        "build-image-seq",
        "--images",
        "/nonexistent.jsonl",
        "--out",
        p(&out),
        "--n",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = seqtime(&[
        "build-image-seq",
        "--images",
        &data("sample_images.jsonl"),
        "--out",
        p(&out),
        "--max-targets",
        "6",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--allow-nonpaper"));
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "sed = 3\n").unwrap();
    assert_eq!(
        seqtime(&["--config", p(&cfg), "tokenize", "1", "2"]).status.code(),
        Some(2)
    );
}

#[test]
fn unwritable_output_exits_4() {
    let o = seqtime(&[
        "build-clip-seq",
        "--clips",
        &data("sample_clips.jsonl"),
        "--out",
        "/nonexistent-dir/out.jsonl",
        "--n",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn builds_are_byte_identical_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for (i, jobs) in ["1", "4", "1"].iter().enumerate() {
        let img = dir.path().join(format!("img{i}.jsonl"));
        let clip = dir.path().join(format!("clip{i}.jsonl"));
        let o = seqtime(&[
            "--seed",
            "9",
            "--jobs",
            jobs,
            "build-image-seq",
            "--images",
            &data("sample_images.jsonl"),
            "--out",
            p(&img),
            "--n",
            "500",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let o = seqtime(&[
            "--seed",
            "9",
            "--jobs",
            jobs,
            "build-clip-seq",
            "--clips",
            &data("sample_clips.jsonl"),
            "--out",
            p(&clip),
            "--n",
            "500",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        hashes.push((sha(&img), sha(&clip)));
    }
    assert!(hashes.windows(2).all(|w| w[0] == w[1]));
    let other = dir.path().join("other.jsonl");
    seqtime(&[
        "--seed",
        "10",
        "build-image-seq",
        "--images",
        &data("sample_images.jsonl"),
        "--out",
        p(&other),
        "--n",
        "500",
    ]);
    assert_ne!(sha(&other), hashes[0].0);
}

#[test]
fn config_file_and_env_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.jsonl");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "seed = 4\ntime_repr = \"free-form\"\n[clip]\nsource = {:?}\noutput = {:?}\nn_instances = 20\n",
            data("sample_clips.jsonl"),
            p(&out)
        ),
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_seqtime"))
        .args(["build-clip-seq", "--n", "12"])
        .env("SEQ2TIME_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.contains("seconds") && !text.contains("<0>"));
    assert!(dir.path().join("c.jsonl.stats.json").exists());
}

#[test]
fn generated_ground_truth_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    for repr in ["rpt", "free-form"] {
        let out = dir.path().join(format!("{repr}.jsonl"));
        let eval_dir = dir.path().join(repr);
        let o = seqtime(&[
            "build-clip-seq",
            "--clips",
            &data("sample_clips.jsonl"),
            "--out",
            p(&out),
            "--n",
            "200",
            "--time-repr",
            repr,
            "--eval-dir",
            p(&eval_dir),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        for (cmd, stem) in [("eval-dvc", "dvc"), ("eval-tvg", "tvg")] {
            let report = dir.path().join(format!("{repr}-{stem}.json"));
            let o = seqtime(&[
                "--json",
                cmd,
                "--pred",
                p(&eval_dir.join(format!("{stem}_gt_as_pred.jsonl"))),
                "--gt",
                p(&eval_dir.join(format!("{stem}_gt.jsonl"))),
                "--time-repr",
                repr,
                "--report",
                p(&report),
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
            assert_eq!(v["r_at_1"]["0.5"], 1.0, "{repr} {cmd}");
            if stem == "dvc" {
                assert_eq!(v["temporal_f1"], 1.0, "{repr}");
            }
            assert!(report.exists());
        }
    }
}

#[test]
fn eval_rejects_mismatched_ids() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("p.jsonl");
    let gt = dir.path().join("g.jsonl");
    std::fs::write(
        &pred,
        r#"{"video_id":"a","output":"0.0 - 1.0 seconds, x","duration_s":2.0}"#,
    )
    .unwrap();
    std::fs::write(
        &gt,
        r#"{"video_id":"b","events":[{"start":0.0,"end":1.0,"caption":"x"}]}"#,
    )
    .unwrap();
    let o = seqtime(&[
        "eval-dvc",
        "--pred",
        p(&pred),
        "--gt",
        p(&gt),
        "--time-repr",
        "free-form",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mix_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("i.jsonl");
    let clip = dir.path().join("c.jsonl");
    let mixed = dir.path().join("m.jsonl");
    seqtime(&[
        "build-image-seq",
        "--images",
        &data("sample_images.jsonl"),
        "--out",
        p(&img),
        "--n",
        "100",
    ]);
    seqtime(&[
        "build-clip-seq",
        "--clips",
        &data("sample_clips.jsonl"),
        "--out",
        p(&clip),
        "--n",
        "100",
    ]);
    let a = format!("{}=0.5", p(&img));
    let b = format!("{}=0.5", p(&clip));
    let o = seqtime(&[
        "mix",
        "--input",
        &a,
        "--input",
        &b,
        "--total",
        "120",
        "--out",
        p(&mixed),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = seqtime(&["--json", "stats", p(&mixed)]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["stats"]["records"], 120);

    let bad = format!("{}=0.7", p(&img));
    let o = seqtime(&["mix", "--input", &bad, "--input", &b, "--out", p(&mixed)]);
    assert_eq!(o.status.code(), Some(2));
    let o = seqtime(&[
        "mix",
        "--input",
        &a,
        "--input",
        &b,
        "--total",
        "1000",
        "--out",
        p(&mixed),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = seqtime(&[
        "mix",
        "--input",
        &a,
        "--input",
        &b,
        "--total",
        "1000",
        "--replacement",
        "--out",
        p(&mixed),
    ]);
    assert!(o.status.success());
}

#[test]
fn analyze_quantization_prints_json() {
    let o = seqtime(&["analyze-quantization", "--model", "rounding-only", "--duration", "60"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["max_abs_error_s"].as_f64().unwrap() <= 0.003);
}
