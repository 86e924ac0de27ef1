use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn graphlss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphlss"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn run_step(step: &str, out: &Path, extra: &[&str]) -> Output {
    let conf = fixtures().join("pipeline.conf");
    let output = format!("output={}", out.display());
    let mut args = vec![step, "--config", conf.to_str().unwrap(), output.as_str()];
    args.extend_from_slice(extra);
    graphlss(&args)
}

fn ok(step: &str, out: &Path, extra: &[&str]) -> String {
    let o = run_step(step, out, extra);
    assert!(
        o.status.success(),
        "{step} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

const STEPS: [&str; 6] = ["ingest", "label", "build-graphs", "train", "infer", "eval"];

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn full_pipeline_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let ingest = ok("ingest", out, &[]);
    assert!(ingest.contains("train: 16 documents"), "{ingest}");
    for step in &STEPS[1..] {
        ok(step, out, &[]);
    }
    let report = json(&out.join("reports/ingest.json"));
    assert_eq!(report["splits"]["train"]["filter"]["duplicates"], 1);
    assert_eq!(report["splits"]["train"]["malformed"], 1);

    let history = json(&out.join("history.json"));
    let epochs = history["epochs"].as_array().unwrap();
    assert!(!epochs.is_empty() && epochs.len() <= 2);
    for e in epochs {
        let tau = e["tau"].as_f64().unwrap();
        if tau > 0.0 && tau < 1.0 {
            assert!(e["lambda_next"].as_f64().unwrap() <= e["lambda_pos"].as_f64().unwrap());
        }
    }

    let eval = json(&out.join("reports/eval_test.json"));
    let rows = eval["per_document"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let mean: f64 = rows
        .iter()
        .map(|r| r["scores"]["rouge1"]["f1"].as_f64().unwrap())
        .sum::<f64>()
        / rows.len() as f64;
    assert!((mean - eval["mean"]["rouge1"]["f1"].as_f64().unwrap()).abs() < 1e-12);

    for step in ["ingest", "train", "eval"] {
        assert!(out.join(format!("config/{step}.conf")).exists());
        assert!(out.join(format!("timings/{step}.json")).exists());
    }
    let stats = ok("stats", out, &[]);
    assert!(stats.contains("E_ws"));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for step in STEPS {
        ok(step, a.path(), &["--threads", "3"]);
        ok(step, b.path(), &["--deterministic"]);
    }
    for file in [
        "reports/ingest.json",
        "reports/label.json",
        "reports/graphs.json",
        "reports/train.json",
        "reports/eval_test.json",
        "labeled/train.jsonl",
        "graphs/train.glsb",
        "history.json",
        "model.glsm",
        "summaries/test.jsonl",
    ] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs between runs");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(graphlss(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run_step("ingest", out, &["no_such_key=1"]).status.code(), Some(1));
    assert_eq!(run_step("ingest", out, &["data=/definitely/missing"]).status.code(), Some(2));
    // downstream step before its inputs exist
    assert_eq!(run_step("train", out, &[]).status.code(), Some(2));
    ok("ingest", out, &[]);
    ok("label", out, &[]);
    let missing = run_step("build-graphs", out, &["word_embeddings=/no/such/file.txt"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("word embedding"));
    // a checkpoint trained with one width cannot serve another
    ok("build-graphs", out, &[]);
    ok("train", out, &[]);
    assert_ne!(run_step("infer", out, &["hidden=16"]).status.code(), Some(0));
}

#[test]
fn skip_existing_leaves_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok("ingest", out, &[]);
    let before = std::fs::read(out.join("reports/ingest.json")).unwrap();
    let msg = ok("ingest", out, &["--skip-existing", "min_tokens=1"]);
    assert!(msg.contains("skipped"));
    assert_eq!(std::fs::read(out.join("reports/ingest.json")).unwrap(), before);
}

#[test]
fn sampling_flags_limit_documents() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok("ingest", out, &["--max-docs", "3", "--sample-seed", "5"]);
    let report = json(&out.join("reports/ingest.json"));
    assert_eq!(report["splits"]["train"]["documents"], 3);
    assert_eq!(report["splits"]["test"]["documents"], 3);
}

#[test]
fn ablation_report_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    for step in ["ingest", "label", "build-graphs"] {
        ok(step, out, &[]);
    }
    let table = ok("ablate", out, &["max_epochs=1"]);
    assert!(table.contains("full"));
    let report = json(&out.join("reports/ablation.json"));
    let variants = report["variants"].as_array().unwrap();
    assert_eq!(variants.len(), 4);
    let drops: Vec<f64> = variants.iter().map(|v| v["rouge1_drop"].as_f64().unwrap()).collect();
    assert!(drops.windows(2).all(|w| w[0] >= w[1]));
}
