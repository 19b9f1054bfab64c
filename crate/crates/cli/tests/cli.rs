use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fasthash::inference::CodeMatrix;
use fasthash::io;
use rand::Rng;
use serde_json::Value;
use tempfile::TempDir;

fn fasthash() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fasthash"))
}

fn run(args: &[&str]) -> Output {
    fasthash().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "fasthash {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// 400 train and 100 query points, 10 classes.
fn synth(dir: &Path, seed: u64) -> PathBuf {
    let out = dir.join(format!("data{seed}"));
    ok(&[
        "synth", "--n", "500", "--d", "20", "--classes", "10", "--seed", &seed.to_string(), "--train", "400",
        "--out", s(&out),
    ]);
    out
}

fn quick_train(data: &Path, model: &Path, extra: &[&str]) -> String {
    let (x, y) = (data.join("train.thd"), data.join("train.labels"));
    let mut args = vec!["train", "--features", s(&x), "--labels", s(&y), "--out", s(model)];
    args.extend(["--bits", "8", "--trees", "10", "--pairs", "50"]);
    args.extend(extra);
    ok(&args)
}

#[test]
fn synth_shape_and_determinism() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&["synth", "--n", "2000", "--d", "100", "--classes", "10", "--seed", "5", "--out", s(out)]);
    }
    let x = io::load_features(&a.join("features.thd")).unwrap();
    assert_eq!((x.n(), x.d()), (2000, 100));
    assert_eq!(io::load_labels(&a.join("features.labels")).unwrap().len(), 2000);
    for f in ["features.thd", "features.labels"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }

    let c = dir.path().join("c");
    ok(&["synth", "--n", "30", "--d", "3", "--classes", "3", "--format", "csv", "--out", s(&c)]);
    assert_eq!(io::load_features(&c.join("features.csv")).unwrap().n(), 30);
}

#[test]
fn synth_rejects_invalid_sizes() {
    let dir = TempDir::new().unwrap();
    let out = run(&["synth", "--n", "0", "--d", "3", "--classes", "2", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["synth", "--n", "10", "--d", "3", "--classes", "2", "--train", "10", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn single_bit_training_writes_model_and_manifest() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 1);
    let model = dir.path().join("m.fh");
    quick_train(&data, &model, &["--bits", "1", "--trace", s(&dir.path().join("t"))]);
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.path().join("m.fh.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["bits"].as_array().unwrap().len(), 1);
    assert_eq!(manifest["config"]["bits"], 1);
    assert!(manifest["inputs"].as_array().unwrap().len() >= 2);
    let model_digest = &manifest["outputs"][0];
    assert_eq!(model_digest["bytes"], std::fs::metadata(&model).unwrap().len());

    let trace = ok(&["inspect", "trace", s(&dir.path().join("t.objective.csv"))]);
    assert!(trace.contains("bits: 1, sweep increases: 0"), "{trace}");
    let summary = ok(&["inspect", "model", s(&model)]);
    assert!(summary.contains("bits: 1"), "{summary}");
}

#[test]
fn manifest_args_reproduce_model_digest() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 2);
    let model = dir.path().join("first.fh");
    quick_train(&data, &model, &["--seed", "9", "--sweeps", "3"]);
    let manifest: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("first.fh.manifest.json")).unwrap()).unwrap();
    let args: Vec<String> = manifest["args"].as_array().unwrap().iter().map(|a| a.as_str().unwrap().to_owned()).collect();
    assert_eq!(fasthash().args(&args).status().unwrap().code(), Some(0));
    let again: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("first.fh.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"][0]["sha256"], again["outputs"][0]["sha256"]);
    assert_eq!(manifest["inputs"], again["inputs"]);

    let second = dir.path().join("second.fh");
    quick_train(&data, &second, &["--seed", "9", "--sweeps", "3"]);
    assert_eq!(std::fs::read(&model).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 3);
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "bits = 3\ndepth = 2\nseed = 4\n").unwrap();
    let model = dir.path().join("m.fh");
    quick_train(&data, &model, &["--config", s(&cfg), "--bits", "2"]);
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.path().join("m.fh.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["bits"], 2);
    assert_eq!(manifest["config"]["boost"]["tree"]["depth"], 2);
    assert_eq!(manifest["seed"], 4);

    std::fs::write(&cfg, "bits = 3\n\ncolour = \"red\"\n").unwrap();
    let out = run(&["train", "--features", s(&data.join("train.thd")), "--labels", s(&data.join("train.labels")),
        "--out", s(&model), "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("c.toml:3"), "{err}");
}

#[test]
fn parse_errors_carry_line_numbers() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 4);
    let feats = dir.path().join("bad.csv");
    std::fs::write(&feats, "1,2\n3,4\n5,x\n").unwrap();
    let labels = dir.path().join("l.txt");
    std::fs::write(&labels, "0\n1\n0\n").unwrap();
    let out = run(&["train", "--features", s(&feats), "--labels", s(&labels), "--out", s(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv:3"));

    std::fs::write(&labels, "0\n1\nfoo\n").unwrap();
    let out = run(&["train", "--features", s(&data.join("train.thd")), "--labels", s(&labels), "--out",
        s(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("l.txt:3"));
}

#[test]
fn encode_matches_training_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 5);
    let model = dir.path().join("m.fh");
    quick_train(&data, &model, &["--bits", "64", "--trees", "3", "--sweeps", "1"]);
    let codes = dir.path().join("db.codes");
    ok(&["encode", "--model", s(&model), "--features", s(&data.join("train.thd")), "--out", s(&codes)]);
    let bytes = std::fs::read(&codes).unwrap();
    assert_eq!(bytes.len(), 12 + 400 * 8);
    assert_eq!(&bytes[..4], b"FHCB");

    let decoded = io::load_codes(&codes).unwrap();
    let mut again = Vec::new();
    io::write_codes(&mut again, &decoded).unwrap();
    assert_eq!(again, bytes);

    let json = dir.path().join("m.fh.json");
    let via_json = dir.path().join("json.codes");
    ok(&["encode", "--model", s(&json), "--features", s(&data.join("train.thd")), "--out", s(&via_json)]);
    assert_eq!(std::fs::read(&via_json).unwrap(), bytes);
}

#[test]
fn encode_rejects_dimension_mismatch() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 6);
    let model = dir.path().join("m.fh");
    quick_train(&data, &model, &["--bits", "2"]);
    let other = dir.path().join("other");
    ok(&["synth", "--n", "20", "--d", "7", "--classes", "2", "--out", s(&other)]);
    let out = run(&["encode", "--model", s(&model), "--features", s(&other.join("features.thd")), "--out",
        s(&dir.path().join("c"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimensions"));
}

fn write_codes(path: &Path, codes: &CodeMatrix) {
    io::save_codes(path, codes).unwrap();
}

#[test]
fn self_query_has_unit_precision_at_one() {
    let dir = TempDir::new().unwrap();
    let mut rng = rand::rng();
    let rows: Vec<Vec<i8>> = (0..32).map(|_| (0..200).map(|_| if rng.random() { 1 } else { -1 }).collect()).collect();
    let codes = CodeMatrix::from_rows(&rows).unwrap();
    let path = dir.path().join("c");
    write_codes(&path, &codes);
    let labels = dir.path().join("l");
    std::fs::write(&labels, (0..200).map(|i| format!("{}\n", i % 7)).collect::<String>()).unwrap();
    let out = ok(&["eval", "--db", s(&path), "--query", s(&path), "--db-labels", s(&labels), "--query-labels",
        s(&labels), "--k", "1"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["precision_at_k"], 1.0);
}

#[test]
fn random_codes_sit_at_the_class_prior() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("d");
    ok(&["synth", "--n", "2500", "--d", "10", "--classes", "10", "--train", "2000", "--seed", "3", "--out", s(&data)]);
    let mut rng = rand::rng();
    let mut random = |n: usize| {
        let rows: Vec<Vec<i8>> = (0..16).map(|_| (0..n).map(|_| if rng.random() { 1 } else { -1 }).collect()).collect();
        CodeMatrix::from_rows(&rows).unwrap()
    };
    let (db, q) = (dir.path().join("db"), dir.path().join("q"));
    write_codes(&db, &random(2000));
    write_codes(&q, &random(500));
    let metrics = dir.path().join("m.json");
    let pr = dir.path().join("pr.csv");
    let per = dir.path().join("per.csv");
    ok(&["eval", "--db", s(&db), "--query", s(&q), "--db-labels", s(&data.join("train.labels")), "--query-labels",
        s(&data.join("query.labels")), "--out", s(&metrics), "--pr-curve", s(&pr), "--per-query", s(&per)]);
    let v: Value = serde_json::from_slice(&std::fs::read(&metrics).unwrap()).unwrap();

    let obj = v.as_object().unwrap();
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["k", "map", "pr_area", "precision_at_k"]);
    assert_eq!(v["k"], 100);
    for key in ["precision_at_k", "map", "pr_area"] {
        let x = v[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&x), "{key}={x}");
    }
    let p = v["precision_at_k"].as_f64().unwrap();
    assert!((p - 0.1).abs() <= 0.05, "p@100 = {p}");

    let curve = std::fs::read_to_string(&pr).unwrap();
    assert!(curve.starts_with("recall,precision\n"));
    assert_eq!(std::fs::read_to_string(&per).unwrap().lines().count(), 501);
}

#[test]
fn eval_rejects_mismatched_bit_lengths() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    write_codes(&a, &CodeMatrix::new(8, 4));
    write_codes(&b, &CodeMatrix::new(16, 4));
    let labels = dir.path().join("l");
    std::fs::write(&labels, "0\n1\n0\n1\n").unwrap();
    let out = run(&["eval", "--db", s(&a), "--query", s(&b), "--db-labels", s(&labels), "--query-labels", s(&labels)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_accepts_tag_truth() {
    let dir = TempDir::new().unwrap();
    let rows: Vec<Vec<i8>> = vec![vec![1, -1, 1], vec![1, 1, -1]];
    let codes = dir.path().join("c");
    write_codes(&codes, &CodeMatrix::from_rows(&rows).unwrap());
    let tags = dir.path().join("t");
    std::fs::write(&tags, "sky sea sun\nsky sea\nrock\n").unwrap();
    let out = ok(&["eval", "--db", s(&codes), "--query", s(&codes), "--db-tags", s(&tags), "--query-tags", s(&tags),
        "--k", "3"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["k"], 3);
}

#[test]
fn inspect_blocks_and_model() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 7);
    let model = dir.path().join("m.fh");
    let blocks = dir.path().join("b.txt");
    quick_train(&data, &model, &["--bits", "4", "--depth", "3", "--blocks", s(&blocks)]);

    let text = ok(&["inspect", "blocks", s(&blocks)]);
    assert!(text.contains("points: 400"), "{text}");

    let text = ok(&["inspect", "model", s(&model)]);
    let field = |name: &str| -> String {
        text.lines().find_map(|l| l.strip_prefix(name)).unwrap_or_else(|| panic!("{name} missing: {text}")).to_owned()
    };
    let trees: usize = field("trees: ").parse().unwrap();
    assert!(trees <= 4 * 10);
    let internal: usize = field("internal nodes: ").split(' ').next().unwrap().parse().unwrap();
    assert_eq!(internal, trees * 7);
    let splits: usize = field("internal nodes: ").split('(').nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    let total: usize = field("features used: ").rsplit(' ').next().unwrap().trim_end_matches(')').parse().unwrap();
    assert_eq!(total, splits);
}

#[test]
fn inspect_all_dissimilar_blocks_are_singletons() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("d");
    ok(&["synth", "--n", "40", "--d", "3", "--classes", "40", "--out", s(&data)]);
    let blocks = dir.path().join("b.txt");
    quick_train_full(&data, dir.path(), &blocks);
    let text = ok(&["inspect", "blocks", s(&blocks)]);
    assert!(text.contains("mean size: 1.000"), "{text}");
}

fn quick_train_full(data: &Path, dir: &Path, blocks: &Path) {
    ok(&["train", "--features", s(&data.join("features.thd")), "--labels", s(&data.join("features.labels")),
        "--out", s(&dir.join("m.fh")), "--bits", "1", "--trees", "2", "--pairs", "full", "--blocks", s(blocks)]);
}

#[test]
fn inspect_rejects_unknown_magic() {
    let dir = TempDir::new().unwrap();
    let junk = dir.path().join("junk");
    std::fs::write(&junk, b"NOPE and some bytes").unwrap();
    assert_eq!(run(&["inspect", "model", s(&junk)]).status.code(), Some(1));
    assert_eq!(run(&["inspect", "trace", s(&junk)]).status.code(), Some(1));
    assert_eq!(run(&["inspect", "blocks", s(&junk)]).status.code(), Some(1));
}

#[test]
fn usage_errors_and_threads() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["encode"]).status.code(), Some(1));
    assert_eq!(run(&["--threads", "0", "inspect", "model", "x"]).status.code(), Some(1));
}

#[test]
fn thread_count_does_not_change_the_model() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 8);
    let (a, b) = (dir.path().join("a.fh"), dir.path().join("b.fh"));
    quick_train(&data, &a, &["--bits", "4", "--threads", "1"]);
    quick_train(&data, &b, &["--bits", "4", "--threads", "2"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
