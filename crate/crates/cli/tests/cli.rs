//! Binary-level checks: the full subcommand chain on a small synthetic
//! directory corpus, determinism of artifacts, and failure exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hlsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlsm"))
        .args(args)
        .env("HLSM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_corpus_tree(root: &Path) {
    // two classes with disjoint content words plus shared filler
    let themes = [
        ("astro", ["orbit planet stellar comet galaxy", "planet orbit nebula stellar flux"]),
        ("botany", ["fern moss lichen petal stamen", "petal fern pollen moss bloom"]),
    ];
    for (class, docs) in themes {
        let dir = root.join(class);
        fs::create_dir_all(&dir).unwrap();
        for (i, body) in docs.iter().enumerate() {
            // repeat words so min_count=3 keeps them
            let text = format!("{body} {body} {body}");
            fs::write(dir.join(format!("doc{i}.txt")), text).unwrap();
        }
    }
}

#[test]
fn full_subcommand_chain() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_corpus_tree(&root.join("raw"));
    let corpus = root.join("corpus.txt");
    let model = root.join("model.txt");

    let out = hlsm(&[
        "preprocess",
        root.join("raw").to_str().unwrap(),
        corpus.to_str().unwrap(),
        "--min-count",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let corpus_text = fs::read_to_string(&corpus).unwrap();
    assert!(corpus_text.starts_with("HLSM-CORPUS v1\n"));
    assert!(corpus_text.contains("# config: min_count=3"));
    assert!(corpus_text.contains("# input-sha256: "));

    let out = hlsm(&[
        "train",
        corpus.to_str().unwrap(),
        model.to_str().unwrap(),
        "--svd-rank",
        "8",
        "--threshold",
        "0.2",
        "--seed",
        "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("topics="), "missing train log: {stdout}");
    assert!(model.exists());
    assert!(root.join("model.graph").exists());
    assert!(root.join("model.tree").exists());

    // eval: perplexity line shape
    let out = hlsm(&[
        "eval",
        model.to_str().unwrap(),
        corpus.to_str().unwrap(),
        "--mode",
        "perplexity",
    ]);
    assert!(out.status.success());
    let line = String::from_utf8_lossy(&out.stdout);
    assert!(
        line.starts_with("perplexity=") && line.contains(" tokens=") && line.contains(" coverage="),
        "bad report line: {line}"
    );

    // eval: topics table
    let out = hlsm(&[
        "eval",
        model.to_str().unwrap(),
        corpus.to_str().unwrap(),
        "--mode",
        "topics",
        "--top-n",
        "3",
    ]);
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("topic: 1  p(t):"), "table: {table}");

    // eval: features CSV
    let csv = root.join("features.csv");
    let out = hlsm(&[
        "eval",
        model.to_str().unwrap(),
        corpus.to_str().unwrap(),
        "--mode",
        "features",
        "--features-out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("doc_id,label,coverage,t0"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_corpus_tree(&root.join("raw"));
    let corpus_a = root.join("a.corpus");
    let corpus_b = root.join("b.corpus");
    for corpus in [&corpus_a, &corpus_b] {
        let out = hlsm(&[
            "preprocess",
            root.join("raw").to_str().unwrap(),
            corpus.to_str().unwrap(),
            "--min-count",
            "1",
        ]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&corpus_a).unwrap(), fs::read(&corpus_b).unwrap());

    let model_a = root.join("a.model");
    let model_b = root.join("b.model");
    for model in [&model_a, &model_b] {
        let out = hlsm(&[
            "train",
            corpus_a.to_str().unwrap(),
            model.to_str().unwrap(),
            "--svd-rank",
            "6",
            "--seed",
            "42",
        ]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&model_a).unwrap(), fs::read(&model_b).unwrap());
}

#[test]
fn split_partitions_the_corpus_file() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    // line-format input with labels
    let mut lines = String::new();
    for i in 0..20 {
        let label = if i % 2 == 0 { "even" } else { "odd" };
        lines.push_str(&format!("{label}\tcommon words plus token{i} extra filler\n"));
    }
    let input = root.join("docs.txt");
    fs::write(&input, lines).unwrap();
    let corpus = root.join("corpus.txt");
    assert!(hlsm(&[
        "preprocess",
        input.to_str().unwrap(),
        corpus.to_str().unwrap(),
        "--min-count",
        "1"
    ])
    .status
    .success());

    let train = root.join("train.corpus");
    let test = root.join("test.corpus");
    let out = hlsm(&[
        "split",
        corpus.to_str().unwrap(),
        train.to_str().unwrap(),
        test.to_str().unwrap(),
        "--held-out",
        "0.2",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("16 train / 4 test"), "split log: {stdout}");
    let test_text = fs::read_to_string(&test).unwrap();
    assert!(test_text.contains("# split: test"));
}

#[test]
fn eval_refuses_mismatched_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_corpus_tree(&root.join("raw"));
    let corpus = root.join("corpus.txt");
    assert!(hlsm(&[
        "preprocess",
        root.join("raw").to_str().unwrap(),
        corpus.to_str().unwrap(),
        "--min-count",
        "1"
    ])
    .status
    .success());
    let model = root.join("model.txt");
    assert!(hlsm(&[
        "train",
        corpus.to_str().unwrap(),
        model.to_str().unwrap(),
        "--svd-rank",
        "6"
    ])
    .status
    .success());

    // a different corpus with a different vocabulary
    let other_raw = root.join("other");
    fs::create_dir_all(other_raw.join("misc")).unwrap();
    fs::write(
        other_raw.join("misc/x.txt"),
        "totally unrelated vocabulary entries repeated repeated repeated",
    )
    .unwrap();
    let other_corpus = root.join("other.corpus");
    assert!(hlsm(&[
        "preprocess",
        other_raw.to_str().unwrap(),
        other_corpus.to_str().unwrap(),
        "--min-count",
        "1"
    ])
    .status
    .success());

    let out = hlsm(&[
        "eval",
        model.to_str().unwrap(),
        other_corpus.to_str().unwrap(),
        "--mode",
        "perplexity",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("vocabulary mismatch"));
}

#[test]
fn missing_input_fails_with_nonzero_exit() {
    let out = hlsm(&["preprocess", "/nonexistent/path", "/tmp/out.corpus"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn extreme_threshold_completes_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    // chain corpus: word i appears in docs i and i+1, so no two words have
    // parallel count rows and every similarity sits strictly below 1
    let mut lines = String::new();
    for i in 0..10 {
        lines.push_str(&format!("word{} word{} word{}\n", i, i, (i + 1) % 10));
    }
    let input = root.join("docs.txt");
    fs::write(&input, lines).unwrap();
    let corpus = root.join("corpus.txt");
    assert!(hlsm(&[
        "preprocess",
        input.to_str().unwrap(),
        corpus.to_str().unwrap(),
        "--min-count",
        "1"
    ])
    .status
    .success());
    let model = root.join("model.txt");
    let out = hlsm(&[
        "train",
        corpus.to_str().unwrap(),
        model.to_str().unwrap(),
        "--svd-rank",
        "6",
        "--threshold",
        "0.99999999",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("warning:"), "expected a warning, got: {stderr}");
    assert!(model.exists());
    // the degenerate model still evaluates
    let out = hlsm(&[
        "eval",
        model.to_str().unwrap(),
        corpus.to_str().unwrap(),
        "--mode",
        "perplexity",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
