use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn drugnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drugnet"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = drugnet(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const LM_CONF: &str = "embed_dim = 8\nhidden_dim = 12\nepochs = 1\nbptt = 12\nbatch_size = 16\n";
const WORD_CONF: &str = "epochs = 2\nbatch_size = 8\ndiscriminative = true\nunfreeze = true\n";
const TRI_CONF: &str = "embed_dim = 8\nhidden_dim = 12\nattention_dim = 8\nepochs = 2\nbatch_size = 8\n";

/// synth -> pretrain-lm -> finetune-lm -> train x3 -> ensemble-eval, all in `dir`.
fn pipeline(dir: &Path) {
    fs::write(dir.join("lm.conf"), LM_CONF).unwrap();
    fs::write(dir.join("word.conf"), WORD_CONF).unwrap();
    fs::write(dir.join("tri.conf"), TRI_CONF).unwrap();
    ok(dir, &["synth", "--out-dir", "data", "--scale-down", "20"]);
    let log = ok(
        dir,
        &[
            "pretrain-lm",
            "--corpus",
            "data/lm_corpus.txt",
            "--vocab-from",
            "data/benchmark_train.tsv",
            "--config",
            "lm.conf",
            "--out",
            "lm.ckpt",
            "--log",
            "lm.log",
        ],
    );
    assert!(log.contains("perplexity"));
    assert!(fs::read_to_string(dir.join("lm.log")).unwrap().contains("\tval\t"));
    ok(
        dir,
        &[
            "finetune-lm",
            "--checkpoint",
            "lm.ckpt",
            "--tweets",
            "data/tweets.txt",
            "--extra-corpus",
            "data/extra_corpus.txt",
            "--config",
            "lm.conf",
            "--out",
            "ft.ckpt",
        ],
    );
    ok(
        dir,
        &[
            "train",
            "--branch",
            "word",
            "--lm-checkpoint",
            "ft.ckpt",
            "--data",
            "data/benchmark_train.tsv",
            "--config",
            "word.conf",
            "--out",
            "word.ckpt",
        ],
    );
    ok(
        dir,
        &[
            "train",
            "--branch",
            "trigram",
            "--data",
            "data/benchmark_train.tsv",
            "--config",
            "tri.conf",
            "--out",
            "tri.ckpt",
        ],
    );
    ok(
        dir,
        &[
            "train",
            "--branch",
            "linear",
            "--data",
            "data/benchmark_train.tsv",
            "--out",
            "svm.ckpt",
        ],
    );
    let table = ok(
        dir,
        &[
            "ensemble-eval",
            "--word",
            "word.ckpt",
            "--trigram",
            "tri.ckpt",
            "--data",
            "data/benchmark_test.tsv",
            "--out-metrics",
            "metrics.txt",
            "--out-dump",
            "dump.tsv",
        ],
    );
    assert!(table.contains("Accuracy"));
    assert!(table.contains("ensemble"));
}

#[test]
fn full_pipeline_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    for f in [
        "lm.ckpt",
        "ft.ckpt",
        "word.ckpt",
        "tri.ckpt",
        "svm.ckpt",
        "metrics.txt",
        "dump.tsv",
    ] {
        let x = fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty(), "{f} empty");
        assert_eq!(x, fs::read(b.path().join(f)).unwrap(), "{f} differs between runs");
    }

    let dump = fs::read_to_string(a.path().join("dump.tsv")).unwrap();
    let mut lines = dump.lines();
    assert_eq!(
        lines.next(),
        Some("id\tgold\tpred_word\tpred_trigram\tpred_ensemble\tp_ensemble")
    );
    let n_test = fs::read_to_string(a.path().join("data/benchmark_test.tsv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(lines.clone().count() + 1, n_test);
    for line in lines {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 6);
        let p: f64 = cols[5].split(',').map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((p - 1.0).abs() < 1e-5);
    }

    let out = ok(
        a.path(),
        &[
            "predict",
            "--word",
            "word.ckpt",
            "--trigram",
            "tri.ckpt",
            "--text",
            "took my pills today",
        ],
    );
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(["intake", "possible", "none"].contains(&lines[0]));
    let total: f64 = lines[1..]
        .iter()
        .map(|l| l.split('\t').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-5);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = drugnet(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = drugnet(dir.path(), &["train", "--branch", "bogus", "--data", "x", "--out", "y"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = drugnet(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ensemble-eval"));
}

#[test]
fn runtime_errors_print_one_line_and_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = drugnet(
        dir.path(),
        &["pretrain-lm", "--corpus", "missing.txt", "--out", "lm.ckpt"],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    let errors: Vec<&str> = err.lines().filter(|l| l.starts_with("error: ")).collect();
    assert_eq!(errors.len(), 1, "{err}");
    assert_eq!(err.trim_end().lines().last(), Some(errors[0]));
    assert!(!dir.path().join("lm.ckpt").exists());
}

#[test]
fn bad_config_reports_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.conf"), "epochs = 2\nlearning_rate = 0.1\n").unwrap();
    fs::write(dir.path().join("corpus.txt"), "a b c\nd e f\n").unwrap();
    let out = drugnet(
        dir.path(),
        &[
            "pretrain-lm",
            "--corpus",
            "corpus.txt",
            "--config",
            "c.conf",
            "--out",
            "lm.ckpt",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("learning_rate") && err.contains('2'), "{err}");
}

#[test]
fn truncated_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("toy.tsv"),
        "id\tlabel\ttext\na\tyes\tyes please\nb\tno\tno thanks\nc\tyes\tyes yes\nd\tno\tno no\ne\tyes\tyes ok\n",
    )
    .unwrap();
    ok(
        dir.path(),
        &["train", "--branch", "linear", "--data", "toy.tsv", "--out", "m.ckpt"],
    );
    let bytes = fs::read(dir.path().join("m.ckpt")).unwrap();
    fs::write(dir.path().join("cut.ckpt"), &bytes[..bytes.len() / 2]).unwrap();
    let out = drugnet(
        dir.path(),
        &[
            "predict",
            "--word",
            "cut.ckpt",
            "--trigram",
            "cut.ckpt",
            "--text",
            "yes",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bundled_data_matches_generator() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--out-dir", "fresh"]);
    let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut n = 0;
    for entry in fs::read_dir(dir.path().join("fresh")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap();
        assert_eq!(
            fs::read(&path).unwrap(),
            fs::read(bundled.join(name)).unwrap(),
            "{name:?}"
        );
        n += 1;
    }
    assert_eq!(n, 8);
}
