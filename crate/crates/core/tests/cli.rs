//! End-to-end tests of the `gdpl` binary: artifact generation,
//! training runs with resume, evaluation reports, traces, exit codes
//! and byte-level reproducibility of every command.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdpl"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn gdpl binary")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "gdpl {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

fn fails(dir: &Path, args: &[&str], code: i32, needle: &str) {
    let out = run_in(dir, args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "gdpl {args:?} exit code; stderr:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains(needle),
        "gdpl {args:?} stderr missing {needle:?}:\n{stderr}"
    );
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

/// Bundle plus a small corpus, generated through the CLI itself.
fn setup_world(dir: &Path) {
    ok(dir, &["gen-ontology", "--seed", "4", "--out", "bundle.json"]);
    ok(
        dir,
        &[
            "gen-corpus",
            "--bundle",
            "bundle.json",
            "--sessions",
            "40",
            "--epsilon",
            "0.1",
            "--seed",
            "2",
            "--out",
            "corpus.jsonl",
        ],
    );
}

/// A config that keeps training runs small enough for tests.
fn small_config(dir: &Path, algo: &str, seed: u64, iterations: usize) -> PathBuf {
    let text = format!(
        "[training]\nalgo = \"{algo}\"\nseed = {seed}\niterations = {iterations}\n\
         episodes_per_iter = 4\npretrain_epochs = 1\n"
    );
    let path = dir.join("cfg.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn train_args(config: &str, out_dir: &str) -> Vec<String> {
    vec![
        "train".into(),
        "--config".into(),
        config.into(),
        "--bundle".into(),
        "bundle.json".into(),
        "--corpus".into(),
        "corpus.jsonl".into(),
        "--out-dir".into(),
        out_dir.into(),
    ]
}

fn run_train(dir: &Path, config: &str, out_dir: &str, extra: &[&str]) -> String {
    let mut args = train_args(config, out_dir);
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(dir, &refs)
}

#[test]
fn help_and_bad_invocations_use_documented_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let help = run_in(dir.path(), &["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    for sub in ["gen-ontology", "gen-corpus", "train", "eval", "trace"] {
        assert!(text.contains(sub), "help must list {sub}");
    }

    let bare = run_in(dir.path(), &[]);
    assert_eq!(bare.status.code(), Some(1));
    let unknown = run_in(dir.path(), &["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(1));

    fails(
        dir.path(),
        &["train", "--algo", "dqn"],
        1,
        "unknown algorithm",
    );
    fails(
        dir.path(),
        &["gen-corpus", "--bundle", "bundle.json", "--sessions", "0"],
        1,
        "--sessions must be positive",
    );
}

#[test]
fn missing_input_files_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    fails(
        dir.path(),
        &["gen-corpus", "--bundle", "nope.json"],
        3,
        "io error",
    );
    let cfg = small_config(dir.path(), "gdpl", 0, 1);
    let args = train_args(cfg.to_str().unwrap(), "out");
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = run_in(dir.path(), &refs);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn gen_ontology_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let report = ok(
        dir.path(),
        &["gen-ontology", "--seed", "4", "--out", "a.json"],
    );
    assert!(report.contains("domains"), "report: {report}");
    ok(dir.path(), &["gen-ontology", "--seed", "4", "--out", "b.json"]);
    ok(dir.path(), &["gen-ontology", "--seed", "5", "--out", "c.json"]);
    assert_eq!(read(&dir.path().join("a.json")), read(&dir.path().join("b.json")));
    assert_ne!(read(&dir.path().join("a.json")), read(&dir.path().join("c.json")));
}

#[test]
fn gen_corpus_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-ontology", "--seed", "4", "--out", "bundle.json"]);
    let gen = |out: &str, seed: &str| {
        ok(
            dir.path(),
            &[
                "gen-corpus",
                "--bundle",
                "bundle.json",
                "--sessions",
                "30",
                "--seed",
                seed,
                "--out",
                out,
            ],
        );
    };
    gen("a.jsonl", "2");
    gen("b.jsonl", "2");
    gen("c.jsonl", "3");
    assert_eq!(read(&dir.path().join("a.jsonl")), read(&dir.path().join("b.jsonl")));
    assert_ne!(read(&dir.path().join("a.jsonl")), read(&dir.path().join("c.jsonl")));
}

#[test]
fn train_rejects_a_corpus_from_another_world() {
    let dir = tempfile::tempdir().unwrap();
    setup_world(dir.path());
    ok(dir.path(), &["gen-ontology", "--seed", "9", "--out", "other.json"]);
    let cfg = small_config(dir.path(), "gdpl", 0, 1);
    fails(
        dir.path(),
        &[
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--bundle",
            "other.json",
            "--corpus",
            "corpus.jsonl",
            "--out-dir",
            "out",
        ],
        2,
        "different world bundle",
    );
}

#[test]
fn train_writes_run_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    setup_world(dir.path());
    let cfg = small_config(dir.path(), "gdpl", 3, 2);
    let report = run_train(dir.path(), cfg.to_str().unwrap(), "run", &[]);
    assert!(
        report.contains("trained gdpl to iteration 2"),
        "report: {report}"
    );

    let out = dir.path().join("run");
    assert!(out.join("config.toml").exists());
    assert!(out.join("checkpoint.json").exists());
    let metrics = String::from_utf8(read(&out.join("metrics.tsv"))).unwrap();
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines.len(), 3, "header plus one row per iteration");
    assert!(lines[0].starts_with("iteration\tf_gap"));
    assert!(lines[1].starts_with("1\t"));
    assert!(lines[2].starts_with("2\t"));
}

#[test]
fn train_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    setup_world(dir.path());
    let cfg = small_config(dir.path(), "gdpl", 3, 2);
    run_train(dir.path(), cfg.to_str().unwrap(), "a", &[]);
    run_train(dir.path(), cfg.to_str().unwrap(), "b", &[]);
    for file in ["metrics.tsv", "checkpoint.json"] {
        assert_eq!(
            read(&dir.path().join("a").join(file)),
            read(&dir.path().join("b").join(file)),
            "{file} must not depend on anything but the seed"
        );
    }
}

#[test]
fn resumed_training_matches_a_single_run_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    setup_world(dir.path());
    let cfg = small_config(dir.path(), "gdpl", 3, 2);

    run_train(dir.path(), cfg.to_str().unwrap(), "oneshot", &["--iterations", "4"]);
    run_train(dir.path(), cfg.to_str().unwrap(), "split", &[]);
    run_train(
        dir.path(),
        cfg.to_str().unwrap(),
        "split",
        &["--iterations", "4", "--resume"],
    );

    for file in ["metrics.tsv", "checkpoint.json"] {
        assert_eq!(
            read(&dir.path().join("oneshot").join(file)),
            read(&dir.path().join("split").join(file)),
            "{file} must continue exactly where the original left off"
        );
    }

    let done = run_train(
        dir.path(),
        cfg.to_str().unwrap(),
        "split",
        &["--iterations", "4", "--resume"],
    );
    assert!(done.contains("nothing to do"), "report: {done}");
}

#[test]
fn resume_rejects_a_mismatched_seed() {
    let dir = tempfile::tempdir().unwrap();
    setup_world(dir.path());
    let cfg = small_config(dir.path(), "gdpl", 3, 1);
    run_train(dir.path(), cfg.to_str().unwrap(), "run", &[]);
    let mut args = train_args(cfg.to_str().unwrap(), "run");
    for extra in ["--iterations", "2", "--seed", "9", "--resume"] {
        args.push(extra.into());
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = run_in(dir.path(), &refs);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not match configured"));
}

#[test]
fn eval_writes_a_deterministic_report() {
    let dir = tempfile::tempdir().unwrap();
    setup_world(dir.path());
    let cfg = small_config(dir.path(), "gdpl", 3, 2);
    run_train(dir.path(), cfg.to_str().unwrap(), "run", &[]);

    let eval = |out: &str| {
        ok(
            dir.path(),
            &[
                "eval",
                "--bundle",
                "bundle.json",
                "--checkpoint",
                "run/checkpoint.json",
                "--goals",
                "10",
                "--seed",
                "5",
                "--out",
                out,
            ],
        )
    };
    let report = eval("r1.json");
    assert!(report.contains("gdpl @ iter 2: 10 goals"), "report: {report}");
    eval("r2.json");
    assert_eq!(read(&dir.path().join("r1.json")), read(&dir.path().join("r2.json")));

    let parsed: serde_json::Value =
        serde_json::from_slice(&read(&dir.path().join("r1.json"))).unwrap();
    assert_eq!(parsed["aggregate"]["sessions"], 10);
    assert_eq!(parsed["per_session"].as_array().unwrap().len(), 10);
    assert_eq!(parsed["returns"].as_array().unwrap().len(), 10);
    assert_eq!(
        parsed["reward_traces"].as_array().unwrap().len(),
        10,
        "estimator-backed checkpoints carry per-turn reward traces"
    );
}

#[test]
fn eval_rejects_a_foreign_bundle() {
    let dir = tempfile::tempdir().unwrap();
    setup_world(dir.path());
    ok(dir.path(), &["gen-ontology", "--seed", "9", "--out", "other.json"]);
    let cfg = small_config(dir.path(), "gdpl", 3, 1);
    run_train(dir.path(), cfg.to_str().unwrap(), "run", &[]);
    fails(
        dir.path(),
        &[
            "eval",
            "--bundle",
            "other.json",
            "--checkpoint",
            "run/checkpoint.json",
            "--goals",
            "5",
        ],
        2,
        "different world bundle",
    );
}

#[test]
fn trace_covers_both_modes_and_guards_the_expert_mode() {
    let dir = tempfile::tempdir().unwrap();
    setup_world(dir.path());
    let gdpl_cfg = small_config(dir.path(), "gdpl", 3, 1);
    run_train(dir.path(), gdpl_cfg.to_str().unwrap(), "gdpl-run", &[]);
    let ppo_cfg = {
        let p = small_config(dir.path(), "ppo-handcrafted", 3, 1);
        let renamed = dir.path().join("ppo.toml");
        std::fs::rename(&p, &renamed).unwrap();
        renamed
    };
    run_train(dir.path(), ppo_cfg.to_str().unwrap(), "ppo-run", &[]);

    let policy = ok(
        dir.path(),
        &[
            "trace",
            "--bundle",
            "bundle.json",
            "--checkpoint",
            "gdpl-run/checkpoint.json",
            "--seed",
            "6",
            "--out",
            "trace.json",
        ],
    );
    assert!(policy.contains("outcome"), "trace output: {policy}");
    let parsed: serde_json::Value =
        serde_json::from_slice(&read(&dir.path().join("trace.json"))).unwrap();
    assert_eq!(parsed["mode"], "policy");
    assert_eq!(
        parsed["turns"].as_array().unwrap().len(),
        parsed["exchanges"].as_u64().unwrap() as usize
    );

    ok(
        dir.path(),
        &[
            "trace",
            "--bundle",
            "bundle.json",
            "--checkpoint",
            "gdpl-run/checkpoint.json",
            "--mode",
            "expert",
            "--seed",
            "6",
        ],
    );
    fails(
        dir.path(),
        &[
            "trace",
            "--bundle",
            "bundle.json",
            "--checkpoint",
            "ppo-run/checkpoint.json",
            "--mode",
            "expert",
        ],
        2,
        "no reward estimator",
    );
    fails(
        dir.path(),
        &[
            "trace",
            "--bundle",
            "bundle.json",
            "--checkpoint",
            "gdpl-run/checkpoint.json",
            "--mode",
            "expert",
            "--epsilon",
            "1.5",
        ],
        2,
        "epsilon",
    );
}
