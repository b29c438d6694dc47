use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel)
}

fn isext(args: &[&str]) -> Output {
    isext_env(args, &[])
}

fn isext_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_isext"));
    cmd.args(args).env_remove("ISEXT_SMT_CMD");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn text(out: &Output) -> (String, String) {
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn have_solver() -> bool {
    isext_core::SolverSession::discover(10_000).is_some()
}

#[test]
fn extract_lists_clusters_and_sizes() {
    let d1 = corpus("d1.ddg");
    let out = isext(&["cluster", d1.to_str().unwrap(), "--max-inputs", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let (stdout, _) = text(&out);
    assert!(stdout.contains("d1,2,3,3,2,33.33\n"), "{stdout}");
    assert!(stdout.contains("ci1 "), "{stdout}");

    let out = isext(&["extract", d1.to_str().unwrap(), "--max-inputs", "1:3"]);
    let (stdout, _) = text(&out);
    assert_eq!(stdout.matches("# d1 max_inputs=").count(), 3);
    assert!(stdout.contains("maxmiso"));
}

#[test]
fn magma_round_gives_three_named_instructions() {
    let out = isext(&["cluster", corpus("magma_round.ddg").to_str().unwrap(), "--max-inputs", "6"]);
    let (stdout, _) = text(&out);
    assert!(stdout.contains("# 5 candidates, 3 distinct"), "{stdout}");
    assert!(stdout.contains("magma_round,6,24,10,9,10.00"), "{stdout}");
}

#[test]
fn input_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ddg");
    std::fs::write(&bad, "input a\nt = frob a a\noutput t\n").unwrap();
    let out = isext(&["extract", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let (_, stderr) = text(&out);
    assert!(stderr.contains("bad.ddg:2"), "{stderr}");

    let out = isext(&["extract", "/nonexistent/x.ddg"]);
    assert_eq!(out.status.code(), Some(1));
    let out = isext(&["extract", corpus("d1.ddg").to_str().unwrap(), "--max-inputs", "3:1"]);
    assert_eq!(out.status.code(), Some(1));
    let empty = tempfile::tempdir().unwrap();
    let out = isext(&["pipeline", empty.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_solver_is_reported() {
    let f = corpus("magma_ci.fn");
    let out = isext_env(&["subsume", f.to_str().unwrap()], &[("ISEXT_SMT_CMD", "/nonexistent/solver -in")]);
    assert_eq!(out.status.code(), Some(2));
    let (_, stderr) = text(&out);
    assert!(stderr.contains("ISEXT_SMT_CMD"), "{stderr}");

    // The flag wins over the environment.
    let out = isext_env(
        &["subsume", f.to_str().unwrap(), "--solver-cmd", "/nonexistent/other"],
        &[("ISEXT_SMT_CMD", "/nonexistent/solver")],
    );
    let (_, stderr) = text(&out);
    assert!(stderr.contains("/nonexistent/other"), "{stderr}");
}

#[test]
fn config_file_supplies_solver_and_limits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("isext.toml");
    std::fs::write(&cfg, "max_inputs = \"2\"\n[solver]\ncmd = \"/nonexistent/from-config\"\n").unwrap();
    let f = corpus("magma_ci.fn");
    let out = isext(&["subsume", f.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out).1.contains("from-config"));

    let out = isext(&["extract", corpus("d1.ddg").to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert!(text(&out).0.contains("d1,2,"));

    std::fs::write(&cfg, "max_inputs = 2\n").unwrap();
    let out = isext(&["extract", corpus("d1.ddg").to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn brute_oracle_runs_without_a_solver() {
    let dir = tempfile::tempdir().unwrap();
    let f = corpus("magma_ci.fn");
    let out = isext(&[
        "subsume",
        f.to_str().unwrap(),
        "--oracle",
        "brute",
        "--width",
        "4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", text(&out));
    let set = std::fs::read_to_string(dir.path().join("set.csv")).unwrap();
    assert_eq!(set, "set,before,after,factor\nmagma_ci,2,1,2.00\n");

    // Too wide to enumerate.
    let out = isext(&["subsume", f.to_str().unwrap(), "--oracle", "brute"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn undecided_pairs_exit_3_with_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = isext(&[
        "subsume",
        corpus("magma_ci.fn").to_str().unwrap(),
        "--oracle",
        "brute",
        "--width",
        "4",
        "--max-iters",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{:?}", text(&out));
    let pairs = std::fs::read_to_string(dir.path().join("pairs.csv")).unwrap();
    assert!(pairs.contains("inconclusive"), "{pairs}");
    assert!(dir.path().join("set.csv").exists());
}

fn pipeline(out: &Path) -> Output {
    isext(&[
        "pipeline",
        corpus("d1.ddg").to_str().unwrap(),
        corpus("chained_common.ddg").to_str().unwrap(),
        "--max-inputs",
        "1:4",
        "--oracle",
        "brute",
        "--width",
        "4",
        "--no-timing",
        "--out",
        out.to_str().unwrap(),
    ])
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn pipeline_is_deterministic_and_manifest_complete() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = pipeline(d.path());
        assert_eq!(out.status.code(), Some(0), "{:?}", text(&out));
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa, fb);

    let manifest: serde_json::Value = serde_json::from_slice(&fa["manifest.json"]).unwrap();
    let listed: BTreeMap<String, String> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["path"].as_str().unwrap().to_string(), e["sha256"].as_str().unwrap().to_string()))
        .collect();
    for (name, bytes) in &fa {
        if name == "manifest.json" {
            continue;
        }
        assert_eq!(listed.get(name), Some(&hex::encode(Sha256::digest(bytes))), "{name}");
    }
    assert_eq!(listed.len(), fa.len() - 1);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["config"]["max_inputs"], "1:4");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));

    let cover = String::from_utf8(fa["cover.csv"].clone()).unwrap();
    assert_eq!(cover.lines().count(), 1 + 2 * 4);

    // The report command reads the directory back.
    let out = isext(&["report", a.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out).0.contains("chained_common k=3: base 5 maxmiso 5 clustered 3"), "{:?}", text(&out));
}

#[test]
fn pipeline_with_solver_over_corpus_directory() {
    if !have_solver() {
        eprintln!("no solver found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = corpus("");
    let out = isext(&[
        "pipeline",
        corpus_dir.to_str().unwrap(),
        "--no-timing",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", text(&out));
    let f = files(dir.path());
    let cover = String::from_utf8(f["cover.csv"].clone()).unwrap();
    assert_eq!(cover.lines().count(), 1 + isext_core::corpus::DDGS.len());
    assert!(cover.contains("magma_round,6,24,10,9,10.00"));
}

#[test]
fn report_rejects_unknown_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    std::fs::write(&p, "a,b\n1,2\n").unwrap();
    let out = isext(&["report", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
