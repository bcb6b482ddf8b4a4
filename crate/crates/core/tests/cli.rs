mod common;

use std::process::Command;

use common::*;
use webbundle::synth::Size;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = webbundle::cli::run(
        std::iter::once("webbundle").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn synth_file(dir: &std::path::Path, seed: &str, races: &str) -> String {
    let p = dir
        .join(format!("s{seed}-{races}.web"))
        .to_str()
        .unwrap()
        .to_string();
    let (code, _, err) = run(&[
        "synth", "--seed", seed, "--size", "small", "--races", races, "-o", &p,
    ]);
    assert_eq!(code, 0, "{err}");
    p
}

#[test]
fn validate_clean_bundle_reports_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let b = synth_file(dir.path(), "3", "0");
    let (code, out, _) = run(&["validate", &b, "--strict"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["findings"].as_array().unwrap().len(), 0);
    let (code, out, _) = run(&["--format", "csv", "validate", &b]);
    assert_eq!(code, 0);
    assert_eq!(out, "member,code,severity,message\n");
}

#[test]
fn strict_fails_on_findings() {
    let dir = tempfile::tempdir().unwrap();
    let b = synth_file(dir.path(), "3", "0");
    let unpacked = dir.path().join("u");
    webbundle::bundle::unpack_bundle(b.as_ref(), &unpacked).unwrap();
    let manifest = unpacked.join("manifest.json");
    let text = std::fs::read_to_string(&manifest)
        .unwrap()
        .replace("2026-01-01T00:00:00Z", "soon");
    std::fs::write(&manifest, text).unwrap();
    let u = unpacked.to_str().unwrap();
    assert_eq!(run(&["validate", u]).0, 0);
    let (code, out, _) = run(&["validate", "--strict", "--format", "csv", u]);
    assert_eq!(code, 1);
    assert!(out.contains("MANIFEST_BAD_TIMESTAMP"), "{out}");
}

#[test]
fn usage_errors_exit_two() {
    let (code, out, err) = run(&["validate", "--no-such-flag", "x.web"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("--no-such-flag"));
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["--format", "xml", "stats", "x"]).0, 2);
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    for sub in [
        "validate",
        "stats",
        "pack",
        "query",
        "diff-har",
        "third-parties",
        "attribute",
        "synth",
    ] {
        assert!(out.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn runtime_errors_exit_one() {
    let (code, out, err) = run(&["stats", "/nonexistent/bundle.web"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.starts_with("error:"));
}

#[test]
fn diff_har_on_race_injected_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let b = synth_file(dir.path(), "5", "1");
    let (code, out, _) = run(&["diff-har", &b]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["graph_only"].as_array().unwrap().len(), 1);
    assert_eq!(v["har_only"].as_array().unwrap().len(), 0);
    let clean = synth_file(dir.path(), "5", "0");
    let (_, out, _) = run(&["diff-har", "--format", "csv", &clean]);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.last(), Some(&"0"));
}

#[test]
fn third_parties_top_n_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = write_corpus(dir.path(), 1..=30, Size::Small);
    let list = dir.path().join("l.txt");
    std::fs::write(&list, include_str!("fixtures/easyprivacy_head.txt")).unwrap();
    let (code, out, err) = run(&[
        "third-parties",
        "--corpus",
        corpus.to_str().unwrap(),
        "--list",
        list.to_str().unwrap(),
        "--top",
        "5",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0, "{err}");
    let rows: Vec<Vec<String>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for w in rows.windows(2) {
        let (a, b): (usize, usize) = (w[0][2].parse().unwrap(), w[1][2].parse().unwrap());
        assert!(a > b || (a == b && w[0][1] < w[1][1]), "{w:?}");
    }
    assert!(err.contains("easyprivacy") || err.contains("l.txt"));
}

#[test]
fn pack_and_query_subcommands_emit_rows() {
    let dir = tempfile::tempdir().unwrap();
    let b = synth_file(dir.path(), "8", "0");
    let u = dir.path().join("u");
    webbundle::bundle::unpack_bundle(b.as_ref(), &u).unwrap();
    let packed = dir.path().join("p.web");
    let (code, out, _) = run(&[
        "pack",
        u.to_str().unwrap(),
        "-o",
        packed.to_str().unwrap(),
        "--compress",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 5);
    assert!(out.contains("page.graphml.gz"));
    let p = packed.to_str().unwrap();
    for q in [
        ["query", "api-calls"],
        ["query", "handlers"],
        ["query", "requests"],
    ] {
        let (code, out, _) = run(&[q[0], q[1], p]);
        assert_eq!(code, 0);
        for line in out.lines() {
            serde_json::from_str::<serde_json::Value>(line).unwrap();
        }
    }
    let (_, out, _) = run(&["query", "requests", "--attribute", "--format", "csv", p]);
    assert!(
        out.lines().skip(1).all(|l| !l.ends_with(',')),
        "attributed rows carry a party"
    );
    let (_, out, _) = run(&["stats", p, "--format", "csv"]);
    assert!(out.starts_with("key,value\n"));
}

#[test]
fn suffix_data_flag_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let b = synth_file(dir.path(), "2", "0");
    let psl = dir.path().join("psl.dat");
    std::fs::write(
        &psl,
        "// ===BEGIN ICANN DOMAINS===\ncom\nnet\n// ===END ICANN DOMAINS===\n",
    )
    .unwrap();
    let (code, _, err) = run(&[
        "query",
        "requests",
        "--attribute",
        "--suffix-data",
        psl.to_str().unwrap(),
        &b,
    ]);
    assert_eq!(code, 0, "{err}");
    let (code, _, _) = run(&[
        "query",
        "requests",
        "--attribute",
        "--suffix-data",
        "/missing.dat",
        &b,
    ]);
    assert_eq!(code, 1);
}

#[test]
fn binary_runs() {
    let out = Command::new(env!("CARGO_BIN_EXE_webbundle"))
        .arg("--version")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("webbundle "));
    let out = Command::new(env!("CARGO_BIN_EXE_webbundle"))
        .arg("nope")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn suffix_data_env_var_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let b = synth_file(dir.path(), "2", "0");
    let bin = env!("CARGO_BIN_EXE_webbundle");
    let out = Command::new(bin)
        .args(["query", "requests", "--attribute", &b])
        .env("WEBBUNDLE_SUFFIX_DATA", "/missing.dat")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // The flag wins over the variable.
    let psl = dir.path().join("psl.dat");
    std::fs::write(
        &psl,
        "// ===BEGIN ICANN DOMAINS===\ncom\n// ===END ICANN DOMAINS===\n",
    )
    .unwrap();
    let out = Command::new(bin)
        .args([
            "query",
            "requests",
            "--attribute",
            "--suffix-data",
            psl.to_str().unwrap(),
            &b,
        ])
        .env("WEBBUNDLE_SUFFIX_DATA", "/missing.dat")
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
