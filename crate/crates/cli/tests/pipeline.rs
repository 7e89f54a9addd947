mod common;

use std::fs;

use common::{fixture, pipeline, run, run_ok, snapshot, STAGES};

#[test]
fn build_outputs_match_pinned_fixture() {
    let out = tempfile::tempdir().unwrap();
    run_ok(out.path(), &["build"]);
    run_ok(out.path(), &["attention"]);
    for name in ["transitions.tsv", "build_report.tsv", "attention_histogram.tsv"] {
        let got = fs::read_to_string(out.path().join(name)).unwrap();
        let want = fs::read_to_string(fixture().join("expected").join(name)).unwrap();
        assert_eq!(got, want, "{name}");
    }
}

#[test]
fn rerun_is_a_cache_hit() {
    let out = tempfile::tempdir().unwrap();
    pipeline(out.path());
    let before = snapshot(out.path());
    for stage in STAGES {
        let stderr = run_ok(out.path(), &[stage]);
        assert!(stderr.contains("cache hit"), "{stage}: {stderr}");
    }
    assert_eq!(before, snapshot(out.path()));
}

#[test]
fn tampered_output_is_recomputed() {
    let out = tempfile::tempdir().unwrap();
    run_ok(out.path(), &["build"]);
    let path = out.path().join("build_report.tsv");
    let original = fs::read(&path).unwrap();
    fs::write(&path, b"garbage").unwrap();
    let stderr = run_ok(out.path(), &["build"]);
    assert!(!stderr.contains("cache hit"));
    assert_eq!(fs::read(&path).unwrap(), original);
}

#[test]
fn missing_upstream_names_producer() {
    let out = tempfile::tempdir().unwrap();
    let o = run(out.path(), &["hyptrails"]);
    assert!(!o.status.success());
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("linkpop build"), "{stderr}");

    run_ok(out.path(), &["build"]);
    let o = run(out.path(), &["hurdle"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("linkpop features"));
}

#[test]
fn config_problems_are_listed_together() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "edges = \"nope.tsv\"\nthreshold = 0\nalphas = [1.5]\n").unwrap();
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_linkpop"))
        .args(["--config", cfg.to_str().unwrap(), "build"])
        .output()
        .unwrap();
    assert!(!o.status.success());
    let stderr = String::from_utf8_lossy(&o.stderr);
    for key in ["edges:", "threshold:", "alphas:"] {
        assert!(stderr.contains(key), "{key} missing from:\n{stderr}");
    }
}

#[test]
fn every_output_starts_with_provenance_header() {
    let out = tempfile::tempdir().unwrap();
    pipeline(out.path());
    for (name, bytes) in snapshot(out.path()) {
        if name == "manifest.json" {
            continue;
        }
        let first = bytes.split(|&b| b == b'\n').next().unwrap();
        let first = String::from_utf8_lossy(first);
        assert!(first.starts_with(&format!("# linkpop {}", env!("CARGO_PKG_VERSION"))), "{name}: {first}");
        assert!(first.contains("config=") && first.contains("seeds=sample:0,projection:0"), "{name}: {first}");
    }
}

fn sampled_sources(out: &std::path::Path) -> Vec<String> {
    let text = fs::read_to_string(out.join("sample.tsv")).unwrap();
    let mut srcs: Vec<String> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect();
    srcs.dedup();
    srcs
}

#[test]
fn sample_sizes_and_seeds() {
    let out = tempfile::tempdir().unwrap();
    run_ok(out.path(), &["build"]);
    run_ok(out.path(), &["features"]);

    // 19 of the 20 toy articles have a used out-link
    let o = run(out.path(), &["sample", "--size", "20"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("19 articles"));

    run_ok(out.path(), &["sample", "--size", "19"]);
    assert_eq!(sampled_sources(out.path()).len(), 19);

    run_ok(out.path(), &["sample", "--size", "8"]);
    let a = sampled_sources(out.path());
    assert_eq!(a.len(), 8);
    run_ok(out.path(), &["--seed", "99", "sample", "--size", "8"]);
    assert_ne!(a, sampled_sources(out.path()));
}

#[test]
fn downstream_tables_are_complete() {
    let out = tempfile::tempdir().unwrap();
    pipeline(out.path());
    let body = |name: &str| -> Vec<String> {
        fs::read_to_string(out.path().join(name))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(str::to_owned)
            .collect()
    };
    // header plus 15 features
    assert_eq!(body("hurdle.tsv").len(), 16);
    // header plus 7 hypotheses at 3 kappas
    assert_eq!(body("hyptrails.tsv").len(), 1 + 7 * 3);
    // header plus baseline and 7 hypotheses at 3 alphas
    let pr = body("pagerank.tsv");
    assert_eq!(pr.len(), 1 + 8 * 3);
    assert_eq!(pr[0], "hypothesis\talpha\trho\tp\tsteiger_z\tsteiger_p\timproved");
}
