#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const STAGES: [&str; 7] = ["build", "features", "sample", "attention", "hurdle", "hyptrails", "pagerank"];

pub fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy")
}

pub fn run(out: &Path, args: &[&str]) -> Output {
    let config = fixture().join("config.toml");
    Command::new(env!("CARGO_BIN_EXE_linkpop"))
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawning linkpop")
}

pub fn run_ok(out: &Path, args: &[&str]) -> String {
    let o = run(out, args);
    let stderr = String::from_utf8_lossy(&o.stderr).into_owned();
    assert!(o.status.success(), "linkpop {args:?} failed:\n{stderr}");
    stderr
}

pub fn pipeline(out: &Path) {
    for stage in STAGES {
        run_ok(out, &[stage]);
    }
}

/// Every file in `dir` with its contents.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect()
}
