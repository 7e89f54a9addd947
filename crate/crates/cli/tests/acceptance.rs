//! End-to-end acceptance on the toy fixture. Prints one `PASS`/`FAIL` line.

mod common;

use std::time::Instant;

use common::{pipeline, snapshot};

fn ac8_toy_pipeline_is_byte_stable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let start = Instant::now();
    pipeline(a.path());
    pipeline(b.path());
    let elapsed = start.elapsed();

    let first = snapshot(a.path());
    let second = snapshot(b.path());
    let differing: Vec<&String> = first
        .iter()
        .filter(|(name, bytes)| second.get(*name) != Some(*bytes))
        .map(|(name, _)| name)
        .collect();
    let ok = differing.is_empty() && first.len() == second.len() && elapsed.as_secs_f64() < 5.0;
    println!(
        "[{}] AC8: toy pipeline byte-stable across two runs in < 5 s ({} files, {} differing, {:.2} s)",
        if ok { "PASS" } else { "FAIL" },
        first.len(),
        differing.len(),
        elapsed.as_secs_f64()
    );
    assert!(differing.is_empty(), "outputs differ: {differing:?}");
    assert_eq!(first.len(), second.len());
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
}

fn main() {
    if std::panic::catch_unwind(ac8_toy_pipeline_is_byte_stable).is_err() {
        std::process::exit(1);
    }
}
