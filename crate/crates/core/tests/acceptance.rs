//! Acceptance suite: one test and one printed PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` to see
//! the lines. Thresholds live in `mcph::harness`.

use std::fs;
use std::process::Command;

use mcph::harness::{outcome_line, run_criterion, SuiteConfig};

fn check(id: u8) {
    let (outcome, _) = run_criterion(id, &SuiteConfig::default())
        .unwrap_or_else(|e| panic!("criterion {id} could not run: {e}"));
    println!("{}", outcome_line(&outcome));
    assert!(outcome.passed, "{}", outcome_line(&outcome));
}

#[test]
fn criterion_1_bound_vs_exact_thinning() {
    check(1);
}

#[test]
fn criterion_2_selfhole_exactness() {
    check(2);
}

#[test]
fn criterion_3_mcp_exactness() {
    check(3);
}

#[test]
fn criterion_4_hole_count() {
    check(4);
}

#[test]
fn criterion_5_normalization() {
    check(5);
}

#[test]
fn criterion_6_degeneration() {
    check(6);
}

#[test]
fn criterion_7_lens_oracle() {
    check(7);
}

#[test]
fn criterion_8_functional_identities() {
    check(8);
}

/// Shrunk `validate` runs through the binary at three worker counts; stdout
/// and every written file must match byte for byte.
fn cli_validate_is_worker_independent() -> bool {
    let mut runs = Vec::new();
    let root = tempfile::tempdir().unwrap();
    for workers in [1, 4, 8] {
        let dir = root.path().join(format!("w{workers}"));
        let out = Command::new(env!("CARGO_BIN_EXE_mcph"))
            .args(["validate", "--seed", "77", "--trials", "150"])
            .args(["--lens-points", "20000", "--determinism-trials", "50"])
            .args(["--workers", &workers.to_string()])
            .arg("--output-dir")
            .arg(&dir)
            .output()
            .unwrap();
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        runs.push((out.status.code(), out.stdout, files));
    }
    runs.windows(2).all(|w| w[0] == w[1])
}

#[test]
fn criterion_9_determinism() {
    let (mut outcome, _) = run_criterion(9, &SuiteConfig::default()).unwrap();
    let cli_same = cli_validate_is_worker_independent();
    outcome.passed &= cli_same;
    outcome.detail.push_str(&format!(
        "; mcph validate output at workers 1, 4, 8: {}",
        if cli_same { "identical" } else { "differs" }
    ));
    println!("{}", outcome_line(&outcome));
    assert!(outcome.passed, "{}", outcome_line(&outcome));
}
