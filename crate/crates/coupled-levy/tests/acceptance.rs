use std::io::Write;

use coupled_levy::acceptance::{run_all, N_CRITERIA};

/// Criterion 5 asks for the infimum of the two-point sign-change roots over
/// a gamma grid to sit within 1e-3 of 0.7071. The grid infimum is 0.708487
/// (at gamma = 0.01); only the gamma -> 0 limit reaches 1/sqrt(2). It is
/// evaluated at its stated tolerance and reported as FAIL.
const KNOWN_FAILURES: [usize; 1] = [5];

#[test]
fn acceptance_suite() {
    let results = run_all(20_240_601);
    assert_eq!(results.len(), N_CRITERIA);
    // Written to the raw handle so the report shows without --nocapture.
    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    for r in &results {
        writeln!(out, "{}", r.line()).unwrap();
    }
    let passed = results.iter().filter(|r| r.passed).count();
    writeln!(out, "{passed}/{N_CRITERIA} criteria passed").unwrap();
    drop(out);
    for r in &results {
        if KNOWN_FAILURES.contains(&r.id) {
            assert!(!r.passed, "criterion {} now passes; update KNOWN_FAILURES", r.id);
            assert!(r.detail.contains("inf root 0.708487"), "{}", r.detail);
        } else {
            assert!(r.passed, "{}", r.line());
        }
    }
}
