//! Runs every acceptance check at the default configuration, one line per check.

use hphase_cli::checks::{registry, run_suite, Context};
use hphase_cli::RunConfig;

/// Metrics that fail at the default configuration for a documented reason.
/// The reduced-symbol reconstruction at k_max = 8 is limited by the ring cutoff's
/// coefficient decay; the decay half of the same check must still pass.
const KNOWN_FAILURES: &[(&str, &str)] = &[("reduced-symbols", "reconstruction_k8")];

#[test]
fn acceptance() {
    let ctx = Context::new(RunConfig::default());
    let reports = run_suite("*", &ctx);
    assert_eq!(reports.len(), registry().len());
    for r in &reports {
        println!("{}", r.summary_line());
    }
    let mut unexpected = Vec::new();
    for r in &reports {
        if let Some(e) = &r.error {
            unexpected.push(format!("{}: {e}", r.name));
        }
        for m in r.metrics.iter().filter(|m| !m.passed) {
            if !KNOWN_FAILURES.contains(&(r.name.as_str(), m.name.as_str())) {
                unexpected.push(format!("{}.{} = {:e}", r.name, m.name, m.value));
            }
        }
    }
    let reduced = reports.iter().find(|r| r.name == "reduced-symbols").unwrap();
    assert!(reduced.metric("decay_exponent").is_some_and(|m| m.passed));
    assert!(unexpected.is_empty(), "failing metrics: {unexpected:?}");
}
