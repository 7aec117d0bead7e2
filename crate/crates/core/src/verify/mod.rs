//! Executable checks of the trees' distributional guarantees.
//!
//! Each check returns [`Report`]s whose `pass` field compares `statistic`
//! against `critical`. Harness randomness comes from ChaCha8 seeded with a
//! caller-provided harness seed, never from the hashing module, so every
//! report is reproducible.
//!
//! Suites run at a family-wise `alpha` split evenly over their tests
//! (Bonferroni). [`run_with_retry`] reruns a failing suite under a second
//! harness seed; a test fails only if it fails under both.

mod checks;
mod ideal;
mod stats;

use serde::Serialize;

pub use checks::{
    check_ideal_equivalence, check_kwise_theorem, check_marginal_theorem, check_split_theorem, fit_report,
    rw_joint_enumeration,
};
pub use ideal::IdealDst;
pub use stats::{
    chi_square, chi_square_critical, ks_critical, ks_statistic, mean, normal_critical, pearson, spearman,
    theoretical_cdf, walk_cells, walk_pmf, z_score,
};

use crate::error::Result;
use crate::hashing::derive_seed;

pub const DEFAULT_ALPHA: f64 = 0.01;

/// Critical `|z|` for Monte-Carlo moment checks.
pub const MOMENT_Z: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub test: String,
    pub params: serde_json::Value,
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

impl Report {
    pub fn new(test: impl Into<String>, params: serde_json::Value, statistic: f64, critical: f64) -> Self {
        Report {
            test: test.into(),
            params,
            statistic,
            critical,
            pass: statistic <= critical,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub first: Vec<Report>,
    /// Present only when the first run had failures.
    pub retry: Option<Vec<Report>>,
    /// Tests that failed under both harness seeds.
    pub failed: Vec<String>,
    pub pass: bool,
}

/// Runs `suite(seed)` and, if anything fails, `suite(seed')` for a derived
/// second seed. Reports are matched by position.
pub fn run_with_retry<F>(seed: u64, suite: F) -> Result<SuiteOutcome>
where
    F: Fn(u64) -> Result<Vec<Report>>,
{
    let first = suite(seed)?;
    if first.iter().all(|r| r.pass) {
        return Ok(SuiteOutcome {
            first,
            retry: None,
            failed: Vec::new(),
            pass: true,
        });
    }
    let retry = suite(derive_seed(seed, 0x5eed))?;
    let failed: Vec<String> = first
        .iter()
        .zip(&retry)
        .filter(|(a, b)| !a.pass && !b.pass)
        .map(|(a, _)| a.test.clone())
        .collect();
    Ok(SuiteOutcome {
        pass: failed.is_empty(),
        first,
        retry: Some(retry),
        failed,
    })
}

/// Per-test level for `tests` simultaneous tests at family-wise `alpha`.
pub fn bonferroni(alpha: f64, tests: usize) -> f64 {
    alpha / tests.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use std::cell::Cell;

    #[test]
    fn report_json_shape() {
        let r = Report::new("ks", json!({"n": 3}), 0.1, 0.2);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v, json!({"test": "ks", "params": {"n": 3}, "statistic": 0.1, "critical": 0.2, "pass": true}));
    }

    #[test]
    fn retry_policy() {
        let calls = Cell::new(0);
        let out = run_with_retry(1, |s| {
            calls.set(calls.get() + 1);
            let flaky = if s == 1 { 1.0 } else { 0.0 };
            Ok(vec![
                Report::new("stable", json!({}), 0.0, 0.5),
                Report::new("flaky", json!({}), flaky, 0.5),
                Report::new("broken", json!({}), 1.0, 0.5),
            ])
        })
        .unwrap();
        assert_eq!(calls.get(), 2);
        assert_eq!(out.failed, vec!["broken".to_string()]);
        assert!(!out.pass);

        let out = run_with_retry(1, |_| Ok(vec![Report::new("ok", json!({}), 0.0, 1.0)])).unwrap();
        assert!(out.pass && out.retry.is_none());
        assert_eq!(bonferroni(0.01, 4), 0.0025);
    }
}
