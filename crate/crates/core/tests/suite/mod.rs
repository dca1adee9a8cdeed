#![allow(dead_code)]

//! Contract checks shared by the per-topic test targets and the acceptance report.
//!
//! Every check returns `Ok(summary)` or `Err(reason)` instead of asserting, so
//! the acceptance target can print one line per criterion and keep going.

pub type Outcome = Result<String, String>;

macro_rules! require {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub mod fd;
pub mod grad;
pub mod icm;
pub mod ppo;
pub mod protocol;
pub mod render;
pub mod stats;
pub mod world;

/// Runs every check and joins the summaries; the first failure wins.
pub fn all(checks: &[(&str, fn() -> Outcome)]) -> Outcome {
    let mut parts = Vec::new();
    for (name, check) in checks {
        let summary = check().map_err(|e| format!("{name}: {e}"))?;
        parts.push(format!("{name}: {summary}"));
    }
    Ok(parts.join("; "))
}

/// Turns a proptest failure into an `Err` with the minimal counterexample.
pub fn run_property<S: proptest::strategy::Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), proptest::test_runner::TestCaseError>,
) -> Result<(), String> {
    let config = proptest::test_runner::Config { cases, failure_persistence: None, ..Default::default() };
    let rng = proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha);
    let mut runner = proptest::test_runner::TestRunner::new_with_rng(config, rng);
    runner.run(&strategy, test).map_err(|e| e.to_string())
}
