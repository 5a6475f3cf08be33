//! Property suites shared by the integration tests and the acceptance runner.

#![allow(dead_code)]

pub mod assurance;
pub mod extract;
pub mod flow;
pub mod sim;

use std::fmt::Debug;

use proptest::strategy::Strategy;
use proptest::test_runner::{Config, FailurePersistence, FileFailurePersistence, TestCaseError, TestRunner};

/// Runs `test` on `cases` inputs from `strategy`, shrinking any failure.
///
/// With a `source` file, failing seeds are saved next to it and replayed first.
pub fn run<S>(
    source: Option<&'static str>,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S: Strategy,
    S::Value: Debug,
{
    let mut config = Config::with_cases(cases);
    config.source_file = source;
    config.failure_persistence = source.map(|_| {
        Box::new(FileFailurePersistence::SourceParallel("proptest-regressions")) as Box<dyn FailurePersistence>
    });
    TestRunner::new(config).run(&strategy, test).map_err(|e| e.to_string())
}
