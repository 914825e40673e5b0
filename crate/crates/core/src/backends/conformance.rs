//! Protocol conformance checks runnable against any [`Summarizer`].
//!
//! Used by this crate's tests against the mock, subprocess and HTTP
//! transports, and by `medsum conformance` against external services.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{summarize_batch, BackendError, SummarizeRequest, Summarizer};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConformanceReport {
    pub checks: Vec<CheckResult>,
}

impl ConformanceReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn batch(prefix: &str, n: usize) -> Vec<SummarizeRequest> {
    (0..n)
        .map(|i| {
            SummarizeRequest::new(
                format!("{prefix}-{i}"),
                format!("[doctor] How are you feeling today? [patient] Request {i}. I have had a cough."),
                32,
            )
        })
        .collect()
}

fn ids_match(
    reqs: &[SummarizeRequest],
    result: &Result<Vec<super::SummarizeResponse>, BackendError>,
) -> Result<(), String> {
    let resps = result.as_ref().map_err(|e| e.to_string())?;
    let want: BTreeSet<_> = reqs.iter().map(|r| r.id.as_str()).collect();
    let got: BTreeSet<_> = resps.iter().map(|r| r.id.as_str()).collect();
    if resps.len() != reqs.len() || want != got {
        return Err(format!("requested {want:?}, answered {got:?}"));
    }
    Ok(())
}

fn check(name: &'static str, outcome: Result<(), String>) -> CheckResult {
    CheckResult {
        name,
        passed: outcome.is_ok(),
        detail: outcome.err().unwrap_or_default(),
    }
}

pub fn run_conformance(backend: &dyn Summarizer) -> ConformanceReport {
    let mut checks = Vec::new();

    checks.push(check(
        "empty batch",
        match summarize_batch(backend, &[]) {
            Ok(r) if r.is_empty() => Ok(()),
            Ok(r) => Err(format!("{} responses to an empty batch", r.len())),
            Err(e) => Err(e.to_string()),
        },
    ));

    let one = batch("single", 1);
    checks.push(check(
        "single request",
        ids_match(&one, &backend.call(&one)),
    ));

    let eight = batch("batch", 8);
    checks.push(check(
        "batch of 8 id bijection",
        ids_match(&eight, &backend.call(&eight)),
    ));

    let (a, b) = (batch("conc-a", 3), batch("conc-b", 3));
    let (ra, rb) = std::thread::scope(|s| {
        let ha = s.spawn(|| backend.call(&a));
        let hb = s.spawn(|| backend.call(&b));
        (ha.join().expect("worker"), hb.join().expect("worker"))
    });
    checks.push(check(
        "2 concurrent requests",
        ids_match(&a, &ra).and_then(|_| ids_match(&b, &rb)),
    ));

    let mut long = batch("long", 1);
    long[0].input = "[patient] word ".repeat(4000);
    checks.push(check(
        "over-long input accepted",
        ids_match(&long, &backend.call(&long)),
    ));

    let mut prefixed = batch("prefix", 1);
    prefixed[0].prefix = Some("The patient".into());
    checks.push(check(
        "optional prefix field",
        ids_match(&prefixed, &backend.call(&prefixed)),
    ));

    ConformanceReport { checks }
}
