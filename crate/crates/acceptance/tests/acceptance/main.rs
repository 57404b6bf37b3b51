//! One PASS / FAIL / NOT RUN line per acceptance criterion. Exits non-zero
//! if any criterion fails.

mod augmentation;
mod belief;
mod codec;
mod datasets;
mod gate;
mod learning;
mod metrics;
mod replay;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

pub enum Outcome {
    Pass(String),
    Fail(String),
    NotRun(String),
}

pub type Check = fn() -> Outcome;

/// Turn a failed assertion into a FAIL line instead of aborting the run.
fn guarded(check: Check) -> Outcome {
    match catch_unwind(AssertUnwindSafe(check)) {
        Ok(o) => o,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Outcome::Fail(msg)
        }
    }
}

pub fn within(limit: Duration, elapsed: Duration, detail: String) -> Outcome {
    if elapsed <= limit {
        Outcome::Pass(format!("{detail}; {:.2?} (limit {limit:?})", elapsed))
    } else {
        Outcome::Fail(format!("{detail}; took {:.2?}, limit {limit:?}", elapsed))
    }
}

fn main() {
    let checks: [(&str, Check); 8] = [
        ("metric-oracles", metrics::check),
        ("gate-arithmetic", gate::check),
        ("codec-round-trip", codec::check),
        ("replay-determinism", replay::check),
        ("always-replace-equals-rule-update", belief::check),
        ("toy-learning", learning::check),
        ("released-datasets", datasets::check),
        ("augmentation-integrity", augmentation::check),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let line = match guarded(check) {
            Outcome::Pass(d) => format!("PASS {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                format!("FAIL {name}: {d}")
            }
            Outcome::NotRun(d) => format!("NOT RUN {name}: {d}"),
        };
        println!("{line}");
        eprintln!("  ({name} finished in {:.2?})", start.elapsed());
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
