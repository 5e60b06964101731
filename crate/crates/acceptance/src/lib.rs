//! Bookkeeping for the acceptance run: each criterion collects named checks,
//! is timed against its budget, and prints one verdict line.

use std::error::Error;
use std::time::{Duration, Instant};

pub type BoxError = Box<dyn Error + Send + Sync>;

/// Checks recorded while a criterion runs.
#[derive(Debug, Default)]
pub struct Verdict {
    checks: Vec<(bool, String)>,
}

impl Verdict {
    pub fn check(&mut self, passed: bool, note: impl Into<String>) {
        self.checks.push((passed, note.into()));
    }

    /// Records a measured value against a closed interval.
    pub fn within(&mut self, what: &str, value: f64, lo: f64, hi: f64) {
        self.check(
            value >= lo && value <= hi,
            format!("{what} = {value:.6} in [{lo}, {hi}]"),
        );
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.0)
    }

    pub fn notes(&self) -> impl Iterator<Item = (bool, &str)> {
        self.checks.iter().map(|(p, n)| (*p, n.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub elapsed: Duration,
}

/// Comma-separated criterion ids; when set, only those run.
pub const ONLY_ENV: &str = "HOROLAB_ACCEPTANCE_ONLY";

#[derive(Debug, Default)]
pub struct Suite {
    outcomes: Vec<Outcome>,
    only: Option<Vec<String>>,
}

impl Suite {
    /// A suite restricted by [`ONLY_ENV`] when it is set.
    pub fn from_env() -> Self {
        let only = std::env::var(ONLY_ENV).ok().map(|v| {
            v.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        });
        Suite {
            outcomes: Vec::new(),
            only,
        }
    }

    /// Runs one criterion; an error or an exceeded time budget fails it.
    pub fn criterion<F>(&mut self, id: &str, title: &str, budget: Duration, body: F)
    where
        F: FnOnce(&mut Verdict) -> Result<(), BoxError>,
    {
        if self.only.as_ref().is_some_and(|o| !o.iter().any(|s| s == id)) {
            println!("SKIP criterion {id:>3}: {title}");
            return;
        }
        let start = Instant::now();
        let mut v = Verdict::default();
        if let Err(e) = body(&mut v) {
            v.check(false, format!("error: {e}"));
        }
        let elapsed = start.elapsed();
        v.check(
            elapsed <= budget,
            format!("runtime {:.2} s within {} s", elapsed.as_secs_f64(), budget.as_secs()),
        );
        for (ok, note) in v.notes() {
            println!("      {} {note}", if ok { "ok  " } else { "FAIL" });
        }
        let passed = v.passed();
        println!(
            "{} criterion {id:>3}: {title} ({:.2} s)",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        self.outcomes.push(Outcome {
            id: id.into(),
            title: title.into(),
            passed,
            elapsed,
        });
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    /// Prints the summary and reports whether every criterion passed.
    pub fn finish(&self) -> bool {
        let failed: Vec<&str> = self
            .outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.id.as_str())
            .collect();
        println!(
            "acceptance: {} of {} criteria passed",
            self.outcomes.len() - failed.len(),
            self.outcomes.len()
        );
        if !failed.is_empty() {
            println!("failed: {}", failed.join(", "));
        }
        failed.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_verdict_fails() {
        assert!(!Verdict::default().passed());
    }

    #[test]
    fn errors_and_failed_checks_fail_the_criterion() {
        let mut s = Suite::default();
        s.criterion("a", "ok", Duration::from_secs(60), |v| {
            v.within("x", 1.0, 0.0, 2.0);
            Ok(())
        });
        s.criterion("b", "bad value", Duration::from_secs(60), |v| {
            v.within("x", 3.0, 0.0, 2.0);
            Ok(())
        });
        s.criterion("c", "error", Duration::from_secs(60), |_| Err("boom".into()));
        let passed: Vec<bool> = s.outcomes().iter().map(|o| o.passed).collect();
        assert_eq!(passed, [true, false, false]);
        assert!(!s.finish());
    }
}
