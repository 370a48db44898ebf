//! Pass/fail bookkeeping for the acceptance run.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

/// Runs `f` and returns its value with the wall time it took.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Line {
    pub fn render(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        format!("{tag}  {}: {}", self.name, self.detail)
    }
}

/// Criteria decide the outcome; supporting checks are reported only.
#[derive(Debug, Default)]
pub struct Tally {
    criteria: Vec<Line>,
    supporting: Vec<Line>,
}

impl Tally {
    pub fn criterion(&mut self, name: &str, pass: bool, detail: String) {
        let line = Line {
            name: name.into(),
            pass,
            detail,
        };
        println!("{}", line.render());
        self.criteria.push(line);
    }

    pub fn supporting(&mut self, name: &str, pass: bool, detail: String) {
        let line = Line {
            name: name.into(),
            pass,
            detail,
        };
        println!("  {}", line.render());
        self.supporting.push(line);
    }

    pub fn all_criteria_pass(&self) -> bool {
        self.criteria.iter().all(|l| l.pass)
    }

    pub fn summary(&self) -> String {
        let count = |ls: &[Line]| ls.iter().filter(|l| l.pass).count();
        let mut s = format!(
            "{}/{} criteria passed, {}/{} supporting checks passed",
            count(&self.criteria),
            self.criteria.len(),
            count(&self.supporting),
            self.supporting.len()
        );
        for l in self.criteria.iter().filter(|l| !l.pass) {
            let _ = write!(s, "\nfailed criterion: {}", l.name);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_counts_and_names_failures() {
        let mut t = Tally::default();
        t.criterion("a", true, "ok".into());
        t.criterion("b", false, "bad".into());
        t.supporting("c", true, "ok".into());
        assert!(!t.all_criteria_pass());
        let s = t.summary();
        assert!(s.starts_with("1/2 criteria passed, 1/1 supporting"));
        assert!(s.ends_with("failed criterion: b"));
    }
}
