//! Pass/fail bookkeeping for the acceptance run.

use std::io::Write;

/// Writes to the process stdout directly; the test harness only captures
/// the print macros, and these lines should show either way.
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

/// Collects one line per criterion and prints it as it is recorded.
#[derive(Debug, Default)]
pub struct Report {
    failed: Vec<String>,
    passed: usize,
    quiet: bool,
}

impl Report {
    pub fn new() -> Self {
        // Starts on a fresh line after the harness's "test ... " prefix.
        emit("");
        Self::default()
    }

    /// Records without printing.
    pub fn quiet() -> Self {
        Self {
            quiet: true,
            ..Self::default()
        }
    }

    pub fn record(&mut self, id: &str, ok: bool, detail: impl AsRef<str>) {
        let tag = if ok { "PASS" } else { "FAIL" };
        if !self.quiet {
            emit(&format!("[{tag}] {id}: {}", detail.as_ref()));
        }
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id.to_string());
        }
    }

    pub fn failed(&self) -> &[String] {
        &self.failed
    }

    pub fn passed(&self) -> usize {
        self.passed
    }

    /// Panics listing the failed criteria, if any.
    pub fn finish(&self) {
        emit(&format!(
            "acceptance: {} passed, {} failed",
            self.passed,
            self.failed.len()
        ));
        assert!(
            self.failed.is_empty(),
            "failed criteria: {}",
            self.failed.join(", ")
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let mut r = Report::quiet();
        r.record("a", true, "x");
        r.record("b", false, "y");
        assert_eq!(r.passed(), 1);
        assert_eq!(r.failed(), ["b".to_string()]);
    }
}
