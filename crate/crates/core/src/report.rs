//! Deterministic check reports shared by all validators.

use std::fmt;

use crate::novikov::MonoidElt;

/// One failed identity: which check, at which component, on which inputs.
/// Violations are data, not errors; reports sort them by (check, k, beta,
/// inputs) so output is deterministic under parallel evaluation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub check: String,
    pub k: usize,
    pub beta: MonoidElt,
    pub inputs: Vec<String>,
    pub residual: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: k={} beta={} inputs=({}) residual: {}",
            self.check,
            self.k,
            self.beta,
            self.inputs.join(","),
            self.residual
        )
    }
}

/// A validator outcome: pass, or a sorted list of violations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CheckReport {
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn pass() -> Self {
        CheckReport { violations: Vec::new() }
    }

    pub fn from_violations(mut violations: Vec<Violation>) -> Self {
        violations.sort();
        violations.dedup();
        CheckReport { violations }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merged(mut self, other: CheckReport) -> CheckReport {
        self.violations.extend(other.violations);
        CheckReport::from_violations(self.violations)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            writeln!(f, "pass")
        } else {
            for v in &self.violations {
                writeln!(f, "violation {v}")?;
            }
            Ok(())
        }
    }
}
