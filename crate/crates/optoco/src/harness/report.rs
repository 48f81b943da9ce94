//! The verification report: one row per applicable bound or identity, with
//! the measured quantity, the evaluated bound, and a pass/fail status.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The bound's hypothesis does not hold for this run; the row is shown
    /// but not counted as a failure.
    PreconditionUnmet,
    /// Informational row, not asserted (e.g. doubling-mode bounds).
    Reported,
}

impl CheckStatus {
    fn label(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::PreconditionUnmet => "PRECONDITION-UNMET",
            CheckStatus::Reported => "REPORTED",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportRow {
    pub check: String,
    pub status: CheckStatus,
    pub measured: f64,
    pub bound: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub rows: Vec<ReportRow>,
}

impl VerificationReport {
    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    /// Adds a `measured <= bound` row, gated on a precondition.
    pub fn push_bound(
        &mut self,
        check: &str,
        measured: f64,
        bound: f64,
        precondition: bool,
        detail: String,
    ) {
        let status = if !precondition {
            CheckStatus::PreconditionUnmet
        } else if measured <= bound {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        self.rows.push(ReportRow { check: check.to_string(), status, measured, bound, detail });
    }

    /// Adds an informational row.
    pub fn push_reported(&mut self, check: &str, measured: f64, bound: f64, detail: String) {
        self.rows.push(ReportRow {
            check: check.to_string(),
            status: CheckStatus::Reported,
            measured,
            bound,
            detail,
        });
    }

    pub fn passed(&self) -> bool {
        !self.rows.iter().any(|r| r.status == CheckStatus::Fail)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&format!(
                "{:<18} {}: measured {:.6e} vs bound {:.6e}",
                r.status.label(),
                r.check,
                r.measured,
                r.bound
            ));
            if !r.detail.is_empty() {
                out.push_str(&format!("  [{}]", r.detail));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_rows_gate_on_precondition() {
        let mut rep = VerificationReport::default();
        rep.push_bound("a", 1.0, 2.0, true, String::new());
        rep.push_bound("b", 3.0, 2.0, true, String::new());
        rep.push_bound("c", 3.0, 2.0, false, String::new());
        assert_eq!(rep.rows[0].status, CheckStatus::Pass);
        assert_eq!(rep.rows[1].status, CheckStatus::Fail);
        assert_eq!(rep.rows[2].status, CheckStatus::PreconditionUnmet);
        assert!(!rep.passed());
    }

    #[test]
    fn reported_rows_never_fail() {
        let mut rep = VerificationReport::default();
        rep.push_reported("info", 10.0, 1.0, "doubling".into());
        assert!(rep.passed());
        assert!(rep.render().contains("REPORTED"));
    }
}
