use serde::Serialize;
use std::fmt;

/// Outcome of one bound check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Failure of a bound known to disagree with its own derivation; not a
    /// hard failure (see [`crate::analysis::duality_report`]).
    Flag,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Flag => "FLAG",
        })
    }
}

/// A measured quantity against a predicted upper bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    /// Identifies the inequality that was evaluated.
    pub formula: String,
    pub measured: f64,
    pub bound: f64,
    /// `bound − measured`.
    pub margin: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl BoundReport {
    /// Pass iff `measured ≤ bound`.
    pub fn upper(formula: impl Into<String>, measured: f64, bound: f64) -> Self {
        let margin = bound - measured;
        let status = if margin >= 0.0 {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            formula: formula.into(),
            measured,
            bound,
            margin,
            status,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Pass or Flag.
    pub fn acceptable(&self) -> bool {
        self.status != Status::Fail
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4}  {:<40} measured {:>14.6e}  bound {:>14.6e}  margin {:>+14.6e}",
            self.status, self.formula, self.measured, self.bound, self.margin
        )?;
        if !self.detail.is_empty() {
            write!(f, "  ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Render reports as an aligned plain-text table.
pub fn table(reports: &[BoundReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}
