use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Tight,
    Fail,
    Marginal,
}

impl Status {
    /// Classifies `ratio ≤ 1` with relative slack `tol`.
    ///
    /// A ratio within `tol` of one is `Tight` regardless of side.
    pub fn from_ratio(ratio: f64, tol: f64) -> Status {
        if !ratio.is_finite() {
            Status::Fail
        } else if (ratio - 1.0).abs() <= tol {
            Status::Tight
        } else if ratio <= 1.0 + tol {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    /// Classifies `lhs ≤ rhs` with absolute slack `slack`.
    pub fn from_slack(lhs: f64, rhs: f64, slack: f64) -> Status {
        if !(lhs.is_finite() && rhs.is_finite()) {
            Status::Fail
        } else if (lhs - rhs).abs() <= slack {
            Status::Tight
        } else if lhs <= rhs {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn is_ok(self) -> bool {
        matches!(self, Status::Pass | Status::Tight)
    }
}

/// One named inequality check with the slack it was decided at.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    /// Distance to the boundary (positive = satisfied).
    pub slack: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Verdict {
    pub fn new(name: impl Into<String>, status: Status, slack: f64) -> Self {
        Verdict {
            name: name.into(),
            status,
            slack,
            witness: None,
        }
    }

    pub fn with_witness(mut self, witness: impl Into<String>) -> Self {
        self.witness = Some(witness.into());
        self
    }
}
