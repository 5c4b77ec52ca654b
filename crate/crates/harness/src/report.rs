//! Suite reports. A verdict is a pure function of the numbers stored next to
//! it, so any report can be re-graded with [`CheckRecord::grade`].

use std::path::Path;

use gaussbm::entropy::EntropyCurveReport;
use gaussbm::Verdict;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Suite;
use crate::HarnessError;

/// How the stored value is compared with the tolerance. `margin` below is
/// `sigmas · std_error`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `gap ≥ −(tolerance + margin)`; inconclusive within `slack` below that.
    GapNonnegative,
    /// `gap − margin ≥ −tolerance`; inconclusive when only `gap + margin`
    /// clears it.
    GapConfirmed,
    /// Expected-negative check: `gap + margin < −tolerance`.
    GapNegative,
    /// Strict inequality: `gap − margin > tolerance`.
    GapPositive,
    /// `residual ≤ tolerance + margin`; inconclusive within `slack` above.
    ResidualBelow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub suite: Suite,
    /// SHA-256 of the canonical JSON of the check inputs.
    pub inputs_digest: String,
    pub criterion: Criterion,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub gap: Option<f64>,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub std_error: f64,
    pub sigmas: f64,
    pub slack: f64,
    pub verdict: Verdict,
    pub runtime_ms: u64,
    pub diagnostic: Option<String>,
}

impl CheckRecord {
    pub fn margin(&self) -> f64 {
        self.sigmas * self.std_error
    }

    /// The verdict implied by the stored numbers.
    pub fn grade(&self) -> Verdict {
        let value = match self.criterion {
            Criterion::ResidualBelow => self.residual,
            _ => self.gap,
        };
        let Some(v) = value.filter(|v| !v.is_nan()) else {
            return Verdict::Fail;
        };
        let (tol, m, s) = (self.tolerance, self.margin(), self.slack);
        let pick = |pass: bool, maybe: bool| {
            if pass {
                Verdict::Pass
            } else if maybe {
                Verdict::Inconclusive
            } else {
                Verdict::Fail
            }
        };
        match self.criterion {
            Criterion::GapNonnegative => pick(v >= -(tol + m), v >= -(tol + m + s)),
            Criterion::GapConfirmed => pick(v - m >= -tol, v + m + s >= -tol),
            Criterion::GapNegative => pick(v + m < -tol, v - m < -tol),
            Criterion::GapPositive => pick(v - m > tol, v + m + s > tol),
            Criterion::ResidualBelow => pick(v <= tol + m, v <= tol + m + s),
        }
    }
}

/// Numbers that feed a check; the record builder fills in the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub criterion: Criterion,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub gap: Option<f64>,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub std_error: f64,
    pub sigmas: f64,
    pub slack: f64,
    pub diagnostic: Option<String>,
}

impl Outcome {
    pub fn gap(criterion: Criterion, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            criterion,
            lhs: Some(lhs),
            rhs: Some(rhs),
            gap: Some(lhs - rhs),
            residual: None,
            tolerance,
            std_error: 0.0,
            sigmas: 0.0,
            slack: 0.0,
            diagnostic: None,
        }
    }

    /// A gap reported without its two sides.
    pub fn bare_gap(criterion: Criterion, gap: f64, tolerance: f64) -> Self {
        Self {
            lhs: None,
            rhs: None,
            gap: Some(gap),
            ..Self::gap(criterion, 0.0, 0.0, tolerance)
        }
    }

    pub fn residual(residual: f64, tolerance: f64) -> Self {
        Self {
            criterion: Criterion::ResidualBelow,
            lhs: None,
            rhs: None,
            gap: None,
            residual: Some(residual),
            tolerance,
            std_error: 0.0,
            sigmas: 0.0,
            slack: 0.0,
            diagnostic: None,
        }
    }

    pub fn with_error(mut self, std_error: f64, sigmas: f64) -> Self {
        self.std_error = std_error;
        self.sigmas = sigmas;
        self
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }

    pub fn with_diagnostic(mut self, d: impl Into<String>) -> Self {
        self.diagnostic = Some(d.into());
        self
    }
}

/// SHA-256 hex digest of `value` serialized through `serde_json::Value`,
/// whose maps keep keys sorted.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("check inputs serialize");
    let bytes = serde_json::to_vec(&v).expect("JSON values serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub suite: Suite,
    pub seed: u64,
    pub samples: usize,
    pub version: String,
    pub generator: String,
    /// Seconds since the Unix epoch; the only field that differs between
    /// identical runs apart from `runtime_ms`.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub name: String,
    pub curve: EntropyCurveReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub uncertain_fraction: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub metadata: Metadata,
    pub summary: Summary,
    pub checks: Vec<CheckRecord>,
    pub curves: Vec<CurveRecord>,
    pub measures: Vec<MeasureRecord>,
}

impl SuiteReport {
    pub fn summarize(checks: &[CheckRecord]) -> Summary {
        let mut s = Summary::default();
        for c in checks {
            match c.verdict {
                Verdict::Pass => s.pass += 1,
                Verdict::Fail => s.fail += 1,
                Verdict::Inconclusive => s.inconclusive += 1,
            }
        }
        s
    }

    pub fn passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Every stored verdict agrees with its numbers and names are unique.
    pub fn consistent(&self) -> bool {
        let mut names: Vec<&str> = self.checks.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        let unique = names.windows(2).all(|w| w[0] != w[1]);
        unique && self.checks.iter().all(|c| c.grade() == c.verdict)
    }

    /// The report with `timestamp` and every `runtime_ms` zeroed.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.metadata.timestamp = 0;
        for c in &mut r.checks {
            c.runtime_ms = 0;
        }
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn write_json(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| HarnessError::Io(path.to_path_buf(), e))
    }
}
