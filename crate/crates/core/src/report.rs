//! JSON-lines check records.

use std::io::Write;

use serde::{Serialize, Serializer};

use crate::car::Region;
use crate::error::Result;

/// How a check value is compared against its tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    /// `value ≤ tolerance` (residuals)
    AtMost,
    /// `value ≥ tolerance` (margins, slack)
    AtLeast,
    /// `value > tolerance` (strict gaps)
    GreaterThan,
}

/// One named check: `{check, value, tolerance, pass}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    #[serde(serialize_with = "finite_or_null")]
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(check: impl Into<String>, value: f64, tolerance: f64, comparison: Comparison) -> Self {
        let pass = match comparison {
            Comparison::AtMost => value <= tolerance,
            Comparison::AtLeast => value >= tolerance,
            Comparison::GreaterThan => value > tolerance,
        };
        Self { check: check.into(), value, tolerance, pass }
    }

    pub fn at_most(check: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(check, value, tolerance, Comparison::AtMost)
    }

    pub fn at_least(check: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(check, value, tolerance, Comparison::AtLeast)
    }

    pub fn greater_than(check: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(check, value, tolerance, Comparison::GreaterThan)
    }

    /// Signed distance to failure: positive when passing.
    pub fn slack(&self, comparison: Comparison) -> f64 {
        match comparison {
            Comparison::AtMost => self.tolerance - self.value,
            Comparison::AtLeast | Comparison::GreaterThan => self.value - self.tolerance,
        }
    }
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// Command-line report line: `{check, region, beta, value, tolerance, pass, seed}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRecord {
    pub check: String,
    pub region: Vec<usize>,
    #[serde(serialize_with = "finite_or_null")]
    pub beta: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
}

impl ReportRecord {
    pub fn from_check(check: &Check, region: &Region, beta: f64, seed: u64) -> Self {
        Self {
            check: check.check.clone(),
            region: region.sites(),
            beta,
            value: check.value,
            tolerance: check.tolerance,
            pass: check.pass,
            seed,
        }
    }
}

/// Writes one JSON object per line.
pub fn write_json_lines<W: Write, T: Serialize>(mut out: W, records: &[T]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
