//! Machine-readable verdicts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// One boolean outcome with the number that decided it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    /// Passes when `residual ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check { name: name.into(), passed: residual <= tolerance, residual: residual + 0.0, tolerance }
    }

    /// Passes when `residual > tolerance`, for expected failures.
    pub fn above(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check { name: name.into(), passed: residual > tolerance, residual: residual + 0.0, tolerance }
    }

    /// A verdict decided elsewhere, reported with its deciding residual.
    pub fn verdict(name: impl Into<String>, passed: bool, residual: f64, tolerance: f64) -> Self {
        // adding 0.0 turns -0.0 into 0.0
        Check { name: name.into(), passed, residual: residual + 0.0, tolerance }
    }
}

/// The deterministic part of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub passed: bool,
    pub checks: Vec<Check>,
    pub windows: BTreeMap<String, usize>,
    pub data: Value,
}

impl Payload {
    pub fn new(checks: Vec<Check>, windows: BTreeMap<String, usize>, data: Value) -> Self {
        Payload { passed: checks.iter().all(|c| c.passed), checks, windows, data }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerdictReport {
    pub command: String,
    pub parameters: Map<String, Value>,
    pub payload: Payload,
    pub wall_time_s: f64,
}

impl VerdictReport {
    pub fn passed(&self) -> bool {
        self.payload.passed
    }
}
