//! Statistical and algebraic verification: GNZ/Mecke identities, detailed-balance residuals,
//! equilibrium invariance of the dynamics and the two generator scaling limits.

mod balance;
mod gnz;
mod invariance;
mod limits;

pub use balance::{detailed_balance_suite, BalanceSuite, BALANCE_THRESHOLD};
pub use gnz::{gnz_test, GnzProfile, GnzTestFunction};
pub use invariance::{invariance_test, Dynamics, InvarianceOutcome, InvarianceSetup};
pub use limits::{
    curve_passes, diffusion_limit_experiment, glauber_limit_experiment, write_limit_csv,
    DiffusionLimitSetup, GlauberLimitSetup, LimitCurve, LimitRow, CSV_HEADER,
};

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

/// Default width of statistical gates in standard errors.
pub const DEFAULT_SIGMAS: f64 = 3.0;

/// Outcome of one verification. `passed` is `statistic <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub name: String,
    pub passed: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    /// Wall-clock time; excluded from the JSON form so reports are reproducible.
    #[serde(skip)]
    pub runtime: Duration,
    pub details: BTreeMap<String, f64>,
}

impl VerificationReport {
    pub fn new(name: impl Into<String>, statistic: f64, threshold: f64, stderr: f64, samples: usize, seed: u64) -> Self {
        Self {
            name: name.into(),
            passed: statistic <= threshold,
            statistic,
            threshold,
            stderr,
            samples,
            seed,
            runtime: Duration::ZERO,
            details: BTreeMap::new(),
        }
    }

    pub fn with_detail(mut self, key: impl Into<String>, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }

    pub fn with_runtime(mut self, runtime: Duration) -> Self {
        self.runtime = runtime;
        self
    }

    /// Marks the report failed without changing the statistic, for side conditions that
    /// are part of the gate.
    pub fn require(mut self, condition: bool, key: &str) -> Self {
        self.details.insert(key.to_string(), if condition { 1.0 } else { 0.0 });
        self.passed &= condition;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only plain data")
    }
}

pub fn all_passed(reports: &[VerificationReport]) -> bool {
    reports.iter().all(|r| r.passed)
}
