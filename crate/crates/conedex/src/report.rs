//! Run reports: config echo, JSON results, named checks and the exit status.

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::table::Table;
use crate::{EXIT_IDENTITY, EXIT_OK};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: ExperimentConfig,
    pub results: Value,
    pub checks: Vec<CheckOutcome>,
    pub status: Status,
    /// Only with `--timing`, so that default reports are byte-identical across runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    #[serde(skip)]
    pub table: Option<Table>,
}

impl RunReport {
    pub fn new(command: &str, config: &ExperimentConfig, results: Value, checks: Vec<CheckOutcome>, table: Option<Table>) -> Self {
        let status = if checks.iter().all(|c| c.passed) { Status::Pass } else { Status::Fail };
        Self { command: command.into(), config: config.clone(), results, checks, status, wall_time_s: None, table }
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => EXIT_OK,
            Status::Fail => EXIT_IDENTITY,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
