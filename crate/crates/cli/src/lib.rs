//! Scenario runner for tethered visual-assistant planning.
//!
//! [`load_scenario`] reads and validates a scenario document, [`run`] plans
//! to the best viewpoint and writes the plan, risk report, tether trace and
//! geometry export into an output directory.

mod pipeline;
mod scenario;

use thiserror::Error;

use tetherplan_core::planner::PlanError;
use tetherplan_core::tether::TetherError;

pub use pipeline::{
    geometry_export, plan_document, risk_report, run, Effective, RunOptions, RunOutput, GEOMETRY_FILE, PLAN_FILE, PLAN_SCHEMA,
    RISK_REPORT_FILE, TETHER_TRACE_FILE,
};
pub use scenario::{load_scenario, parse_scenario, CandidateSpec, MapFormat, MapSpec, Scenario, ScenarioSpec, SCENARIO_SCHEMA};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("{path}: `{field}` {message}")]
    Invalid { path: String, field: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// What went wrong, as reported to callers of the binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    NoPath,
    Entanglement,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 1,
            ErrorCategory::NoPath => 2,
            ErrorCategory::Entanglement => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::NoPath => "no_path",
            ErrorCategory::Entanglement => "entanglement",
        }
    }
}

impl CliError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            CliError::Plan(PlanError::Tether(TetherError::Entanglement { .. })) => ErrorCategory::Entanglement,
            CliError::Plan(
                PlanError::Unreachable { .. } | PlanError::NoReachableCandidate(_) | PlanError::NoContactFreePath(_),
            ) => ErrorCategory::NoPath,
            _ => ErrorCategory::Config,
        }
    }

    /// One-line JSON error record.
    pub fn to_json(&self) -> String {
        let c = self.category();
        serde_json::json!({ "category": c.name(), "exit_code": c.exit_code(), "message": self.to_string() }).to_string()
    }
}
