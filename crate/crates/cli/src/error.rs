use std::fmt;

use healthgrid_core::grid::{ScenarioParseError, ValidationError, Violation};
use healthgrid_core::policy::PolicyError;
use healthgrid_core::SimError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: malformed request, invalid scenario or policy.
    Invalid,
    NotFound,
    /// The job exists but has not finished.
    NotDone,
    Internal,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationBody {
    pub message: String,
    #[serde(flatten)]
    pub violation: Violation,
}

/// Error shared by both surfaces; serializes to `{code, message, violations}`.
#[derive(Debug, Clone, Serialize)]
pub struct AppError {
    #[serde(skip)]
    pub kind: ErrorKind,
    pub code: String,
    pub message: String,
    pub violations: Vec<ViolationBody>,
}

impl AppError {
    pub fn new(kind: ErrorKind, code: &str, message: impl Into<String>) -> Self {
        Self {
            kind,
            code: code.to_string(),
            message: message.into(),
            violations: Vec::new(),
        }
    }

    pub fn invalid(code: &str, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Invalid, code, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::NotFound, "not_found", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Internal, "internal", message)
    }

    /// Process exit status for the command line.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Invalid | ErrorKind::NotFound => 1,
            ErrorKind::NotDone | ErrorKind::Internal => 2,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)?;
        for v in &self.violations {
            write!(f, "\n  - {}", v.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for AppError {}

impl From<ValidationError> for AppError {
    fn from(e: ValidationError) -> Self {
        let mut err = AppError::invalid("invalid_scenario", format!("scenario has {} violation(s)", e.violations.len()));
        err.violations = e
            .violations
            .into_iter()
            .map(|v| ViolationBody {
                message: v.to_string(),
                violation: v,
            })
            .collect();
        err
    }
}

impl From<ScenarioParseError> for AppError {
    fn from(e: ScenarioParseError) -> Self {
        match e {
            ScenarioParseError::Json(e) => AppError::invalid("malformed_scenario", e.to_string()),
            ScenarioParseError::Invalid(v) => v.into(),
        }
    }
}

impl From<PolicyError> for AppError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::NonConvergence { .. } => AppError::internal(e.to_string()),
            _ => AppError::invalid("invalid_policy", e.to_string()),
        }
    }
}

impl From<SimError> for AppError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Validation(v) => v.into(),
            SimError::Policy(p) => p.into(),
            SimError::EmptyHorizon => AppError::invalid("invalid_request", e.to_string()),
            SimError::Dispatch { .. } => AppError::internal(e.to_string()),
        }
    }
}
