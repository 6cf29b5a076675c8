use serde::Serialize;

use crate::ingest::SimError;
use crate::methodology::MethodologyError;
use crate::timeseries::TimeseriesError;
use crate::waste::WasteError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    NotFound,
    /// An analysis precondition or an invalid argument.
    Validation,
    BadRequest,
    Unauthorized,
    Io,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceError {
    pub kind: ErrorKind,
    pub code: String,
    pub message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: &'a str,
}

impl ServiceError {
    pub fn new(kind: ErrorKind, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind, code: code.into(), message: message.into() }
    }

    pub fn validation(code: &str, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Validation, code, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Io, "Io", message)
    }

    pub fn body(&self) -> String {
        super::render_json(&ErrorBody { error: &self.code, message: &self.message })
    }

    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Io => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for ServiceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ServiceError {}

impl From<TimeseriesError> for ServiceError {
    fn from(e: TimeseriesError) -> Self {
        let kind = match &e {
            TimeseriesError::UnknownBuilding(_) => ErrorKind::NotFound,
            TimeseriesError::Io(_) | TimeseriesError::Corrupt { .. } => ErrorKind::Io,
            _ => ErrorKind::Validation,
        };
        Self::new(kind, e.code(), e.to_string())
    }
}

impl From<MethodologyError> for ServiceError {
    fn from(e: MethodologyError) -> Self {
        match e {
            MethodologyError::Timeseries(t) => t.into(),
            MethodologyError::UnknownBuilding(_) => Self::new(ErrorKind::NotFound, e.code(), e.to_string()),
            e => Self::validation(e.code(), e.to_string()),
        }
    }
}

impl From<WasteError> for ServiceError {
    fn from(e: WasteError) -> Self {
        match e {
            WasteError::Timeseries(t) => t.into(),
            e => Self::validation(e.code(), e.to_string()),
        }
    }
}

impl From<SimError> for ServiceError {
    fn from(e: SimError) -> Self {
        Self::validation(e.code(), e.to_string())
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}
