use lemnilab_core::Error as CoreError;
use serde_json::{json, Value};
use thiserror::Error;

use crate::SCHEMA;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("spec error: {0}")]
    Spec(String),
    #[error(transparent)]
    Numerical(#[from] CoreError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn spec(msg: impl Into<String>) -> Self {
        CliError::Spec(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for unreadable or invalid specs, 3 for numerical failures, 4 for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    /// Machine-readable diagnostic written to stderr.
    pub fn to_json(&self) -> Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        if let CliError::Numerical(CoreError::NearCriticalValue { t, critical, band }) = self {
            body["t"] = json!(t);
            body["critical"] = json!(critical);
            body["band"] = json!(band);
        }
        json!({ "schema": SCHEMA, "error": body })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Spec(_) => "SpecError",
            CliError::Io { .. } => "IoError",
            CliError::Numerical(e) => core_kind(e),
        }
    }
}

pub fn core_kind(e: &CoreError) -> &'static str {
    match e {
        CoreError::InvalidInput(_) => "InvalidInput",
        CoreError::DegreeTooLarge(_) => "DegreeTooLarge",
        CoreError::NonConvergence { .. } => "NonConvergence",
        CoreError::DegenerateDerivative => "DegenerateDerivative",
        CoreError::DivisionBySingular => "DivisionBySingular",
        CoreError::UnknownFamily(_) => "UnknownFamily",
        CoreError::OrderOverflow { .. } => "OrderOverflow",
        CoreError::SeedEscape => "SeedEscape",
        CoreError::NearCriticalValue { .. } => "NearCriticalValue",
        CoreError::TraceDivergence(_) => "TraceDivergence",
        CoreError::PoleOnContour => "PoleOnContour",
        CoreError::MixedIntervals(_) => "MixedIntervals",
        CoreError::TailTooFat { .. } => "TailTooFat",
        CoreError::DivergesAtOne(_) => "DivergesAtOne",
        CoreError::SlowConvergence(_) => "SlowConvergence",
    }
}
