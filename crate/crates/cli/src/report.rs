use std::collections::BTreeMap;
use std::path::Path;

use birkhoff_core::Error;
use serde::Serialize;
use serde_json::Value;

use crate::args::Cli;
use crate::{exit_code, EXIT_FAILED, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ErrorReport {
    fn from(e: &Error) -> Self {
        let kind = match e {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Domain(_) => "domain",
            Error::NotInvertible { .. } => "not-invertible",
            Error::Truncation { .. } => "truncation",
            Error::Numeric { .. } => "numeric",
            Error::IndexObstruction(_) => "index-obstruction",
            Error::InvariantViolation(_) => "invariant-violation",
            Error::Parse { .. } => "parse",
        };
        Self {
            kind: kind.to_string(),
            message: e.to_string(),
        }
    }
}

/// Echo of the command and the options that influence its result.
#[derive(Debug, Clone, Serialize)]
pub struct Options {
    pub command: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
    pub tol: f64,
    pub band_cap: usize,
    pub samples: usize,
    pub order: usize,
    pub radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<i64>,
}

/// One report per input. `passed` is true iff every residual met its tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub options: Options,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    pub status: Status,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<&'static str, f64>>,
}

impl Report {
    pub(crate) fn new(cli: &Cli, input: Option<&Path>) -> Self {
        let c = &cli.common;
        let mut extra = BTreeMap::new();
        match &cli.command {
            crate::Command::Factor { mode } => {
                extra.insert("mode".into(), serde_json::to_value(mode).expect("mode serializes"));
            }
            crate::Command::Indices { shuffle: Some(seed) } => {
                extra.insert("shuffle".into(), Value::from(*seed));
            }
            crate::Command::Norms { weights, annuli } => {
                extra.insert("weights".into(), Value::from(weights.clone()));
                extra.insert("annuli".into(), Value::from(annuli.clone()));
            }
            crate::Command::Verify { factors } => {
                extra.insert("factors".into(), Value::from(factors.display().to_string()));
            }
            crate::Command::BchCheck { pairs, seed } => {
                extra.insert("pairs".into(), Value::from(*pairs));
                extra.insert("seed".into(), Value::from(*seed));
            }
            _ => {}
        }
        Self {
            options: Options {
                command: cli.command.name().to_string(),
                extra,
                tol: c.tol,
                band_cap: c.band_cap,
                samples: c.samples,
                order: c.order,
                radius: c.radius,
                bound: c.bound,
            },
            input: input.map(|p| p.display().to_string()),
            input_digest: None,
            status: Status::Ok,
            exit_code: EXIT_OK,
            error: None,
            result: None,
            passed: false,
            timings_ms: None,
        }
    }

    pub(crate) fn fail(mut self, err: &Error) -> Self {
        self.status = Status::Error;
        self.exit_code = exit_code(err);
        self.error = Some(err.into());
        self.passed = false;
        self
    }

    pub(crate) fn succeed(mut self, result: Value, passed: bool) -> Self {
        self.result = Some(result);
        self.passed = passed;
        if !passed {
            self.exit_code = EXIT_FAILED;
        }
        self
    }
}
