//! The `birkhoff` command line: argument handling, per-input reports and
//! exit codes. [`run_command`] is the whole program minus process I/O, so it
//! can be driven from tests.
//!
//! Exit codes: 0 success, 2 parse or usage error, 3 loop not invertible on
//! the circle, 4 factorization or verification failed, 5 internal invariant
//! violation.

mod args;
mod commands;
mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use birkhoff_core::{Error, Settings, Truncation};
use clap::Parser;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use args::{Cli, Command, Common, Mode};
pub use report::{ErrorReport, Report, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NOT_INVERTIBLE: i32 = 3;
pub const EXIT_FAILED: i32 = 4;
pub const EXIT_INVARIANT: i32 = 5;

/// Everything the process would print, plus its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::InvalidArgument(_) => EXIT_PARSE,
        Error::NotInvertible { .. } => EXIT_NOT_INVERTIBLE,
        Error::InvariantViolation(_) => EXIT_INVARIANT,
        Error::Domain(_) | Error::Truncation { .. } | Error::Numeric { .. } | Error::IndexObstruction(_) => EXIT_FAILED,
    }
}

fn settings_from(common: &Common) -> Settings {
    Settings {
        truncation: Truncation {
            band_cap: common.band_cap,
            ..Truncation::default()
        },
        residual_tol: common.tol,
        samples: common.samples,
        bch_order: common.order,
        bch_radius: common.radius,
        ..Settings::default()
    }
}

/// The input file's bytes and their digest.
pub(crate) struct Input {
    pub path: PathBuf,
    pub text: String,
    pub digest: String,
}

fn read_input(path: &Path) -> Result<Input, Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    })?;
    let digest = format!("sha256:{}", hex::encode(Sha256::digest(&bytes)));
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(Input {
        path: path.to_path_buf(),
        text,
        digest,
    })
}

/// Trace path for the `i`-th of `total` inputs.
fn trace_path(base: &Path, i: usize, total: usize) -> PathBuf {
    if total <= 1 {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.{i}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{i}"),
    };
    base.with_file_name(name)
}

fn write_trace(path: &Path, residuals: &[f64]) -> Result<(), Error> {
    let io = |e: &dyn std::fmt::Display| Error::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(&e))?;
    w.write_record(["sample_index", "theta", "residual"])
        .map_err(|e| io(&e))?;
    let count = residuals.len();
    for (j, r) in residuals.iter().enumerate() {
        let theta = std::f64::consts::TAU * j as f64 / count as f64;
        w.write_record([j.to_string(), theta.to_string(), r.to_string()])
            .map_err(|e| io(&e))?;
    }
    w.flush().map_err(|e| io(&e))
}

fn process(cli: &Cli, cfg: &Settings, input: Option<&Path>, index: usize, total: usize) -> Report {
    let start = Instant::now();
    let mut report = Report::new(cli, input);
    let loaded = match input.map(read_input).transpose() {
        Ok(x) => x,
        Err(e) => return report.fail(&e),
    };
    if let Some(inp) = &loaded {
        report.input_digest = Some(inp.digest.clone());
    }
    let load_ms = start.elapsed().as_secs_f64() * 1e3;
    let outcome = commands::execute(&cli.command, &cli.common, cfg, loaded.as_ref());
    let compute_ms = start.elapsed().as_secs_f64() * 1e3 - load_ms;
    let mut report = match outcome {
        Ok(out) => {
            if let (Some(base), Some(trace)) = (&cli.common.trace_csv, &out.trace) {
                if let Err(e) = write_trace(&trace_path(base, index, total), trace) {
                    return report.fail(&e);
                }
            }
            report.succeed(out.result, out.passed)
        }
        Err(e) => report.fail(&e),
    };
    if cli.common.timings {
        report.timings_ms = Some([("load", load_ms), ("compute", compute_ms)].into_iter().collect());
    }
    report
}

/// Parses `argv` (program name first), runs the command on every input and
/// renders the reports: one JSON document for a single input, a JSON array
/// for several.
pub fn run_command<I, T>(argv: I) -> CommandOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandOutput {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                CommandOutput {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let cfg = settings_from(&cli.common);
    let inputs: Vec<Option<&Path>> = if cli.common.inputs.is_empty() {
        vec![None]
    } else {
        cli.common.inputs.iter().map(|p| Some(p.as_path())).collect()
    };
    let total = inputs.len();
    let run = || -> Vec<Report> {
        inputs
            .par_iter()
            .enumerate()
            .map(|(i, input)| process(&cli, &cfg, *input, i, total))
            .collect()
    };
    let reports = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.jobs.max(1))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    let code = reports
        .iter()
        .map(|r| r.exit_code)
        .find(|&c| c != EXIT_OK)
        .unwrap_or(EXIT_OK);
    let mut stdout = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])
    } else {
        serde_json::to_string_pretty(&reports)
    }
    .expect("reports serialize");
    stdout.push('\n');
    let mut stderr = String::new();
    for r in &reports {
        if let Some(err) = &r.error {
            let name = r.input.as_deref().unwrap_or("-");
            stderr.push_str(&format!("{name}: {}\n", err.message));
            if r.exit_code == EXIT_INVARIANT {
                stderr.push_str(&format!(
                    "internal invariant violated; please file a bug report with this input and command:\n  {}\n",
                    serde_json::to_string(&r.options).unwrap_or_default()
                ));
            }
        }
    }
    CommandOutput { code, stdout, stderr }
}
