//! The `run`, `scan` and `oracle` subcommands.
//!
//! Exit codes: 0 ok, 1 a check failed, 2 configuration or I/O error,
//! 3 the witness-driven schedule became infeasible (the partial trace is
//! still written).

use std::io::Write;
use std::path::{Path, PathBuf};

use ssdse::analysis::{scan_function, ScanSpec};
use ssdse::entanglement::Threshold;
use ssdse::oracle::{run_oracle, OracleConfig};
use ssdse::parallel::Execution;
use ssdse::protocol::{run, ProtocolTrace, RunError, RunOptions};
use thiserror::Error;

use crate::config::{ConfigError, OutputConfig, RunConfig};
use crate::output::{Document, Format, OutputError, Value};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Domain(#[from] ssdse::Error),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            // A non-finite value reaching the writer is a defect, not a
            // configuration problem.
            CliError::Output(OutputError::NonFinite { .. }) => EXIT_CHECK_FAILED,
            _ => EXIT_CONFIG,
        }
    }
}

/// What a command produced: the document to write, its exit code and an
/// optional one-line status for stderr.
#[derive(Debug)]
pub struct Outcome {
    pub document: Document,
    pub exit: u8,
    pub status: Option<String>,
}

pub const RUN_COLUMNS: [&str; 13] = [
    "k",
    "lambda",
    "success",
    "log_negativity_1",
    "log_negativity_2",
    "witness_1",
    "witness_2",
    "witness_g2",
    "threshold_1",
    "threshold_2",
    "epsilon",
    "next_lambda",
    "s_k",
];

fn threshold_cell(t: &Threshold) -> Value {
    t.value().into()
}

fn trace_rows(trace: &ProtocolTrace) -> Vec<Vec<Value>> {
    trace
        .records
        .iter()
        .map(|r| {
            // The last record of an infeasible run has no witness values.
            let witnessed = r.witness_values.iter().all(|w| w.is_finite());
            let w = |i: usize| {
                if witnessed {
                    Value::Num(r.witness_values[i])
                } else {
                    Value::Empty
                }
            };
            vec![
                Value::Int(r.k as u64),
                Value::Num(r.lambda),
                Value::Num(r.success_prob),
                Value::Num(r.negativities[0]),
                Value::Num(r.negativities[1]),
                w(0),
                w(1),
                if witnessed {
                    Value::Num(r.witness_g2)
                } else {
                    Value::Empty
                },
                threshold_cell(&r.thresholds[0]),
                threshold_cell(&r.thresholds[1]),
                r.epsilon.into(),
                r.next_lambda.into(),
                r.s_k.into(),
            ]
        })
        .collect()
}

fn fold(values: impl Iterator<Item = f64>, f: fn(f64, f64) -> f64) -> Value {
    values.reduce(f).map_or(Value::Empty, Value::Num)
}

fn trace_summary(
    trace: &ProtocolTrace,
    failure: Option<(usize, String)>,
) -> Vec<(&'static str, Value)> {
    let records = &trace.records;
    let witnesses = || {
        records
            .iter()
            .flat_map(|r| r.witness_values)
            .filter(|w| w.is_finite())
    };
    let mut out = vec![
        (
            "rounds_requested",
            Value::Int(trace.schedule.rounds() as u64),
        ),
        ("rounds_completed", Value::Int(records.len() as u64)),
        (
            "status",
            Value::Text(
                if failure.is_some() {
                    "infeasible"
                } else {
                    "ok"
                }
                .into(),
            ),
        ),
        (
            "min_success",
            fold(records.iter().map(|r| r.success_prob), f64::min),
        ),
        (
            "min_log_negativity",
            fold(records.iter().flat_map(|r| r.negativities), f64::min),
        ),
        ("max_witness", fold(witnesses(), f64::max)),
        (
            "all_witness_negative",
            match witnesses().next() {
                Some(_) => Value::Bool(witnesses().all(|w| w < 0.0)),
                None => Value::Empty,
            },
        ),
        ("final_lambda", records.last().map(|r| r.lambda).into()),
    ];
    let (round, reason) = match failure {
        Some((round, reason)) => (Value::Int(round as u64), Value::Text(reason)),
        None => (Value::Empty, Value::Empty),
    };
    out.push(("infeasible_round", round));
    out.push(("infeasible_reason", reason));
    out
}

pub fn cmd_run(config: &RunConfig) -> Result<Outcome, CliError> {
    let options = RunOptions {
        schmidt_basis: config.schmidt_basis,
    };
    let (trace, failure) = match run(&config.ensemble, &config.schedule, options) {
        Ok(trace) => (trace, None),
        Err(RunError::ScheduleInfeasible {
            round,
            reason,
            trace,
        }) => (*trace, Some((round, reason.to_string()))),
        Err(RunError::Invalid(e)) => return Err(e.into()),
    };
    let status = failure
        .as_ref()
        .map(|(round, reason)| format!("schedule infeasible at round {round}: {reason}"));
    let exit = if failure.is_some() {
        EXIT_INFEASIBLE
    } else {
        EXIT_OK
    };
    Ok(Outcome {
        document: Document {
            config: config.echo(),
            columns: RUN_COLUMNS.to_vec(),
            rows: trace_rows(&trace),
            summary: trace_summary(&trace, failure),
            extra: vec![],
        },
        exit,
        status,
    })
}

pub const SCAN_COLUMNS: [&str; 4] = ["theta", "lambda_prev", "lambda", "value"];

pub fn cmd_scan(spec: &ScanSpec, execution: Execution) -> Result<Outcome, CliError> {
    let grid = scan_function(spec, execution)?;
    let s = grid.summary;
    let rows = grid
        .cells
        .iter()
        .map(|c| {
            vec![
                Value::Num(c.theta),
                Value::Num(c.lambda_prev),
                Value::Num(c.lambda),
                Value::Num(c.value),
            ]
        })
        .collect();
    let config = vec![
        ("function", Value::Text(spec.function.name().into())),
        ("k", Value::Int(spec.k as u64)),
        ("prefix", Value::List(spec.prefix.clone())),
        ("mu", Value::Num(spec.mu)),
        ("increasing_only", Value::Bool(spec.increasing_only)),
    ];
    let summary = vec![
        ("function", Value::Text(spec.function.name().into())),
        ("cells", Value::Int(s.cells as u64)),
        ("min", Value::Num(s.min)),
        ("max", Value::Num(s.max)),
        ("negative_cells", Value::Int(s.negative_cells as u64)),
        ("positive_cells", Value::Int(s.positive_cells as u64)),
        ("argmin", Value::List(s.argmin.to_vec())),
        ("argmax", Value::List(s.argmax.to_vec())),
    ];
    let grid_block = vec![
        ("theta", Value::List(spec.theta.values())),
        ("lambda_prev", Value::List(spec.lambda_prev.values())),
        ("lambda", Value::List(spec.lambda.values())),
        (
            "values",
            Value::List(grid.cells.iter().map(|c| c.value).collect()),
        ),
    ];
    Ok(Outcome {
        document: Document {
            config,
            columns: SCAN_COLUMNS.to_vec(),
            rows,
            summary,
            extra: vec![("grid", grid_block)],
        },
        exit: EXIT_OK,
        status: None,
    })
}

pub const ORACLE_COLUMNS: [&str; 4] = ["check", "max_deviation", "tolerance", "passed"];

pub fn cmd_oracle(config: &OracleConfig, execution: Execution) -> Result<Outcome, CliError> {
    let report = run_oracle(config, execution)?;
    let rows = report
        .checks
        .iter()
        .map(|c| {
            vec![
                Value::Text(c.name.into()),
                Value::Num(c.max_deviation),
                Value::Num(c.tolerance),
                Value::Bool(c.passed),
            ]
        })
        .collect();
    let failed: Vec<&str> = report.failed_checks().map(|c| c.name).collect();
    let mut echo = vec![
        ("samples", Value::Int(config.samples as u64)),
        ("rounds", Value::Int(config.rounds as u64)),
        ("seed", Value::Int(config.seed)),
        ("tolerance", Value::Num(config.tolerance)),
    ];
    if config.inject.is_some() {
        echo.push(("inject_defect", Value::Text("correlator_sign".into())));
    }
    Ok(Outcome {
        document: Document {
            config: echo,
            columns: ORACLE_COLUMNS.to_vec(),
            rows,
            summary: vec![
                ("passed", Value::Bool(report.passed)),
                ("failed_checks", Value::Text(failed.join(";"))),
            ],
            extra: vec![],
        },
        exit: if report.passed {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        },
        status: (!report.passed).then(|| format!("oracle checks failed:\n{report}")),
    })
}

/// Explicit format, then the file extension, then CSV.
pub fn resolve_format(explicit: Option<Format>, path: Option<&Path>) -> Format {
    explicit.unwrap_or_else(
        || match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        },
    )
}

/// Writes the rendered document to `output.path`, or stdout if unset.
pub fn emit(document: &Document, output: &OutputConfig) -> Result<(), CliError> {
    let format = resolve_format(output.format, output.path.as_deref());
    let text = document.render(format)?;
    match &output.path {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}
