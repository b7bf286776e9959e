//! Result persistence: fixed-header CSV, JSON with a config echo, and
//! per-(task, method) mean/std summaries. Output bytes are a pure function
//! of config and seeds, except the wall_time column.

use super::config::ExperimentConfig;
use super::experiment::{ExperimentOutput, ResultRow, RunArtifact, SummaryRow};
use super::snapshot;
use super::HarnessError;
use crate::frankwolfe::FwTrace;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub const RESULT_CSV_HEADER: &str = "task,method,schedule,seed,eval,test,flops,wall_time";

fn fmt_f64(v: f64) -> String {
    // Shortest round-trip formatting; NaN prints as "NaN".
    format!("{v}")
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    out.push_str(RESULT_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.task,
            r.method,
            r.schedule,
            r.seed,
            fmt_f64(r.eval),
            fmt_f64(r.test),
            fmt_f64(r.flops),
            fmt_f64(r.wall_time),
        );
    }
    out
}

pub fn summaries_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("task,method,aggregation,metric,mean,std,n,detail\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.task,
            r.method,
            r.aggregation,
            r.metric,
            fmt_f64(r.mean),
            fmt_f64(r.std),
            r.n,
            r.detail,
        );
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| HarnessError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Write the requested formats into `dir`:
/// `results_raw.csv`, `results_best.csv`, `summary.csv`, and/or
/// `results.json` (rows plus a config echo that parses back).
pub fn emit_results(
    output: &ExperimentOutput,
    cfg: &ExperimentConfig,
    dir: &Path,
    formats: &[OutputFormat],
) -> Result<(), HarnessError> {
    for format in formats {
        match format {
            OutputFormat::Csv => {
                write_file(&dir.join("results_raw.csv"), &rows_to_csv(&output.raw))?;
                write_file(&dir.join("results_best.csv"), &rows_to_csv(&output.best))?;
                write_file(
                    &dir.join("summary.csv"),
                    &summaries_to_csv(&output.summaries),
                )?;
            }
            OutputFormat::Json => {
                #[derive(serde::Serialize)]
                struct JsonDoc<'a> {
                    config: &'a ExperimentConfig,
                    raw: &'a [ResultRow],
                    best: &'a [ResultRow],
                    summaries: &'a [SummaryRow],
                }
                let doc = JsonDoc {
                    config: cfg,
                    raw: &output.raw,
                    best: &output.best,
                    summaries: &output.summaries,
                };
                let json = serde_json::to_string_pretty(&doc).expect("serializable");
                write_file(&dir.join("results.json"), &json)?;
            }
        }
    }
    Ok(())
}

/// Per-run traces as JSON plus model snapshots for each best row.
pub fn emit_artifacts(
    artifacts: &[RunArtifact],
    output: &ExperimentOutput,
    dir: &Path,
) -> Result<(), HarnessError> {
    for a in artifacts {
        if let Some(trace) = &a.trace {
            let name = format!(
                "traces/{}_seed{}_lr{}.json",
                a.row.method,
                a.row.seed,
                fmt_f64(a.row.lr).replace('.', "p").replace('-', "m"),
            );
            let json = serde_json::to_string(trace).expect("serializable");
            write_file(&dir.join(name), &json)?;
        }
    }
    for best in &output.best {
        let hit = artifacts.iter().find(|a| {
            a.row.method == best.method && a.row.seed == best.seed && a.row.lr == best.lr
        });
        if let Some(RunArtifact {
            model: Some(model), ..
        }) = hit
        {
            let snap = snapshot::ModelSnapshot::from_model(model);
            let json = serde_json::to_string(&snap).expect("serializable");
            write_file(
                &dir.join(format!(
                    "snapshots/best_{}_seed{}.json",
                    best.method, best.seed
                )),
                &json,
            )?;
        }
    }
    Ok(())
}

/// `t,loss,gap,eta,oracle_residual` per iteration.
pub fn fw_trace_to_csv(trace: &FwTrace) -> String {
    let mut out = String::from("t,loss,gap,eta,oracle_residual\n");
    for s in &trace.steps {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.t,
            fmt_f64(s.loss),
            fmt_f64(s.gap),
            fmt_f64(s.eta),
            fmt_f64(s.oracle_residual),
        );
    }
    out
}

pub fn write_fw_trace(trace: &FwTrace, dir: &Path) -> Result<(), HarnessError> {
    write_file(&dir.join("fw_trace.csv"), &fw_trace_to_csv(trace))
}

/// Strip the trailing wall_time column from every CSV line; used by
/// determinism checks, which must ignore timing.
pub fn strip_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|line| match line.rfind(',') {
            Some(idx) => &line[..idx],
            None => line,
        })
        .collect::<Vec<_>>()
        .join("\n")
}
