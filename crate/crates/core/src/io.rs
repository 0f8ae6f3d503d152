//! CSV and JSON serialization of schedules, traces and figure rows.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::schedule::Schedule;
use crate::smc::RunResult;

/// Writes `rows` as CSV with a header derived from the field names.
pub fn write_csv<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read, T: DeserializeOwned>(reader: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct LambdaRow {
    lambda: f64,
}

/// One temperature per row under a `lambda` header.
pub fn write_lambdas_csv<W: Write>(writer: W, lambdas: &[f64]) -> Result<()> {
    let rows: Vec<LambdaRow> = lambdas.iter().map(|&lambda| LambdaRow { lambda }).collect();
    write_csv(writer, &rows)
}

/// Reads temperatures without validating them as a schedule.
pub fn read_lambdas_csv<R: Read>(reader: R) -> Result<Vec<f64>> {
    Ok(read_csv::<_, LambdaRow>(reader)?
        .into_iter()
        .map(|r| r.lambda)
        .collect())
}

pub fn read_schedule_csv<R: Read>(reader: R) -> Result<Schedule> {
    Schedule::new(read_lambdas_csv(reader)?)
}

pub fn schedule_to_json(schedule: &Schedule) -> Result<String> {
    Ok(serde_json::to_string(schedule)?)
}

pub fn schedule_from_json(text: &str) -> Result<Schedule> {
    Ok(serde_json::from_str(text)?)
}

/// Per-step record of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub ess: f64,
    pub acceptance: f64,
}

pub fn trace_rows(result: &RunResult) -> Vec<TraceRow> {
    (0..result.n_steps)
        .map(|i| TraceRow {
            step: i + 1,
            lambda: result.lambdas[i + 1],
            gamma: result.step_sizes[i],
            ess: result.ess_trace[i],
            acceptance: result.acceptance_trace[i],
        })
        .collect()
}
