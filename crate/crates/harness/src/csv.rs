//! Trace CSV format.
//!
//! ```text
//! # key=value            (metadata, sorted by key)
//! iter,wall_time_s,grad_evals,jac_evals,factorizations,linear_solves,metric,value
//! 0,0.0000000000000000e0,1,0,0,0,grad_norm,1.2345678901234567e0
//! ```
//!
//! One data row per (record, metric). Reals are printed with 17
//! significant digits so a read-back reproduces them exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use lazy_newton::trace::{OracleCounters, RunTrace, TraceRecord};
use lazy_newton::{Error, Result};

pub const HEADER: &str = "iter,wall_time_s,grad_evals,jac_evals,factorizations,linear_solves,metric,value";

fn clean(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

pub fn to_csv_string(trace: &RunTrace) -> String {
    let mut out = String::new();
    for (k, v) in &trace.metadata {
        out.push_str(&format!("# {}={}\n", clean(k), clean(v)));
    }
    out.push_str(HEADER);
    out.push('\n');
    for r in &trace.records {
        let c = r.counters;
        for (name, value) in &r.metrics {
            out.push_str(&format!(
                "{},{:.16e},{},{},{},{},{},{:.16e}\n",
                r.iter, r.wall_time_s, c.grad_evals, c.jac_evals, c.factorizations, c.linear_solves, name, value
            ));
        }
    }
    out
}

pub fn write_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    fs::write(path, to_csv_string(trace)).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn read_csv(path: &Path) -> Result<RunTrace> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_csv(&text)
}

/// Inverse of [`to_csv_string`]. Consecutive rows with the same `iter`
/// form one record.
pub fn parse_csv(text: &str) -> Result<RunTrace> {
    let mut trace = RunTrace::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let parse_err = |message: String| Error::Parse { line: lineno, message };
        if let Some(meta) = line.strip_prefix("# ") {
            let (k, v) = meta.split_once('=').ok_or_else(|| parse_err("metadata line without '='".into()))?;
            trace.metadata.insert(k.to_string(), v.to_string());
            continue;
        }
        if !header_seen {
            if line != HEADER {
                return Err(parse_err(format!("expected header '{HEADER}'")));
            }
            header_seen = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(parse_err(format!("expected 8 fields, got {}", f.len())));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|e| parse_err(format!("bad integer '{s}': {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| parse_err(format!("bad real '{s}': {e}")));
        let iter = int(f[0])?;
        let wall_time_s = real(f[1])?;
        let counters = OracleCounters {
            grad_evals: int(f[2])?,
            jac_evals: int(f[3])?,
            factorizations: int(f[4])?,
            linear_solves: int(f[5])?,
        };
        let value = real(f[7])?;
        match trace.records.last_mut() {
            Some(r) if r.iter == iter => {
                r.metrics.insert(f[6].to_string(), value);
            }
            _ => {
                let mut metrics = BTreeMap::new();
                metrics.insert(f[6].to_string(), value);
                trace.push(TraceRecord { iter, wall_time_s, counters, metrics });
            }
        }
    }
    if !header_seen {
        return Err(Error::Parse { line: 0, message: "missing CSV header".into() });
    }
    Ok(trace)
}
