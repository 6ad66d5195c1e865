//! Oracle-cost counters and per-iteration run traces.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign, Sub};
use std::time::Instant;

use nalgebra::DVector;

use crate::scalar::Real;

/// Counts of the expensive operations performed during a run.
///
/// `grad_evals` counts operator / gradient calls (GO), `jac_evals` counts
/// Jacobian / Hessian calls (HO). Counters are owned by the caller of a
/// solver, never by the problem.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OracleCounters {
    pub grad_evals: u64,
    pub jac_evals: u64,
    pub factorizations: u64,
    pub linear_solves: u64,
}

impl Add for OracleCounters {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            grad_evals: self.grad_evals + rhs.grad_evals,
            jac_evals: self.jac_evals + rhs.jac_evals,
            factorizations: self.factorizations + rhs.factorizations,
            linear_solves: self.linear_solves + rhs.linear_solves,
        }
    }
}

impl AddAssign for OracleCounters {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for OracleCounters {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            grad_evals: self.grad_evals - rhs.grad_evals,
            jac_evals: self.jac_evals - rhs.jac_evals,
            factorizations: self.factorizations - rhs.factorizations,
            linear_solves: self.linear_solves - rhs.linear_solves,
        }
    }
}

impl OracleCounters {
    /// Componentwise `self >= other`.
    pub fn dominates(&self, other: &Self) -> bool {
        self.grad_evals >= other.grad_evals
            && self.jac_evals >= other.jac_evals
            && self.factorizations >= other.factorizations
            && self.linear_solves >= other.linear_solves
    }
}

/// One row of a trace: iteration index, elapsed time, counter snapshot and
/// the metrics measured at that iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: u64,
    pub wall_time_s: f64,
    pub counters: OracleCounters,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub metadata: BTreeMap<String, String>,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.set_meta(key, value);
        self
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Values of one metric in record order (records lacking it are skipped).
    pub fn metric_series(&self, name: &str) -> Vec<(u64, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.metrics.get(name).map(|v| (r.iter, *v)))
            .collect()
    }

    pub fn final_metric(&self, name: &str) -> Option<f64> {
        self.records
            .iter()
            .rev()
            .find_map(|r| r.metrics.get(name).copied())
    }

    pub fn final_counters(&self) -> OracleCounters {
        self.last().map(|r| r.counters).unwrap_or_default()
    }

    /// Appends `other`'s records after this trace, shifting iteration
    /// indices, wall times and counters so that the result reads as one run.
    pub fn append_shifted(&mut self, other: &RunTrace) {
        let (iter_offset, time_offset, counter_offset) = match self.last() {
            Some(r) => (r.iter + 1, r.wall_time_s, r.counters),
            None => (0, 0.0, OracleCounters::default()),
        };
        for r in &other.records {
            self.records.push(TraceRecord {
                iter: r.iter + iter_offset,
                wall_time_s: r.wall_time_s + time_offset,
                counters: r.counters + counter_offset,
                metrics: r.metrics.clone(),
            });
        }
    }

    /// Checks the structural invariants: strictly increasing iterations,
    /// nondecreasing wall time and counters, at least one metric per record.
    pub fn validate(&self) -> std::result::Result<(), String> {
        for w in self.records.windows(2) {
            if w[1].iter <= w[0].iter {
                return Err(format!("iter not increasing at {}", w[1].iter));
            }
            if w[1].wall_time_s < w[0].wall_time_s {
                return Err(format!("wall time decreased at {}", w[1].iter));
            }
            if !w[1].counters.dominates(&w[0].counters) {
                return Err(format!("counters decreased at {}", w[1].iter));
            }
        }
        if let Some(r) = self.records.iter().find(|r| r.metrics.is_empty()) {
            return Err(format!("record {} has no metrics", r.iter));
        }
        Ok(())
    }
}

/// Monotone wall clock started at construction.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    pub fn elapsed_s(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

impl Default for Stopwatch {
    fn default() -> Self {
        Self::start()
    }
}

/// Final point, counters and trace of a solver run.
#[derive(Debug, Clone)]
pub struct SolveOutput<T: Real> {
    pub z: DVector<T>,
    pub counters: OracleCounters,
    pub trace: RunTrace,
}
