//! `bench`: run a config grid and write one CSV per run plus a summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lazy_newton::{Error, Result, RunTrace};

use crate::config::ExperimentConfig;
use crate::csv::write_csv;
use crate::reference::ReferenceCache;
use crate::runner::run_experiment_with_cache;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str = "key,legend,problem,status,iter,wall_time_s,grad_evals,jac_evals,factorizations,linear_solves,final_grad_norm,final_subopt_gap,best";

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub traces: Vec<RunTrace>,
    pub files: Vec<PathBuf>,
    pub summary: PathBuf,
}

/// Metric used to pick the best member of a tuning grid.
pub fn selection_metric(trace: &RunTrace) -> Option<f64> {
    trace.final_metric("subopt_gap").or_else(|| trace.final_metric("grad_norm"))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Marks, per (problem, method), the run with the lowest final metric.
pub fn best_runs(traces: &[RunTrace]) -> Vec<bool> {
    let mut best: BTreeMap<(String, String), (usize, f64)> = BTreeMap::new();
    for (i, t) in traces.iter().enumerate() {
        let Some(v) = selection_metric(t).filter(|v| v.is_finite()) else { continue };
        let group = (t.meta("problem").unwrap_or("").to_string(), t.meta("method").unwrap_or("").to_string());
        match best.get(&group) {
            Some((_, b)) if *b <= v => {}
            _ => {
                best.insert(group, (i, v));
            }
        }
    }
    let mut flags = vec![false; traces.len()];
    for (i, _) in best.values() {
        flags[*i] = true;
    }
    flags
}

pub fn summary_csv(traces: &[RunTrace]) -> String {
    let flags = best_runs(traces);
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for (t, best) in traces.iter().zip(flags) {
        let last = t.last();
        let c = t.final_counters();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            t.meta("key").unwrap_or(""),
            t.meta("legend").unwrap_or(""),
            t.meta("problem").unwrap_or("").replace(',', ";"),
            t.meta("status").unwrap_or(""),
            last.map(|r| r.iter).unwrap_or(0),
            fmt_opt(last.map(|r| r.wall_time_s)),
            c.grad_evals,
            c.jac_evals,
            c.factorizations,
            c.linear_solves,
            fmt_opt(t.final_metric("grad_norm")),
            fmt_opt(t.final_metric("subopt_gap")),
            u8::from(best),
        ));
    }
    out
}

pub fn run_bench(cfg: &ExperimentConfig, out_dir: &Path) -> Result<BenchResult> {
    fs::create_dir_all(out_dir).map_err(|source| Error::Io { path: out_dir.to_path_buf(), source })?;
    let cache = ReferenceCache::new();
    let traces = run_experiment_with_cache(cfg, &cache)?;
    let mut files = Vec::with_capacity(traces.len());
    for t in &traces {
        let path = out_dir.join(format!("{}.csv", t.meta("key").unwrap_or("run")));
        write_csv(t, &path)?;
        files.push(path);
    }
    let summary = out_dir.join(SUMMARY_FILE);
    fs::write(&summary, summary_csv(&traces)).map_err(|source| Error::Io { path: summary.clone(), source })?;
    Ok(BenchResult { traces, files, summary })
}
