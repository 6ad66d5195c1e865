use std::fs;
use std::path::Path;

use lazy_newton_harness::bench::{run_bench, SUMMARY_HEADER};
use lazy_newton_harness::csv::{read_csv, HEADER};
use lazy_newton_harness::ExperimentConfig;

const GRID: &str = r#"
[run]
steps = 12
seeds = [0, 1]
reference_budget = 3000
parallel = true

[[problem]]
name = "cubic_bilinear"
n = 6

[[problem]]
name = "logistic"
n = 4
samples = 30

[[method]]
name = "LEN"
m = [1, 3]

[[method]]
name = "EG"
stepsize = [0.1, 0.01]
"#;

fn config() -> ExperimentConfig {
    ExperimentConfig::parse(GRID, Path::new(".")).unwrap()
}

/// Drops the wall-time column so runs can be compared.
fn strip_time(text: &str, column: usize) -> String {
    text.lines()
        .map(|l| {
            if l.starts_with('#') {
                return l.to_string();
            }
            l.split(',').enumerate().filter(|(i, _)| *i != column).map(|(_, f)| f).collect::<Vec<_>>().join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn writes_one_csv_per_run_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_bench(&config(), dir.path()).unwrap();
    // 2 problems x 2 seeds x (2 LEN + 2 EG)
    assert_eq!(res.traces.len(), 16);
    assert_eq!(res.files.len(), 16);
    for (trace, path) in res.traces.iter().zip(&res.files) {
        assert_eq!(trace.meta("status"), Some("ok"), "{path:?}");
        let back = read_csv(path).unwrap();
        assert_eq!(&back, trace);
        assert!(fs::read_to_string(path).unwrap().contains(HEADER));
    }
    let summary = fs::read_to_string(&res.summary).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some(SUMMARY_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 16);
    // one best run per (problem instance, method)
    let best = rows.iter().filter(|r| r.ends_with(",1")).count();
    assert_eq!(best, 2 * 2 * 2);
}

#[test]
fn logistic_runs_carry_a_gap() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_bench(&config(), dir.path()).unwrap();
    for t in res.traces.iter().filter(|t| t.meta("key").unwrap().starts_with("logistic")) {
        assert_eq!(t.meta("f_star_source"), Some("computed"));
        assert!(t.final_metric("subopt_gap").unwrap() >= -1e-9);
    }
}

#[test]
fn reruns_are_identical_up_to_wall_time() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_bench(&config(), a.path()).unwrap();
    let rb = run_bench(&config(), b.path()).unwrap();
    for (fa, fb) in ra.files.iter().zip(&rb.files) {
        assert_eq!(fa.file_name(), fb.file_name());
        let (ta, tb) = (fs::read_to_string(fa).unwrap(), fs::read_to_string(fb).unwrap());
        assert_eq!(strip_time(&ta, 1), strip_time(&tb, 1));
    }
    let (sa, sb) = (fs::read_to_string(&ra.summary).unwrap(), fs::read_to_string(&rb.summary).unwrap());
    assert_eq!(strip_time(&sa, 5), strip_time(&sb, 5));
}
