//! Benchmark harness for the `lazy-newton` solvers: named problems and
//! methods, TOML experiment grids, reference values, CSV traces and the
//! self-check suite used by the `lazy-newton` binary.

pub mod bench;
pub mod check;
pub mod config;
pub mod csv;
pub mod reference;
pub mod registry;
pub mod runner;

pub use bench::run_bench;
pub use config::{ExperimentConfig, MethodSpec};
pub use csv::{read_csv, write_csv};
pub use reference::{compute_reference, ReferenceCache};
pub use registry::{Method, ProblemName, ProblemSpec};
pub use runner::{run_experiment, run_one, RunSpec};
