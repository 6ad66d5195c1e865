use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lazy_newton::{Error, Result};
use lazy_newton_harness::check::run_checks;
use lazy_newton_harness::csv::write_csv;
use lazy_newton_harness::runner::{run_one, RunSpec};
use lazy_newton_harness::{run_bench, ExperimentConfig, Method, ProblemName, ProblemSpec, ReferenceCache};

#[derive(Parser, Debug)]
#[command(name = "lazy-newton", version, about = "Lazy second-order solvers for monotone problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one method on one problem and write its trace.
    Solve {
        #[arg(long)]
        problem: ProblemName,
        #[arg(long)]
        method: Method,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Regularization M (default depends on the method).
        #[arg(long = "M")]
        m_reg: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        stepsize: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment grid from a TOML config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Finite-difference and linear-algebra self-checks.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn solve(cmd: Command) -> Result<()> {
    let Command::Solve { problem, method, m, steps, m_reg, gamma, eps, seed, data, n, stepsize, tolerance, out } = cmd
    else {
        unreachable!()
    };
    let mut p = ProblemSpec::new(problem);
    if let Some(n) = n {
        p = p.with_n(n);
    }
    if let Some(d) = data {
        p = p.with_data(d);
    }
    let mut spec = RunSpec::new(p, method, m, steps);
    spec.m_reg = m_reg;
    spec.gamma = gamma;
    spec.eps = eps;
    spec.seed = seed;
    spec.tolerance = tolerance;
    spec.stepsize = stepsize.or(method.uses_stepsize().then_some(lazy_newton::STEPSIZE_GRID[1]));
    let trace = run_one(&spec, &ReferenceCache::new())?;
    write_csv(&trace, &out)?;
    let c = trace.final_counters();
    println!(
        "{}: {} records, grad_evals={} jac_evals={} factorizations={} -> {}",
        spec.key(),
        trace.len(),
        c.grad_evals,
        c.jac_evals,
        c.factorizations,
        out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        cmd @ Command::Solve { .. } => solve(cmd).map(|_| true),
        Command::Bench { config, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let res = run_bench(&cfg, &out_dir)?;
            let failed = res.traces.iter().filter(|t| t.meta("status") != Some("ok")).count();
            println!("{} runs, {} failed, summary in {}", res.traces.len(), failed, res.summary.display());
            Ok(true)
        }
        Command::Check { seed } => {
            let report = run_checks(seed)?;
            for l in &report.lines {
                println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
            }
            Ok(report.all_pass())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Config(_) | Error::Io { .. }) || !e.is_numerical() { 1 } else { 2 })
        }
    }
}
