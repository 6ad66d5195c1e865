//! Executes single runs and experiment grids.

use lazy_newton::{
    alen_restart, alen_run, anpe_run, agd_run, eg_run, lazy_crn_run, len_restart, len_run, npe_run, Error,
    FirstOrderConfig, LenConfig, MsConfig, ProblemKind, RestartConfig, Result, RunTrace,
};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::reference::{ReferenceCache, DEFAULT_REFERENCE_BUDGET};
use crate::registry::{Method, ProblemSpec};

/// Default regularization of the lazy CRN baseline is `6 m L`.
pub const LAZY_CRN_M_FACTOR: f64 = 6.0;

/// One fully specified run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    pub method: Method,
    pub m: usize,
    pub stepsize: Option<f64>,
    pub seed: u64,
    pub steps: usize,
    pub m_reg: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: f64,
    pub eps: f64,
    pub tolerance: f64,
    pub metric_every: usize,
    pub reference_budget: usize,
}

impl RunSpec {
    pub fn new(problem: ProblemSpec, method: Method, m: usize, steps: usize) -> Self {
        Self {
            problem,
            method,
            m,
            stepsize: None,
            seed: 0,
            steps,
            m_reg: None,
            gamma: None,
            alpha: lazy_newton::alen::DEFAULT_ALPHA,
            eps: 1e-8,
            tolerance: 0.0,
            metric_every: 0,
            reference_budget: DEFAULT_REFERENCE_BUDGET,
        }
    }

    /// Stable identifier, also used as the CSV file stem.
    pub fn key(&self) -> String {
        let mut k = format!("{}__{}", self.problem.key(), self.method.legend(self.m));
        if let Some(eta) = self.stepsize {
            k.push_str(&format!("__eta{eta}"));
        }
        k.push_str(&format!("__seed{}", self.seed));
        k
    }
}

/// The cross product of problems, methods, their grids and seeds.
pub fn expand(cfg: &ExperimentConfig) -> Vec<RunSpec> {
    let mut out = Vec::new();
    for problem in &cfg.problems {
        for method in &cfg.methods {
            let ms: Vec<usize> = if method.method.uses_laziness() { method.m.clone() } else { vec![1] };
            let etas: Vec<Option<f64>> = if method.method.uses_stepsize() {
                method.stepsizes.iter().map(|s| Some(*s)).collect()
            } else {
                vec![None]
            };
            for &m in &ms {
                for eta in &etas {
                    for &seed in &cfg.seeds {
                        let mut spec = RunSpec::new(problem.clone(), method.method, m, method.steps.unwrap_or(cfg.steps));
                        spec.stepsize = *eta;
                        spec.seed = seed;
                        spec.m_reg = method.m_reg;
                        spec.gamma = method.gamma;
                        spec.alpha = method.alpha;
                        spec.eps = cfg.eps;
                        spec.tolerance = cfg.tolerance;
                        spec.metric_every = cfg.metric_every;
                        spec.reference_budget = cfg.reference_budget;
                        out.push(spec);
                    }
                }
            }
        }
    }
    out
}

fn ms_config(spec: &RunSpec) -> MsConfig<f64> {
    let mut cfg = MsConfig::new(spec.m);
    cfg.gamma = spec.gamma;
    cfg.m_reg = spec.m_reg;
    cfg
}

/// Executes one run. `Min` problems without a known `f*` get one from the
/// reference cache so the trace carries `subopt_gap`.
pub fn run_one(spec: &RunSpec, cache: &ReferenceCache) -> Result<RunTrace> {
    let mut problem = spec.problem.build(spec.seed)?;
    let mut reference_source = "closed_form";
    if problem.kind() == ProblemKind::Min && problem.reference_value().is_none() {
        let (f_star, _) = cache.get_or_compute(&problem, spec.reference_budget)?;
        problem = problem.with_reference_value(f_star);
        reference_source = "computed";
    }
    let z0 = spec.problem.start(&problem);
    let eta = || spec.stepsize.ok_or_else(|| Error::Config(format!("{} needs a stepsize", spec.method)));

    let mut trace = match spec.method {
        Method::Len | Method::Npe => {
            let mut cfg = LenConfig::new(spec.steps, spec.m)
                .with_tolerance(spec.tolerance)
                .with_keep_points(false)
                .with_metric_every(spec.metric_every);
            cfg.m_reg = spec.m_reg;
            if spec.method == Method::Len {
                len_run(&problem, &z0, &cfg)?.trace
            } else {
                npe_run(&problem, &z0, &cfg)?.trace
            }
        }
        Method::Alen => alen_run(&problem, &z0, spec.steps, spec.alpha, &ms_config(spec), spec.tolerance)?.trace,
        Method::Anpe => anpe_run(&problem, &z0, spec.steps, spec.alpha, spec.tolerance)?.trace,
        Method::LazyCrn => {
            let m_reg = spec
                .m_reg
                .unwrap_or(LAZY_CRN_M_FACTOR * spec.m as f64 * problem.lipschitz());
            lazy_crn_run(&problem, &z0, spec.steps, spec.m, m_reg, spec.tolerance)?.trace
        }
        Method::Eg => eg_run(&problem, &z0, &FirstOrderConfig::new(eta()?, spec.steps).with_tolerance(spec.tolerance))?.trace,
        Method::Agd => agd_run(&problem, &z0, &FirstOrderConfig::new(eta()?, spec.steps).with_tolerance(spec.tolerance))?.trace,
        Method::LenRestart => {
            let mut cfg = RestartConfig::new(spec.m, spec.eps);
            cfg.m_reg = spec.m_reg;
            len_restart(&problem, &z0, &cfg)?.trace
        }
        Method::AlenRestart => {
            let cfg = RestartConfig::new(spec.m, spec.eps);
            alen_restart(&problem, &z0, &cfg, &ms_config(spec), spec.alpha)?.trace
        }
    };

    trace.set_meta("key", spec.key());
    trace.set_meta("method", spec.method);
    trace.set_meta("legend", spec.method.legend(spec.m));
    trace.set_meta("problem", problem.label());
    trace.set_meta("m", spec.m);
    trace.set_meta("seed", spec.seed);
    if let Some(eta) = spec.stepsize {
        trace.set_meta("stepsize", eta);
    }
    if let Some(g) = spec.gamma {
        trace.set_meta("gamma", g);
    }
    if let Some(f) = problem.reference_value() {
        trace.set_meta("f_star", format!("{f:.16e}"));
        trace.set_meta("f_star_source", reference_source);
    }
    trace.set_meta("status", "ok");
    Ok(trace)
}

/// Trace recording a failed run (no records, error in metadata).
pub fn failed_trace(spec: &RunSpec, err: &Error) -> RunTrace {
    RunTrace::new()
        .with_meta("key", spec.key())
        .with_meta("method", spec.method)
        .with_meta("legend", spec.method.legend(spec.m))
        .with_meta("problem", spec.problem.key())
        .with_meta("m", spec.m)
        .with_meta("seed", spec.seed)
        .with_meta("status", if err.is_numerical() { "numerical_failure" } else { "error" })
        .with_meta("error", err)
}

/// Runs the whole grid. Individual failures become failed traces; the
/// result is sorted by run key.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunTrace>> {
    run_experiment_with_cache(cfg, &ReferenceCache::new())
}

pub fn run_experiment_with_cache(cfg: &ExperimentConfig, cache: &ReferenceCache) -> Result<Vec<RunTrace>> {
    cfg.validate()?;
    let specs = expand(cfg);
    let one = |spec: &RunSpec| run_one(spec, cache).unwrap_or_else(|e| failed_trace(spec, &e));
    let mut traces: Vec<RunTrace> = if cfg.parallel {
        specs.par_iter().map(one).collect()
    } else {
        specs.iter().map(one).collect()
    };
    traces.sort_by(|a, b| a.meta("key").cmp(&b.meta("key")));
    Ok(traces)
}
