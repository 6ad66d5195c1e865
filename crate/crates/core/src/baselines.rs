//! First-order baselines: extragradient and Nesterov's accelerated gradient.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problems::{ProblemInstance, ProblemKind};
use crate::scalar::{all_finite, lit, to_f64, Real};
use crate::trace::{OracleCounters, RunTrace, SolveOutput, Stopwatch, TraceRecord};

/// Step sizes swept by the benchmark harness.
pub const STEPSIZE_GRID: [f64; 4] = [1.0, 0.1, 0.01, 0.001];

const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderConfig<T: Real> {
    pub stepsize: T,
    pub max_steps: usize,
    /// Stop once the traced gradient norm is at most this.
    pub tolerance: T,
}

impl<T: Real> FirstOrderConfig<T> {
    pub fn new(stepsize: T, max_steps: usize) -> Self {
        Self { stepsize, max_steps, tolerance: T::zero() }
    }

    pub fn with_tolerance(mut self, tolerance: T) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.stepsize > T::zero()) || !self.stepsize.is_finite() {
            return Err(Error::Config("stepsize must be positive".into()));
        }
        if !(self.tolerance >= T::zero()) {
            return Err(Error::Config("tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

fn diverged<T: Real>(z: &DVector<T>) -> bool {
    !all_finite(z) || to_f64(z.norm()) > DIVERGENCE_NORM
}

/// Extragradient: `z_{t+1/2} = z_t - eta F(z_t)`, `z_{t+1} = z_t - eta F(z_{t+1/2})`.
pub fn eg_run<T: Real>(problem: &ProblemInstance<T>, z0: &DVector<T>, cfg: &FirstOrderConfig<T>) -> Result<SolveOutput<T>> {
    cfg.validate()?;
    let eta = cfg.stepsize;
    let clock = Stopwatch::start();
    let mut counters = OracleCounters::default();
    let mut trace = RunTrace::new()
        .with_meta("method", "EG")
        .with_meta("problem", problem.label())
        .with_meta("stepsize", to_f64(eta))
        .with_meta("T", cfg.max_steps);
    let mut z = z0.clone();
    let mut metric_evals = 0u64;
    let mut steps = 0usize;
    loop {
        let f = if steps < cfg.max_steps {
            problem.eval_operator(&z, &mut counters)?
        } else {
            metric_evals += 1;
            problem.eval_operator(&z, &mut OracleCounters::default())?
        };
        trace.push(TraceRecord {
            iter: steps as u64,
            wall_time_s: clock.elapsed_s(),
            counters,
            metrics: problem.metrics_at("", &z, &f),
        });
        if steps == cfg.max_steps || f.norm() <= cfg.tolerance {
            break;
        }
        let z_half = &z - &f * eta;
        let f_half = problem.eval_operator(&z_half, &mut counters)?;
        z -= &f_half * eta;
        steps += 1;
        if diverged(&z) {
            return Err(Error::Divergence { stepsize: to_f64(eta) });
        }
    }
    trace.set_meta("steps", steps);
    trace.set_meta("metric_grad_evals", metric_evals);
    Ok(SolveOutput { z, counters, trace })
}

/// Nesterov's method: `x_{t+1} = y_t - eta grad f(y_t)`,
/// `y_{t+1} = x_{t+1} + t/(t+3) (x_{t+1} - x_t)`.
pub fn agd_run<T: Real>(problem: &ProblemInstance<T>, x0: &DVector<T>, cfg: &FirstOrderConfig<T>) -> Result<SolveOutput<T>> {
    cfg.validate()?;
    if problem.kind() != ProblemKind::Min {
        return Err(Error::Unsupported(format!("AGD needs a minimization problem, got {}", problem.kind())));
    }
    let eta = cfg.stepsize;
    let clock = Stopwatch::start();
    let mut counters = OracleCounters::default();
    let mut trace = RunTrace::new()
        .with_meta("method", "AGD")
        .with_meta("problem", problem.label())
        .with_meta("stepsize", to_f64(eta))
        .with_meta("momentum", "t/(t+3)")
        .with_meta("T", cfg.max_steps);
    let mut metric_evals = 0u64;
    let mut x = x0.clone();
    let mut y = x0.clone();
    let mut steps = 0usize;

    // At t = 0, y = x so the gradient doubles as the metric.
    let mut g_y = problem.eval_operator(&y, &mut counters)?;
    trace.push(TraceRecord { iter: 0, wall_time_s: clock.elapsed_s(), counters, metrics: problem.metrics_at("", &x, &g_y) });
    if g_y.norm() <= cfg.tolerance || g_y.iter().all(|v| *v == T::zero()) {
        trace.set_meta("steps", 0);
        trace.set_meta("metric_grad_evals", 0);
        return Ok(SolveOutput { z: x, counters, trace });
    }

    for t in 0..cfg.max_steps {
        let x_next = &y - &g_y * eta;
        let beta = lit::<T>(t as f64 / (t as f64 + 3.0));
        y = &x_next + (&x_next - &x) * beta;
        x = x_next;
        steps = t + 1;
        if diverged(&x) || diverged(&y) {
            return Err(Error::Divergence { stepsize: to_f64(eta) });
        }
        metric_evals += 1;
        let g_x = problem.model().operator(&x);
        trace.push(TraceRecord {
            iter: steps as u64,
            wall_time_s: clock.elapsed_s(),
            counters,
            metrics: problem.metrics_at("", &x, &g_x),
        });
        if g_x.norm() <= cfg.tolerance || t + 1 == cfg.max_steps {
            break;
        }
        g_y = problem.eval_operator(&y, &mut counters)?;
    }
    trace.set_meta("steps", steps);
    trace.set_meta("metric_grad_evals", metric_evals);
    Ok(SolveOutput { z: x, counters, trace })
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::problems::{make_affine, make_affine_cubic, make_hard_cubic};

    fn identity_op(d: usize) -> ProblemInstance<f64> {
        make_affine(DMatrix::identity(d, d), DVector::zeros(d)).unwrap()
    }

    #[test]
    fn eg_hand_iteration() {
        let p = identity_op(1);
        let out = eg_run(&p, &DVector::from_element(1, 1.0), &FirstOrderConfig::new(0.5, 1)).unwrap();
        assert!((out.z[0] - 0.75).abs() < 1e-15);
        assert_eq!(out.counters.grad_evals, 2);
        assert_eq!(out.counters.jac_evals, 0);
        assert_eq!(out.counters.factorizations, 0);
    }

    #[test]
    fn eg_fixed_point_and_counts() {
        let p = identity_op(3);
        let out = eg_run(&p, &DVector::zeros(3), &FirstOrderConfig::new(0.1, 10)).unwrap();
        assert_eq!(out.trace.len(), 1);
        let out = eg_run(&p, &DVector::from_element(3, 1.0), &FirstOrderConfig::new(0.1, 17)).unwrap();
        assert_eq!(out.counters.grad_evals, 34);
        assert_eq!(out.trace.len(), 18);
    }

    #[test]
    fn eg_divergence_names_stepsize() {
        let p = identity_op(2);
        let err = eg_run(&p, &DVector::from_element(2, 1.0), &FirstOrderConfig::new(10.0, 200)).unwrap_err();
        assert!(matches!(err, Error::Divergence { stepsize } if stepsize == 10.0));
    }

    #[test]
    fn agd_examples() {
        let p = make_affine_cubic(DMatrix::identity(1, 1), DVector::zeros(1), 0.0).unwrap();
        let out = agd_run(&p, &DVector::zeros(1), &FirstOrderConfig::new(1.0, 5)).unwrap();
        assert_eq!(out.trace.len(), 1);

        let out = agd_run(&p, &DVector::from_element(1, 3.0), &FirstOrderConfig::new(1.0, 1)).unwrap();
        assert_eq!(out.z[0], 0.0);
        assert_eq!(out.trace.meta("momentum"), Some("t/(t+3)"));
    }

    #[test]
    fn agd_hard_cubic_decreases_gap() {
        let p = make_hard_cubic::<f64>(5).unwrap();
        let out = agd_run(&p, &DVector::zeros(5), &FirstOrderConfig::new(0.1, 500)).unwrap();
        let first = out.trace.records[0].metrics["subopt_gap"];
        let last = out.trace.final_metric("subopt_gap").unwrap();
        assert!(last < 1e-2 * first);
        assert_eq!(out.counters.grad_evals, 500);
    }

    #[test]
    fn agd_rejects_mne() {
        let p = identity_op(2);
        assert!(matches!(agd_run(&p, &DVector::zeros(2), &FirstOrderConfig::new(0.1, 5)), Err(Error::Unsupported(_))));
    }
}
