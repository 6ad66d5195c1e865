//! Lazy extra Newton (LEN) for monotone nonlinear equations.
//!
//! Each step takes a cubic-regularized Newton half step using the Jacobian
//! snapshot `grad F(z_{pi(t)})`, `pi(t) = t - t mod m`, and then an
//! extragradient correction with the adaptive step size
//! `eta_t = 1 / (M |z_t - z_{t+1/2}|)`. With `m = 1` this is NPE.

use nalgebra::DVector;

use crate::crn::crn_step;
use crate::error::{Error, Result};
use crate::problems::ProblemInstance;
use crate::scalar::{all_finite, lit, to_f64, Real};
use crate::shifted::{factorize, SnapshotFactorization};
use crate::trace::{OracleCounters, RunTrace, Stopwatch, TraceRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct LenConfig<T: Real> {
    /// Maximum number of steps `T`.
    pub max_steps: usize,
    /// Snapshot period `m`.
    pub laziness: usize,
    /// Cubic regularization `M`; `None` means `4 m L`.
    pub m_reg: Option<T>,
    /// Stop once `|F(z_{t+1/2})| <= tolerance`.
    pub tolerance: T,
    /// Keep a trace record per step.
    pub record_trace: bool,
    /// Keep the visited points (`iterates`, `half_points`).
    pub keep_points: bool,
    /// Also trace `|F(z_out)|` every this many steps (0: final step only).
    /// These evaluations are reported as `metric_grad_evals` metadata.
    pub metric_every: usize,
}

impl<T: Real> LenConfig<T> {
    pub fn new(max_steps: usize, laziness: usize) -> Self {
        Self {
            max_steps,
            laziness,
            m_reg: None,
            tolerance: T::zero(),
            record_trace: true,
            keep_points: true,
            metric_every: 0,
        }
    }

    pub fn with_m_reg(mut self, m_reg: T) -> Self {
        self.m_reg = Some(m_reg);
        self
    }

    pub fn with_tolerance(mut self, tolerance: T) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_record_trace(mut self, record: bool) -> Self {
        self.record_trace = record;
        self
    }

    pub fn with_keep_points(mut self, keep: bool) -> Self {
        self.keep_points = keep;
        self
    }

    pub fn with_metric_every(mut self, every: usize) -> Self {
        self.metric_every = every;
        self
    }

    /// `M` after resolving the default against the problem's `L`.
    pub fn resolved_m_reg(&self, lipschitz: T) -> T {
        self.m_reg
            .unwrap_or_else(|| lit::<T>(4.0 * self.laziness as f64) * lipschitz)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::Config("LEN needs at least one step".into()));
        }
        if self.laziness == 0 {
            return Err(Error::Config("laziness m must be at least 1".into()));
        }
        if let Some(m) = self.m_reg {
            if !(m > T::zero()) || !m.is_finite() {
                return Err(Error::Config("M must be positive and finite".into()));
            }
        }
        if !(self.tolerance >= T::zero()) {
            return Err(Error::Config("tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LenOutput<T: Real> {
    /// `sum eta_t z_{t+1/2} / sum eta_t`.
    pub z_out: DVector<T>,
    pub z_last: DVector<T>,
    pub eta_weights: Vec<T>,
    /// `z_{t+1/2}` per completed step (only with `keep_points`).
    pub half_points: Vec<DVector<T>>,
    /// `z_0, z_1, ...` (only with `keep_points`).
    pub iterates: Vec<DVector<T>>,
    pub steps: usize,
    pub m_reg: T,
    pub counters: OracleCounters,
    pub trace: RunTrace,
}

/// Runs LEN from `z0`.
pub fn len_run<T: Real>(problem: &ProblemInstance<T>, z0: &DVector<T>, cfg: &LenConfig<T>) -> Result<LenOutput<T>> {
    cfg.validate()?;
    let m_reg = cfg.resolved_m_reg(problem.lipschitz());
    run(problem, z0, cfg, m_reg, "LEN")
}

/// NPE: LEN with a fresh Jacobian every step and `M = 4L`.
pub fn npe_run<T: Real>(problem: &ProblemInstance<T>, z0: &DVector<T>, cfg: &LenConfig<T>) -> Result<LenOutput<T>> {
    let cfg = LenConfig { laziness: 1, m_reg: None, ..cfg.clone() };
    cfg.validate()?;
    let m_reg = cfg.resolved_m_reg(problem.lipschitz());
    run(problem, z0, &cfg, m_reg, "NPE")
}

fn run<T: Real>(
    problem: &ProblemInstance<T>,
    z0: &DVector<T>,
    cfg: &LenConfig<T>,
    m_reg: T,
    method: &str,
) -> Result<LenOutput<T>> {
    let clock = Stopwatch::start();
    let mut counters = OracleCounters::default();
    let mut metric_evals = 0u64;
    let mut trace = RunTrace::new()
        .with_meta("method", method)
        .with_meta("problem", problem.label())
        .with_meta("m", cfg.laziness)
        .with_meta("M", to_f64(m_reg))
        .with_meta("T", cfg.max_steps);

    let mut z = z0.clone();
    let mut fz = problem.eval_operator(&z, &mut counters)?;
    if !all_finite(&fz) {
        return Err(Error::Numerical("non-finite F(z0)".into()));
    }
    let mut metrics = problem.metrics_at("", &z, &fz);
    metrics.insert("out_grad_norm".into(), to_f64(fz.norm()));
    trace.push(TraceRecord { iter: 0, wall_time_s: clock.elapsed_s(), counters, metrics });

    let mut out = LenOutput {
        z_out: z.clone(),
        z_last: z.clone(),
        eta_weights: Vec::new(),
        half_points: Vec::new(),
        iterates: if cfg.keep_points { vec![z.clone()] } else { Vec::new() },
        steps: 0,
        m_reg,
        counters,
        trace: RunTrace::new(),
    };
    if fz.norm() <= cfg.tolerance || fz.iter().all(|v| *v == T::zero()) {
        trace.set_meta("steps", 0);
        trace.set_meta("metric_grad_evals", 0);
        out.trace = trace;
        return Ok(out);
    }

    let mut fact: Option<SnapshotFactorization<T>> = None;
    let mut warm: Option<T> = None;
    let mut eta_sum = T::zero();
    let mut weighted = DVector::<T>::zeros(z.len());
    let mut stop_reason = "budget";

    for t in 0..cfg.max_steps {
        if t % cfg.laziness == 0 {
            let jac = problem.eval_jacobian(&z, &mut counters)?;
            fact = Some(factorize(&jac).map_err(|e| e.at_step(t))?);
            counters.factorizations += 1;
        }
        let snapshot = fact.as_ref().expect("snapshot taken at t = 0");
        let crn = crn_step(&fz, snapshot, m_reg, warm).map_err(|e| e.at_step(t))?;
        counters.linear_solves += crn.solves_used as u64;
        warm = Some(crn.lambda);

        let z_half = &z + &crn.step;
        let dist = crn.step.norm();
        let f_half = problem.eval_operator(&z_half, &mut counters)?;
        if !all_finite(&z_half) || !all_finite(&f_half) {
            return Err(Error::Numerical("non-finite iterate".into()).at_step(t));
        }
        out.steps = t + 1;

        if f_half.iter().all(|v| *v == T::zero()) {
            // Exact root: eta_t is undefined, return the half point itself.
            eta_sum = T::zero();
            out.z_out = z_half.clone();
            z = z_half;
            fz = f_half;
            stop_reason = "exact_root";
            push_step(problem, &mut trace, &clock, counters, t, &z, &fz, &fz, None, crn.lambda, &out.z_out, Some(&fz));
            if cfg.keep_points {
                out.iterates.push(z.clone());
            }
            break;
        }
        if dist == T::zero() {
            stop_reason = "degenerate_step";
            break;
        }

        let eta = T::one() / (m_reg * dist);
        let z_next = &z - &f_half * eta;
        if !all_finite(&z_next) {
            return Err(Error::Numerical("non-finite iterate".into()).at_step(t));
        }
        eta_sum += eta;
        weighted += &z_half * eta;
        out.eta_weights.push(eta);
        if cfg.keep_points {
            out.half_points.push(z_half.clone());
        }
        let f_next = problem.eval_operator(&z_next, &mut counters)?;
        z = z_next;
        fz = f_next;
        if cfg.keep_points {
            out.iterates.push(z.clone());
        }

        let converged = f_half.norm() <= cfg.tolerance;
        let last = converged || t + 1 == cfg.max_steps;
        if cfg.record_trace || last {
            let z_out = &weighted / eta_sum;
            let out_f = if last || (cfg.metric_every > 0 && (t + 1) % cfg.metric_every == 0) {
                metric_evals += 1;
                Some(problem.model().operator(&z_out))
            } else {
                None
            };
            push_step(problem, &mut trace, &clock, counters, t, &z, &fz, &f_half, Some(eta), crn.lambda, &z_out, out_f.as_ref());
        }
        if converged {
            stop_reason = "tolerance";
            break;
        }
    }

    if eta_sum > T::zero() {
        out.z_out = &weighted / eta_sum;
    } else if stop_reason != "exact_root" {
        out.z_out = z.clone();
    }
    if stop_reason == "degenerate_step" {
        push_step(problem, &mut trace, &clock, counters, out.steps - 1, &z, &fz, &fz, None, T::zero(), &out.z_out, None);
    }
    out.z_last = z;
    out.counters = counters;
    trace.set_meta("steps", out.steps);
    trace.set_meta("stop", stop_reason);
    trace.set_meta("metric_grad_evals", metric_evals);
    out.trace = trace;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn push_step<T: Real>(
    problem: &ProblemInstance<T>,
    trace: &mut RunTrace,
    clock: &Stopwatch,
    counters: OracleCounters,
    t: usize,
    z: &DVector<T>,
    fz: &DVector<T>,
    f_half: &DVector<T>,
    eta: Option<T>,
    lambda: T,
    z_out: &DVector<T>,
    f_out: Option<&DVector<T>>,
) {
    if trace.last().is_some_and(|r| r.iter == t as u64 + 1) {
        return;
    }
    let mut metrics = problem.metrics_at("", z, fz);
    metrics.insert("half_grad_norm".into(), to_f64(f_half.norm()));
    metrics.insert("crn_lambda".into(), to_f64(lambda));
    if let Some(eta) = eta {
        metrics.insert("eta".into(), to_f64(eta));
    }
    if let Some(g) = problem.subopt_gap(z_out) {
        metrics.insert("out_subopt_gap".into(), to_f64(g));
    }
    if let Some(d) = problem.dist_sq(z_out) {
        metrics.insert("out_dist_sq".into(), to_f64(d));
    }
    if let Some(f) = f_out {
        metrics.insert("out_grad_norm".into(), to_f64(f.norm()));
    }
    trace.push(TraceRecord { iter: t as u64 + 1, wall_time_s: clock.elapsed_s(), counters, metrics });
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::problems::{make_affine, make_hard_cubic, random_monotone_matrix};

    #[test]
    fn root_start_takes_no_steps() {
        let b = DMatrix::<f64>::identity(2, 2);
        let p = make_affine(b, DVector::zeros(2)).unwrap();
        let out = len_run(&p, &DVector::zeros(2), &LenConfig::new(10, 1)).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.z_out, DVector::zeros(2));
        assert_eq!(out.counters.grad_evals, 1);
    }

    #[test]
    fn counter_law_and_step_size_law() {
        let p = make_hard_cubic::<f64>(6).unwrap();
        let z0 = DVector::zeros(6);
        for (m, expect) in [(1, 23), (4, 6), (23, 1), (50, 1)] {
            let out = len_run(&p, &z0, &LenConfig::new(23, m)).unwrap();
            assert_eq!(out.steps, 23);
            assert_eq!(out.counters.jac_evals, expect);
            assert_eq!(out.counters.factorizations, expect);
            assert_eq!(out.counters.grad_evals, 1 + 2 * 23);
            for (eta, (zh, zt)) in out.eta_weights.iter().zip(out.half_points.iter().zip(&out.iterates)) {
                assert!(*eta > 0.0);
                assert!((eta * out.m_reg * (zt - zh).norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn z_out_is_eta_weighted_mean() {
        let p = make_hard_cubic::<f64>(4).unwrap();
        let out = len_run(&p, &DVector::from_element(4, 0.5), &LenConfig::new(12, 3)).unwrap();
        let s: f64 = out.eta_weights.iter().sum();
        let mut acc = DVector::zeros(4);
        for (e, zh) in out.eta_weights.iter().zip(&out.half_points) {
            acc += zh * *e;
        }
        assert!((acc / s - &out.z_out).amax() < 1e-12);
    }

    #[test]
    fn affine_laziness_is_a_no_op() {
        let b = random_monotone_matrix::<f64>(8, 0.0, 1.0, 2);
        let p = make_affine(b, DVector::from_element(8, 1.0)).unwrap();
        let z0 = DVector::zeros(8);
        let a = len_run(&p, &z0, &LenConfig::new(20, 1)).unwrap();
        let b = len_run(&p, &z0, &LenConfig::new(20, 10).with_m_reg(a.m_reg)).unwrap();
        for (x, y) in a.iterates.iter().zip(&b.iterates) {
            assert!((x - y).amax() < 1e-9);
        }
    }

    #[test]
    fn npe_matches_len_with_m_one() {
        let p = make_hard_cubic::<f64>(5).unwrap();
        let z0 = DVector::zeros(5);
        let a = npe_run(&p, &z0, &LenConfig::new(15, 7)).unwrap();
        let b = len_run(&p, &z0, &LenConfig::new(15, 1)).unwrap();
        assert_eq!(a.counters.jac_evals, 15);
        assert_eq!(a.z_out, b.z_out);
        for (x, y) in a.trace.records.iter().zip(&b.trace.records) {
            assert_eq!(x.metrics, y.metrics);
            assert_eq!(x.counters, y.counters);
        }
    }

    #[test]
    fn tolerance_stops_early() {
        let p = make_hard_cubic::<f64>(4).unwrap();
        let out = len_run(&p, &DVector::zeros(4), &LenConfig::new(1000, 1).with_tolerance(1e-6)).unwrap();
        assert!(out.steps < 1000);
        assert_eq!(out.trace.meta("stop"), Some("tolerance"));
        assert!(out.trace.final_metric("half_grad_norm").unwrap() <= 1e-6);
    }

    #[test]
    fn invalid_configs() {
        let p = make_hard_cubic::<f64>(2).unwrap();
        let z0 = DVector::zeros(2);
        assert!(len_run(&p, &z0, &LenConfig::new(0, 1)).is_err());
        assert!(len_run(&p, &z0, &LenConfig::new(5, 0)).is_err());
        assert!(len_run(&p, &z0, &LenConfig::new(5, 1).with_m_reg(-1.0)).is_err());
        assert!(len_run(&p, &DVector::zeros(3), &LenConfig::new(5, 1)).is_err());
    }
}
