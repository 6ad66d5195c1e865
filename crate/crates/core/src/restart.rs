//! Restarted LEN and A-LEN for strongly monotone / strongly convex problems.
//!
//! Each epoch runs the base method from the previous epoch's output for a
//! fixed budget; the distance to the solution contracts superlinearly
//! across epochs.

use nalgebra::DVector;

use crate::alen::{alen_run, MsConfig};
use crate::error::{Error, Result};
use crate::len::{len_run, LenConfig};
use crate::problems::{ProblemInstance, ProblemKind};
use crate::scalar::{lit, to_f64, Real};
use crate::trace::{OracleCounters, RunTrace};

pub const DEFAULT_BUDGET_CONSTANT: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RestartConfig<T: Real> {
    /// Number of epochs `S`; default from `eps`.
    pub epochs: Option<usize>,
    /// Steps per epoch `T`; default from the method's formula.
    pub epoch_budget: Option<usize>,
    pub laziness: usize,
    /// Target on `|z - z*|^2 / R0^2`.
    pub eps: T,
    /// Bound `R0 >= |z0 - z*|`; default `|F(z0)| / mu`.
    pub radius_bound: Option<T>,
    /// LEN regularization; default `4 m L`.
    pub m_reg: Option<T>,
    /// Constant `C` of the A-LEN epoch budget `C (gamma/mu)^(2/7)`.
    pub budget_constant: T,
}

impl<T: Real> RestartConfig<T> {
    pub fn new(laziness: usize, eps: T) -> Self {
        Self {
            epochs: None,
            epoch_budget: None,
            laziness,
            eps,
            radius_bound: None,
            m_reg: None,
            budget_constant: lit(DEFAULT_BUDGET_CONSTANT),
        }
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = Some(epochs);
        self
    }

    pub fn with_epoch_budget(mut self, budget: usize) -> Self {
        self.epoch_budget = Some(budget);
        self
    }

    pub fn with_radius_bound(mut self, r0: T) -> Self {
        self.radius_bound = Some(r0);
        self
    }

    pub fn with_m_reg(mut self, m_reg: T) -> Self {
        self.m_reg = Some(m_reg);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.laziness == 0 {
            return Err(Error::Config("laziness m must be at least 1".into()));
        }
        if self.epochs == Some(0) || self.epoch_budget == Some(0) {
            return Err(Error::Config("epochs and epoch budget must be positive".into()));
        }
        if self.epochs.is_none() && !(self.eps > T::zero() && self.eps < T::one()) {
            return Err(Error::Config("eps must lie in (0, 1)".into()));
        }
        if let Some(r) = self.radius_bound {
            if !(r >= T::zero()) || !r.is_finite() {
                return Err(Error::Config("radius bound must be nonnegative".into()));
            }
        }
        Ok(())
    }

    pub fn resolved_epochs(&self) -> usize {
        self.epochs.unwrap_or_else(|| auto_epochs(to_f64(self.eps)))
    }
}

/// `ceil(log_{3/2} log_2(1/eps))`, at least 1.
pub fn auto_epochs(eps: f64) -> usize {
    let inner = (1.0 / eps).log2();
    if inner <= 1.0 {
        return 1;
    }
    // Guard against ceil of values like 4.000000000000001.
    let s = inner.ln() / 1.5f64.ln();
    let r = s.round();
    let s = if (s - r).abs() < 1e-9 { r } else { s.ceil() };
    (s as usize).max(1)
}

/// `ceil((2 M R0 / mu)^(2/3))`, at least 1.
pub fn len_epoch_budget(m_reg: f64, r0: f64, mu: f64) -> usize {
    ((2.0 * m_reg * r0 / mu).powf(2.0 / 3.0).ceil() as usize).max(1)
}

/// `ceil(C (gamma / mu)^(2/7))`, at least 1.
pub fn alen_epoch_budget(constant: f64, gamma: f64, mu: f64) -> usize {
    ((constant * (gamma / mu).powf(2.0 / 7.0)).ceil() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochSummary {
    pub steps: usize,
    pub budget: usize,
    pub counters: OracleCounters,
    /// `|z^(s) - z*|^2` at the end of the epoch, when `z*` is known.
    pub dist_sq: Option<f64>,
    /// Progress metric at the epoch's start and end (A-LEN restart only).
    pub progress: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct RestartOutput<T: Real> {
    pub z: DVector<T>,
    pub epochs: Vec<EpochSummary>,
    pub counters: OracleCounters,
    pub trace: RunTrace,
}

fn append_epoch(trace: &mut RunTrace, inner: &RunTrace, epoch: usize, dist: Option<f64>) {
    trace.append_shifted(inner);
    if let Some(last) = trace.records.last_mut() {
        last.metrics.insert("epoch".into(), epoch as f64);
        if let Some(d) = dist {
            last.metrics.insert("epoch_dist_sq".into(), d);
        }
    }
}

/// LEN restarted every `T` steps from the averaged output.
pub fn len_restart<T: Real>(problem: &ProblemInstance<T>, z0: &DVector<T>, cfg: &RestartConfig<T>) -> Result<RestartOutput<T>> {
    cfg.validate()?;
    let mu = problem.strong_mu();
    if !(mu > T::zero()) {
        return Err(Error::Config("restart needs a strongly monotone problem (mu > 0)".into()));
    }
    let m = cfg.laziness;
    let m_reg = cfg.m_reg.unwrap_or_else(|| lit::<T>(4.0 * m as f64) * problem.lipschitz());
    let (r0, setup_evals) = match cfg.radius_bound {
        Some(r) => (r, 0),
        None => (problem.model().operator(z0).norm() / mu, 1),
    };
    let budget = cfg
        .epoch_budget
        .unwrap_or_else(|| len_epoch_budget(to_f64(m_reg), to_f64(r0), to_f64(mu)));
    let epochs = cfg.resolved_epochs();

    let mut trace = RunTrace::new()
        .with_meta("method", "LEN-restart")
        .with_meta("problem", problem.label())
        .with_meta("m", m)
        .with_meta("M", to_f64(m_reg))
        .with_meta("R0", to_f64(r0))
        .with_meta("epoch_budget", budget)
        .with_meta("epochs", epochs)
        .with_meta("setup_grad_evals", setup_evals);
    let mut counters = OracleCounters::default();
    let mut summaries = Vec::with_capacity(epochs);
    let mut metric_evals = 0u64;
    let mut z = z0.clone();
    let len_cfg = LenConfig::new(budget, m).with_m_reg(m_reg).with_keep_points(false);
    for s in 0..epochs {
        let out = len_run(problem, &z, &len_cfg).map_err(|e| e.at_epoch(s))?;
        z = out.z_out;
        counters += out.counters;
        metric_evals += out.trace.meta("metric_grad_evals").and_then(|v| v.parse::<u64>().ok()).unwrap_or(0);
        let dist = problem.dist_sq(&z).map(to_f64);
        append_epoch(&mut trace, &out.trace, s, dist);
        summaries.push(EpochSummary { steps: out.steps, budget, counters: out.counters, dist_sq: dist, progress: None });
    }
    trace.set_meta("metric_grad_evals", metric_evals);
    Ok(RestartOutput { z, epochs: summaries, counters, trace })
}

/// A-LEN restarted every `T` outer iterations; `T` doubles after an epoch
/// that fails to halve the progress metric (`f - f*` if known, else
/// `|grad f|^2`).
pub fn alen_restart<T: Real>(
    problem: &ProblemInstance<T>,
    z0: &DVector<T>,
    cfg: &RestartConfig<T>,
    ms_cfg: &MsConfig<T>,
    alpha: T,
) -> Result<RestartOutput<T>> {
    cfg.validate()?;
    if problem.kind() != ProblemKind::Min {
        return Err(Error::Unsupported(format!("A-LEN restart needs a minimization problem, got {}", problem.kind())));
    }
    let mu = problem.strong_mu();
    if !(mu > T::zero()) {
        return Err(Error::Config("restart needs a strongly convex problem (mu > 0)".into()));
    }
    let params = ms_cfg.resolve(problem.lipschitz())?;
    let mut budget = cfg.epoch_budget.unwrap_or_else(|| {
        alen_epoch_budget(to_f64(cfg.budget_constant), to_f64(params.gamma), to_f64(mu))
    });
    let epochs = cfg.resolved_epochs();
    let mut trace = RunTrace::new()
        .with_meta("method", "A-LEN-restart")
        .with_meta("problem", problem.label())
        .with_meta("m", params.laziness)
        .with_meta("gamma", to_f64(params.gamma))
        .with_meta("initial_epoch_budget", budget)
        .with_meta("epochs", epochs);
    let mut counters = OracleCounters::default();
    let mut summaries = Vec::with_capacity(epochs);
    let mut doublings = 0usize;
    let mut z = z0.clone();
    let progress = |r: &crate::trace::TraceRecord| {
        r.metrics
            .get("subopt_gap")
            .copied()
            .or_else(|| r.metrics.get("grad_norm").map(|g| g * g))
    };

    for s in 0..epochs {
        let out = alen_run(problem, &z, budget, alpha, ms_cfg, T::zero()).map_err(|e| e.at_epoch(s))?;
        z = out.z;
        counters += out.counters;
        let start = out.trace.records.first().and_then(progress);
        let end = out.trace.records.last().and_then(progress);
        let dist = problem.dist_sq(&z).map(to_f64);
        append_epoch(&mut trace, &out.trace, s, dist);
        summaries.push(EpochSummary {
            steps: out.iterations,
            budget,
            counters: out.counters,
            dist_sq: dist,
            progress: start.zip(end),
        });
        if let (Some(a), Some(b)) = (start, end) {
            if b <= 0.0 {
                break;
            }
            if b > 0.5 * a {
                budget *= 2;
                doublings += 1;
                if let Some(last) = trace.records.last_mut() {
                    last.metrics.insert("budget_doubled".into(), budget as f64);
                }
            }
        }
    }
    trace.set_meta("doublings", doublings);
    Ok(RestartOutput { z, epochs: summaries, counters, trace })
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::problems::{make_affine, make_affine_cubic, random_monotone_matrix};

    #[test]
    fn epoch_formula() {
        let eps = 2f64.powf(-(1.5f64.powi(4)));
        assert_eq!(auto_epochs(eps), 4);
        assert_eq!(auto_epochs(0.9), 1);
        assert_eq!(alen_epoch_budget(4.0, 1.0, 1.0), 4);
        assert_eq!(len_epoch_budget(1.0, 0.0, 1.0), 1);
    }

    #[test]
    fn zero_mu_is_rejected() {
        let p = make_affine(DMatrix::<f64>::zeros(2, 2), DVector::zeros(2)).unwrap();
        assert!(matches!(
            len_restart(&p, &DVector::zeros(2), &RestartConfig::new(1, 1e-3)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn start_at_solution_stays() {
        let b = random_monotone_matrix::<f64>(4, 1.0, 0.5, 1);
        let p = make_affine(b, DVector::zeros(4)).unwrap();
        let out = len_restart(&p, &DVector::zeros(4), &RestartConfig::new(2, 1e-6)).unwrap();
        assert_eq!(out.z, DVector::zeros(4));
        assert!(out.epochs.iter().all(|e| e.steps == 0));
    }

    #[test]
    fn affine_epoch_halves_distance() {
        let b = random_monotone_matrix::<f64>(6, 0.5, 1.0, 7);
        let p = make_affine(b, DVector::from_element(6, 1.0)).unwrap();
        let z0 = DVector::zeros(6);
        let d0 = p.dist_sq(&z0).unwrap();
        let out = len_restart(&p, &z0, &RestartConfig::new(1, 1e-3).with_epochs(1)).unwrap();
        assert!(out.epochs[0].dist_sq.unwrap() <= 0.5 * d0);
    }

    #[test]
    fn counters_are_additive() {
        let b = random_monotone_matrix::<f64>(5, 0.5, 0.3, 3);
        let p = make_affine(b, DVector::from_element(5, -1.0)).unwrap();
        let out = len_restart(&p, &DVector::zeros(5), &RestartConfig::new(2, 1e-4).with_epochs(3)).unwrap();
        let sum = out.epochs.iter().fold(OracleCounters::default(), |a, e| a + e.counters);
        assert_eq!(sum, out.counters);
        assert_eq!(out.trace.final_counters(), out.counters);
        assert!(out.trace.validate().is_ok());
    }

    #[test]
    fn alen_restart_on_quadratic() {
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 4.0]));
        let p = make_affine_cubic(b, DVector::from_vec(vec![1.0, -1.0, 2.0]), 0.0).unwrap();
        let z0 = DVector::zeros(3);
        let d0 = p.dist_sq(&z0).unwrap();
        let out = alen_restart(&p, &z0, &RestartConfig::new(1, 1e-6).with_epochs(2), &MsConfig::new(1), 2.0).unwrap();
        assert!(out.epochs[0].dist_sq.unwrap() <= 0.5 * d0);
    }
}
