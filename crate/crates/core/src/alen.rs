//! Accelerated lazy extra Newton (A-LEN) for convex minimization.
//!
//! The outer loop is a Monteiro-Svaiter acceleration driven by an MS oracle.
//! The oracle ([`ms_solve`]) approximately minimizes the second-order
//! proximal function
//!
//! ```text
//! g(z) = f(z) + (gamma/3) |z - z̄|^3
//! ```
//!
//! with lazy CRN steps, and certifies its output with the checkable
//! condition `|grad g(z)| <= sigma gamma |z - z̄|^2`.
//!
//! Also here: lazy CRN on `f` itself and A-NPE (single CRN step as oracle).

use nalgebra::{DMatrix, DVector};

use crate::crn::crn_step;
use crate::error::{Error, Result};
use crate::problems::{JacobianMatrix, ProblemInstance, ProblemKind};
use crate::scalar::{all_finite, lit, to_f64, Real};
use crate::shifted::factorize;
use crate::trace::{OracleCounters, RunTrace, SolveOutput, Stopwatch, TraceRecord};

pub const DEFAULT_SIGMA: f64 = 0.99;
pub const DEFAULT_ALPHA: f64 = 2.0;

/// Settings of the MS oracle. `None` fields resolve automatically.
#[derive(Debug, Clone, PartialEq)]
pub struct MsConfig<T: Real> {
    /// Proximal weight; default `L / m`.
    pub gamma: Option<T>,
    pub laziness: usize,
    /// Inner CRN regularization; default `6 m (L + 2 gamma)`.
    pub m_reg: Option<T>,
    /// Inner step budget `K`.
    pub budget: Option<usize>,
    pub sigma: T,
}

impl<T: Real> MsConfig<T> {
    pub fn new(laziness: usize) -> Self {
        Self { gamma: None, laziness, m_reg: None, budget: None, sigma: lit(DEFAULT_SIGMA) }
    }

    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_m_reg(mut self, m_reg: T) -> Self {
        self.m_reg = Some(m_reg);
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = sigma;
        self
    }

    /// Fills in the defaults for a problem with Hessian Lipschitz constant `L`.
    pub fn resolve(&self, lipschitz: T) -> Result<MsParams<T>> {
        let m = self.laziness;
        if m == 0 {
            return Err(Error::Config("laziness m must be at least 1".into()));
        }
        if !(self.sigma > T::zero() && self.sigma <= lit(DEFAULT_SIGMA)) {
            return Err(Error::Config("sigma must lie in (0, 0.99]".into()));
        }
        let gamma = self.gamma.unwrap_or_else(|| lipschitz / lit::<T>(m as f64));
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::Config("gamma must be positive".into()));
        }
        let m_reg = self
            .m_reg
            .unwrap_or_else(|| lit::<T>(6.0 * m as f64) * (lipschitz + gamma + gamma));
        if !(m_reg > T::zero()) || !m_reg.is_finite() {
            return Err(Error::Config("M must be positive and finite".into()));
        }

        let (l, g, mm, s) = (to_f64(lipschitz), to_f64(gamma), to_f64(m_reg), to_f64(self.sigma));
        let c = 1.0 / (2.0 * (1.0 + 2.0 * s));
        let root = (mm / g).sqrt();
        let budget_auto = (1.5 * (m as f64 + 98.0 * root) * (l / (c * g)).ln()).ceil().max(1.0);
        let budget_cap = (10.0 * (m as f64 + root) * (10.0 + l / g).ln()).ceil().max(1.0);
        let budget = match self.budget {
            Some(0) => return Err(Error::Config("inner budget K must be positive".into())),
            Some(k) => k,
            None => budget_auto.min(budget_cap) as usize,
        };
        Ok(MsParams {
            gamma,
            laziness: m,
            m_reg,
            budget,
            epochs: budget.div_ceil(m),
            sigma: self.sigma,
            lipschitz,
            budget_auto,
            budget_cap,
        })
    }
}

/// Resolved MS-oracle parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MsParams<T: Real> {
    pub gamma: T,
    pub laziness: usize,
    pub m_reg: T,
    pub budget: usize,
    /// `S = ceil(K / m)`.
    pub epochs: usize,
    pub sigma: T,
    pub lipschitz: T,
    /// Uncapped automatic budget.
    pub budget_auto: f64,
    pub budget_cap: f64,
}

#[derive(Debug, Clone)]
pub struct MsOutput<T: Real> {
    pub z_ms: DVector<T>,
    /// `gamma |z_ms - z̄|`.
    pub lambda: T,
    pub verified: bool,
    pub grad_f: DVector<T>,
    pub grad_g_norm: T,
    pub epochs_run: usize,
    pub inner_steps: usize,
    pub counters: OracleCounters,
    pub trace: RunTrace,
}

struct Prox<'a, T: Real> {
    problem: &'a ProblemInstance<T>,
    z_bar: &'a DVector<T>,
    gamma: T,
}

impl<T: Real> Prox<'_, T> {
    /// `(grad f(z), grad g(z))`.
    fn grads(&self, z: &DVector<T>, counters: &mut OracleCounters) -> Result<(DVector<T>, DVector<T>)> {
        let gf = self.problem.eval_operator(z, counters)?;
        let w = z - self.z_bar;
        let gg = &gf + &w * (self.gamma * w.norm());
        if !all_finite(&gg) {
            return Err(Error::Numerical("non-finite proximal gradient".into()));
        }
        Ok((gf, gg))
    }

    fn hessian(&self, z: &DVector<T>, counters: &mut OracleCounters) -> Result<JacobianMatrix<T>> {
        let mut h = self.problem.eval_jacobian(z, counters)?;
        let w = z - self.z_bar;
        let nw = w.norm();
        if nw > T::zero() {
            let mut extra: DMatrix<T> = &w * w.transpose() * (self.gamma / nw);
            for i in 0..w.len() {
                extra[(i, i)] += self.gamma * nw;
            }
            h.entries += extra;
        }
        Ok(h)
    }

    /// `|grad g(z)| / (gamma |z - z̄|^2)`; infinite at `z = z̄`.
    fn ratio(&self, z: &DVector<T>, gg: &DVector<T>) -> T {
        let d2 = (z - self.z_bar).norm_squared();
        if d2 == T::zero() {
            return T::max_value().unwrap_or_else(T::one);
        }
        gg.norm() / (self.gamma * d2)
    }
}

/// Approximate minimizer of `g` around `z̄`, with its certificate.
pub fn ms_solve<T: Real>(problem: &ProblemInstance<T>, z_bar: &DVector<T>, cfg: &MsConfig<T>) -> Result<MsOutput<T>> {
    let params = cfg.resolve(problem.lipschitz())?;
    ms_solve_resolved(problem, z_bar, &params)
}

/// As [`ms_solve`] with already-resolved parameters.
pub fn ms_solve_resolved<T: Real>(
    problem: &ProblemInstance<T>,
    z_bar: &DVector<T>,
    params: &MsParams<T>,
) -> Result<MsOutput<T>> {
    if problem.kind() != ProblemKind::Min {
        return Err(Error::Unsupported(format!("MS solver needs a minimization problem, got {}", problem.kind())));
    }
    let clock = Stopwatch::start();
    let mut counters = OracleCounters::default();
    let prox = Prox { problem, z_bar, gamma: params.gamma };
    let mut trace = RunTrace::new()
        .with_meta("method", "MS-Solver")
        .with_meta("gamma", to_f64(params.gamma))
        .with_meta("M", to_f64(params.m_reg))
        .with_meta("K", params.budget)
        .with_meta("K_auto", params.budget_auto)
        .with_meta("K_cap", params.budget_cap);

    let (gf_bar, gg_bar) = prox.grads(z_bar, &mut counters)?;
    if gf_bar.iter().all(|v| *v == T::zero()) {
        trace.set_meta("source", "stationary");
        return Ok(MsOutput {
            z_ms: z_bar.clone(),
            lambda: T::zero(),
            verified: true,
            grad_f: gf_bar,
            grad_g_norm: T::zero(),
            epochs_run: 0,
            inner_steps: 0,
            counters,
            trace,
        });
    }

    let mut iter = 0u64;
    let mut inner_steps = 0usize;
    let mut epochs_run = 0usize;
    let mut warm_m: Option<T> = None;
    let threshold = params.sigma;

    let mut record = |trace: &mut RunTrace, counters: OracleCounters, ratio: T, gg: &DVector<T>, kind: f64| {
        let mut metrics = std::collections::BTreeMap::new();
        metrics.insert("grad_g_norm".to_string(), to_f64(gg.norm()));
        metrics.insert("sigma_ratio".to_string(), to_f64(ratio));
        metrics.insert("point_kind".to_string(), kind);
        trace.push(TraceRecord { iter, wall_time_s: clock.elapsed_s(), counters, metrics });
        iter += 1;
    };
    let finish = |z: DVector<T>, gf: DVector<T>, gg: &DVector<T>, verified: bool, source: &str,
                  counters: OracleCounters, mut trace: RunTrace, epochs_run: usize, inner_steps: usize| {
        trace.set_meta("source", source);
        trace.set_meta("verified", verified);
        let lambda = prox.gamma * (&z - z_bar).norm();
        MsOutput {
            z_ms: z,
            lambda,
            verified,
            grad_f: gf,
            grad_g_norm: gg.norm(),
            epochs_run,
            inner_steps,
            counters,
            trace,
        }
    };

    // Bootstrap: one CRN step with M = L on the exact Hessian at z̄.
    let h0 = prox.hessian(z_bar, &mut counters)?;
    let mut fact = factorize(&h0)?;
    counters.factorizations += 1;
    let crn = crn_step(&gg_bar, &fact, params.lipschitz, None)?;
    counters.linear_solves += crn.solves_used as u64;
    let mut warm_l = Some(crn.lambda);
    let mut anchor = z_bar + &crn.step;
    let (mut gf_anchor, mut gg_anchor) = prox.grads(&anchor, &mut counters)?;
    let r = prox.ratio(&anchor, &gg_anchor);
    record(&mut trace, counters, r, &gg_anchor, 0.0);
    if r <= threshold {
        return Ok(finish(anchor, gf_anchor, &gg_anchor, true, "bootstrap", counters, trace, 0, 0));
    }

    for s in 0..=params.epochs {
        // Snapshot at the anchor, shared by the polish candidate and epoch s.
        let h = prox.hessian(&anchor, &mut counters)?;
        fact = factorize(&h).map_err(|e| e.at_epoch(s))?;
        counters.factorizations += 1;

        let crn = crn_step(&gg_anchor, &fact, params.lipschitz, warm_l).map_err(|e| e.at_epoch(s))?;
        counters.linear_solves += crn.solves_used as u64;
        warm_l = Some(crn.lambda);
        let polish = &anchor + &crn.step;
        let (gf_p, gg_p) = prox.grads(&polish, &mut counters)?;
        let r = prox.ratio(&polish, &gg_p);
        record(&mut trace, counters, r, &gg_p, 1.0);
        if r <= threshold || s == params.epochs {
            let verified = r <= threshold;
            return Ok(finish(polish, gf_p, &gg_p, verified, "polish", counters, trace, epochs_run, inner_steps));
        }

        let mut z = anchor.clone();
        let mut gg = gg_anchor.clone();
        let mut sum = DVector::<T>::zeros(z.len());
        for _ in 0..params.laziness {
            let crn = crn_step(&gg, &fact, params.m_reg, warm_m).map_err(|e| e.at_epoch(s))?;
            counters.linear_solves += crn.solves_used as u64;
            warm_m = Some(crn.lambda);
            z += &crn.step;
            inner_steps += 1;
            let (gf, g) = prox.grads(&z, &mut counters)?;
            gg = g;
            let r = prox.ratio(&z, &gg);
            record(&mut trace, counters, r, &gg, 2.0);
            if r <= threshold {
                return Ok(finish(z, gf, &gg, true, "inner", counters, trace, epochs_run + 1, inner_steps));
            }
            sum += &z;
        }
        epochs_run += 1;
        anchor = sum / lit::<T>(params.laziness as f64);
        let (gf, gg) = prox.grads(&anchor, &mut counters)?;
        gf_anchor = gf;
        gg_anchor = gg;
        let r = prox.ratio(&anchor, &gg_anchor);
        record(&mut trace, counters, r, &gg_anchor, 3.0);
        if r <= threshold {
            return Ok(finish(anchor, gf_anchor, &gg_anchor, true, "anchor", counters, trace, epochs_run, inner_steps));
        }
    }
    unreachable!("the final epoch always returns its polish candidate")
}

/// Momentum state of the accelerated outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelState<T: Real> {
    /// `A_t`.
    pub a_total: T,
    /// `lambda'_{t+1}`.
    pub lambda_guess: T,
    pub z: DVector<T>,
    pub v: DVector<T>,
    pub alpha: T,
}

#[derive(Debug, Clone)]
pub struct AlenOutput<T: Real> {
    pub z: DVector<T>,
    pub state: AccelState<T>,
    pub iterations: usize,
    /// MS results accepted without certificate.
    pub unverified: usize,
    pub counters: OracleCounters,
    pub trace: RunTrace,
}

struct OracleStep<T: Real> {
    z: DVector<T>,
    lambda: T,
    verified: bool,
}

enum Oracle<T: Real> {
    Lazy(MsParams<T>),
    /// One CRN step with this `M` and `lambda = (M/2)|z - z̄|`.
    SingleCrn(T),
}

impl<T: Real> Oracle<T> {
    fn call(&self, problem: &ProblemInstance<T>, z_bar: &DVector<T>, counters: &mut OracleCounters) -> Result<OracleStep<T>> {
        match self {
            Oracle::Lazy(params) => {
                let out = ms_solve_resolved(problem, z_bar, params)?;
                *counters += out.counters;
                Ok(OracleStep { z: out.z_ms, lambda: out.lambda, verified: out.verified })
            }
            Oracle::SingleCrn(m_reg) => {
                let g = problem.eval_operator(z_bar, counters)?;
                if g.iter().all(|v| *v == T::zero()) {
                    return Ok(OracleStep { z: z_bar.clone(), lambda: T::zero(), verified: true });
                }
                let h = problem.eval_jacobian(z_bar, counters)?;
                let fact = factorize(&h)?;
                counters.factorizations += 1;
                let crn = crn_step(&g, &fact, *m_reg, None)?;
                counters.linear_solves += crn.solves_used as u64;
                let lambda = *m_reg * lit::<T>(0.5) * crn.step.norm();
                Ok(OracleStep { z: z_bar + crn.step, lambda, verified: true })
            }
        }
    }
}

/// A-LEN: `iterations` outer steps after the bootstrap oracle call.
///
/// Stops early once `f(z) - f* <= tol` (when `f*` is known) or
/// `|grad f(z)| <= tol`.
pub fn alen_run<T: Real>(
    problem: &ProblemInstance<T>,
    z0: &DVector<T>,
    iterations: usize,
    alpha: T,
    ms_cfg: &MsConfig<T>,
    tol: T,
) -> Result<AlenOutput<T>> {
    let params = ms_cfg.resolve(problem.lipschitz())?;
    let trace = RunTrace::new()
        .with_meta("method", "A-LEN")
        .with_meta("m", params.laziness)
        .with_meta("M", to_f64(params.m_reg))
        .with_meta("gamma", to_f64(params.gamma))
        .with_meta("sigma", to_f64(params.sigma))
        .with_meta("K", params.budget)
        .with_meta("K_auto", params.budget_auto)
        .with_meta("K_cap", params.budget_cap);
    accelerated(problem, z0, iterations, alpha, Oracle::Lazy(params), tol, trace)
}

/// A-NPE: the accelerated loop with a single CRN step (`M = 2L`) as MS oracle.
pub fn anpe_run<T: Real>(
    problem: &ProblemInstance<T>,
    z0: &DVector<T>,
    iterations: usize,
    alpha: T,
    tol: T,
) -> Result<AlenOutput<T>> {
    let m_reg = problem.lipschitz() * lit::<T>(2.0);
    let trace = RunTrace::new()
        .with_meta("method", "A-NPE")
        .with_meta("m", 1)
        .with_meta("M", to_f64(m_reg))
        .with_meta("gamma", to_f64(m_reg * lit::<T>(0.5)))
        .with_meta("sigma", 0.5);
    accelerated(problem, z0, iterations, alpha, Oracle::SingleCrn(m_reg), tol, trace)
}

fn accelerated<T: Real>(
    problem: &ProblemInstance<T>,
    z0: &DVector<T>,
    iterations: usize,
    alpha: T,
    oracle: Oracle<T>,
    tol: T,
    mut trace: RunTrace,
) -> Result<AlenOutput<T>> {
    if problem.kind() != ProblemKind::Min {
        return Err(Error::Unsupported(format!("accelerated loop needs a minimization problem, got {}", problem.kind())));
    }
    if !(alpha > T::one()) || !alpha.is_finite() {
        return Err(Error::Config("alpha must exceed 1".into()));
    }
    if iterations == 0 {
        return Err(Error::Config("at least one outer iteration is required".into()));
    }
    if !(tol >= T::zero()) {
        return Err(Error::Config("tolerance must be nonnegative".into()));
    }
    if z0.len() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: z0.len() });
    }
    trace.set_meta("problem", problem.label());
    trace.set_meta("alpha", to_f64(alpha));
    trace.set_meta("T", iterations);

    let clock = Stopwatch::start();
    let mut counters = OracleCounters::default();
    let mut metric_evals = 0u64;
    let mut unverified = 0usize;

    let g0 = problem.model().operator(z0);
    metric_evals += 1;
    trace.push(TraceRecord {
        iter: 0,
        wall_time_s: clock.elapsed_s(),
        counters,
        metrics: problem.metrics_at("", z0, &g0),
    });

    let mut state = AccelState {
        a_total: T::zero(),
        lambda_guess: T::one(),
        z: z0.clone(),
        v: z0.clone(),
        alpha,
    };
    let done = |z: &DVector<T>, g: &DVector<T>| {
        problem.subopt_gap(z).is_some_and(|gap| gap <= tol) || g.norm() <= tol
    };
    if done(z0, &g0) {
        trace.set_meta("iterations", 0);
        trace.set_meta("metric_grad_evals", metric_evals);
        return Ok(AlenOutput { z: z0.clone(), state, iterations: 0, unverified, counters, trace });
    }

    let mut tilde = oracle.call(problem, z0, &mut counters)?;
    if !tilde.verified {
        unverified += 1;
    }
    if tilde.lambda == T::zero() {
        trace.set_meta("iterations", 0);
        trace.set_meta("stop", "stationary");
        trace.set_meta("metric_grad_evals", metric_evals);
        return Ok(AlenOutput { z: tilde.z, state, iterations: 0, unverified, counters, trace });
    }
    state.lambda_guess = tilde.lambda;

    let two = lit::<T>(2.0);
    let four = lit::<T>(4.0);
    let mut completed = 0usize;
    let mut stop = "budget";
    for t in 0..iterations {
        let lp = state.lambda_guess;
        let a_prev = state.a_total;
        let a_prime = (T::one() + (T::one() + four * lp * a_prev).sqrt()) / (two * lp);
        let a_total_prime = a_prev + a_prime;
        let z_bar = &state.z * (a_prev / a_total_prime) + &state.v * (a_prime / a_total_prime);
        if t > 0 {
            tilde = oracle.call(problem, &z_bar, &mut counters).map_err(|e| e.at_step(t))?;
            if !tilde.verified {
                unverified += 1;
            }
            if tilde.lambda == T::zero() {
                state.z = tilde.z.clone();
                stop = "stationary";
                completed = t;
                break;
            }
        }

        let accepted = tilde.lambda <= lp;
        let (a, a_total_new, z_new) = if accepted {
            (a_prime, a_total_prime, tilde.z.clone())
        } else {
            let ratio = lp / tilde.lambda;
            let a = ratio * a_prime;
            let a_total_new = a_prev + a;
            let z = &state.z * ((T::one() - ratio) * a_prev / a_total_new)
                + &tilde.z * (ratio * a_total_prime / a_total_new);
            (a, a_total_new, z)
        };
        state.lambda_guess = if accepted { lp / alpha } else { lp * alpha };

        let g_tilde = problem.eval_operator(&tilde.z, &mut counters)?;
        state.v -= &g_tilde * a;
        state.a_total = a_total_new;
        state.z = z_new;
        if !all_finite(&state.z) || !all_finite(&state.v) {
            return Err(Error::Numerical("non-finite iterate".into()).at_step(t));
        }
        completed = t + 1;

        let g = if accepted {
            g_tilde
        } else {
            metric_evals += 1;
            problem.model().operator(&state.z)
        };
        let mut metrics = problem.metrics_at("", &state.z, &g);
        metrics.insert("lambda_prime".into(), to_f64(lp));
        metrics.insert("a_prime".into(), to_f64(a_prime));
        metrics.insert("a_total".into(), to_f64(state.a_total));
        metrics.insert("ms_lambda".into(), to_f64(tilde.lambda));
        metrics.insert("accepted".into(), if accepted { 1.0 } else { 0.0 });
        trace.push(TraceRecord { iter: completed as u64, wall_time_s: clock.elapsed_s(), counters, metrics });
        if done(&state.z, &g) {
            stop = "tolerance";
            break;
        }
    }

    trace.set_meta("iterations", completed);
    trace.set_meta("stop", stop);
    trace.set_meta("unverified_ms", unverified);
    trace.set_meta("metric_grad_evals", metric_evals);
    Ok(AlenOutput { z: state.z.clone(), state, iterations: completed, unverified, counters, trace })
}

/// Lazy CRN on `f`: `z_{t+1} = A^CRN_M(z_t, grad^2 f(z_{pi(t)}))`.
pub fn lazy_crn_run<T: Real>(
    problem: &ProblemInstance<T>,
    z0: &DVector<T>,
    steps: usize,
    laziness: usize,
    m_reg: T,
    tol: T,
) -> Result<SolveOutput<T>> {
    if problem.kind() != ProblemKind::Min {
        return Err(Error::Unsupported(format!("lazy CRN needs a minimization problem, got {}", problem.kind())));
    }
    if laziness == 0 || steps == 0 {
        return Err(Error::Config("steps and laziness must be at least 1".into()));
    }
    if !(m_reg > T::zero()) || !m_reg.is_finite() {
        return Err(Error::Config("M must be positive and finite".into()));
    }
    let clock = Stopwatch::start();
    let mut counters = OracleCounters::default();
    let mut trace = RunTrace::new()
        .with_meta("method", "Lazy-CRN")
        .with_meta("problem", problem.label())
        .with_meta("m", laziness)
        .with_meta("M", to_f64(m_reg))
        .with_meta("T", steps);

    let mut z = z0.clone();
    let mut g = problem.eval_operator(&z, &mut counters)?;
    trace.push(TraceRecord { iter: 0, wall_time_s: clock.elapsed_s(), counters, metrics: problem.metrics_at("", &z, &g) });
    let mut fact = None;
    let mut warm = None;
    let mut done = 0usize;
    let mut stop = "budget";
    for t in 0..steps {
        if g.norm() <= tol || g.iter().all(|v| *v == T::zero()) {
            stop = "tolerance";
            break;
        }
        if t % laziness == 0 {
            let h = problem.eval_jacobian(&z, &mut counters)?;
            fact = Some(factorize(&h).map_err(|e| e.at_step(t))?);
            counters.factorizations += 1;
        }
        let crn = crn_step(&g, fact.as_ref().expect("snapshot taken at t = 0"), m_reg, warm).map_err(|e| e.at_step(t))?;
        counters.linear_solves += crn.solves_used as u64;
        warm = Some(crn.lambda);
        z += &crn.step;
        g = problem.eval_operator(&z, &mut counters)?;
        if !all_finite(&z) || !all_finite(&g) {
            return Err(Error::Numerical("non-finite iterate".into()).at_step(t));
        }
        done = t + 1;
        trace.push(TraceRecord { iter: done as u64, wall_time_s: clock.elapsed_s(), counters, metrics: problem.metrics_at("", &z, &g) });
    }
    trace.set_meta("steps", done);
    trace.set_meta("stop", stop);
    Ok(SolveOutput { z, counters, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_affine_cubic, make_hard_cubic};

    fn quadratic(d: usize) -> ProblemInstance<f64> {
        make_affine_cubic(DMatrix::identity(d, d), DVector::zeros(d), 0.0).unwrap()
    }

    #[test]
    fn resolve_defaults() {
        let p = MsConfig::<f64>::new(2).resolve(4.0).unwrap();
        assert_eq!(p.gamma, 2.0);
        assert_eq!(p.m_reg, 6.0 * 2.0 * (4.0 + 4.0));
        assert_eq!(p.budget as f64, p.budget_auto.min(p.budget_cap));
        assert_eq!(p.epochs, p.budget.div_ceil(2));
        assert!(MsConfig::<f64>::new(1).with_sigma(1.0).resolve(1.0).is_err());
        assert!(MsConfig::<f64>::new(0).resolve(1.0).is_err());
        assert!(MsConfig::<f64>::new(1).with_budget(0).resolve(1.0).is_err());
    }

    #[test]
    fn stationary_center_returns_itself() {
        let p = quadratic(3);
        let out = ms_solve(&p, &DVector::zeros(3), &MsConfig::new(1)).unwrap();
        assert_eq!(out.z_ms, DVector::zeros(3));
        assert_eq!(out.lambda, 0.0);
        assert!(out.verified);
    }

    #[test]
    fn quadratic_first_step_certifies() {
        let p = quadratic(3);
        let z_bar = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let cfg = MsConfig::new(1).with_gamma(1.0);
        let out = ms_solve(&p, &z_bar, &cfg).unwrap();
        assert!(out.verified);
        assert_eq!(out.trace.meta("source"), Some("bootstrap"));
        assert!((out.lambda - (&out.z_ms - &z_bar).norm()).abs() < 1e-15);
    }

    #[test]
    fn hard_cubic_certificate_and_budget() {
        let p = make_hard_cubic::<f64>(5).unwrap();
        let cfg = MsConfig::new(2);
        let params = cfg.resolve(p.lipschitz()).unwrap();
        let z_bar = DVector::zeros(5);
        let out = ms_solve(&p, &z_bar, &cfg).unwrap();
        assert!(out.verified);
        let w = &out.z_ms - &z_bar;
        let gg = p.model().operator(&out.z_ms) + &w * (params.gamma * w.norm());
        assert!(gg.norm() <= 0.99 * params.gamma * w.norm_squared());
        assert!(out.counters.jac_evals as usize <= params.epochs + 2);
    }

    #[test]
    fn alen_first_coefficients_and_identity() {
        let p = make_hard_cubic::<f64>(6).unwrap();
        let out = alen_run(&p, &DVector::zeros(6), 10, 2.0, &MsConfig::new(1), 0.0).unwrap();
        let mut a_prev = 0.0;
        for r in out.trace.records.iter().skip(1) {
            let lp = r.metrics["lambda_prime"];
            let ap = r.metrics["a_prime"];
            assert!(((2.0 * lp * ap - 1.0).powi(2) - (1.0 + 4.0 * lp * a_prev)).abs() <= 1e-10 * (1.0 + 4.0 * lp * a_prev));
            assert!(r.metrics["a_total"] >= a_prev);
            a_prev = r.metrics["a_total"];
        }
        // First iteration: A_0 = 0 so a' = 1 / lambda' and the branch accepts.
        let first = &out.trace.records[1].metrics;
        assert!((first["a_prime"] * first["lambda_prime"] - 1.0).abs() < 1e-12);
        assert_eq!(first["accepted"], 1.0);
    }

    #[test]
    fn alen_quadratic_gap_decreases() {
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 5.0]));
        let p = make_affine_cubic(b, DVector::from_vec(vec![1.0, 1.0, 1.0]), 0.0).unwrap();
        let z0 = DVector::zeros(3);
        let mut last = f64::INFINITY;
        for t in [1, 2, 4, 8] {
            let out = alen_run(&p, &z0, t, 2.0, &MsConfig::new(1), 0.0).unwrap();
            let gap = p.subopt_gap(&out.z).unwrap();
            assert!(gap <= last + 1e-14);
            last = gap;
        }
    }

    #[test]
    fn anpe_one_hessian_per_oracle_call() {
        let p = make_hard_cubic::<f64>(5).unwrap();
        let out = anpe_run(&p, &DVector::zeros(5), 12, 2.0, 0.0).unwrap();
        assert_eq!(out.counters.jac_evals as usize, out.iterations);
    }

    #[test]
    fn lazy_crn_counts_and_descends() {
        let p = make_hard_cubic::<f64>(10).unwrap();
        for m in [1, 3] {
            let out = lazy_crn_run(&p, &DVector::zeros(10), 30, m, 6.0 * m as f64 * p.lipschitz(), 0.0).unwrap();
            assert_eq!(out.counters.jac_evals, 30usize.div_ceil(m) as u64);
            let gaps = out.trace.metric_series("subopt_gap");
            for w in gaps.windows(2) {
                assert!(w[1].1 <= w[0].1 + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_min() {
        let p = crate::problems::make_cubic_bilinear::<f64>(2, 0).unwrap();
        assert!(matches!(ms_solve(&p, &DVector::zeros(4), &MsConfig::new(1)), Err(Error::Unsupported(_))));
        assert!(alen_run(&p, &DVector::zeros(4), 3, 2.0, &MsConfig::new(1), 0.0).is_err());
    }
}
