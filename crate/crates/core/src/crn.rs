//! Cubic-regularized Newton oracle over a cached factorization.
//!
//! Given `F(z̄)`, a (possibly stale) matrix `H` and `M > 0`, the oracle
//! returns the step `s = z - z̄` solving
//!
//! ```text
//! F(z̄) + H s + (M/2)|s| s = 0.
//! ```
//!
//! Writing `lambda = (M/2)|s|`, the step is `s = -(H + lambda I)^{-1} F(z̄)`
//! and `lambda` is the root of `psi(lambda) = |(H + lambda I)^{-1} F(z̄)| / lambda - 2/M`,
//! which is strictly decreasing on `lambda > 0` whenever `H` has a positive
//! semidefinite symmetric part. The root is bracketed by doubling / halving
//! from a warm start and then bisected.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};
use crate::shifted::SnapshotFactorization;

/// Smallest multiplier probed.
pub const LAMBDA_FLOOR: f64 = 1e-300;
const LAMBDA_CEIL: f64 = 1e300;
const MAX_BISECTIONS: usize = 200;

/// Output of one oracle call.
#[derive(Debug, Clone)]
pub struct CrnResult<T: Real> {
    /// `h = z - z̄`.
    pub step: DVector<T>,
    pub lambda: T,
    /// Fixed-point defect `|(M/2)|h| - lambda|`.
    pub residual: T,
    pub bisection_iters: usize,
    /// Shifted solves performed (bracketing plus bisection).
    pub solves_used: usize,
}

impl<T: Real> CrnResult<T> {
    fn zero(d: usize) -> Self {
        Self {
            step: DVector::zeros(d),
            lambda: T::zero(),
            residual: T::zero(),
            bisection_iters: 0,
            solves_used: 0,
        }
    }
}

struct Probe<T: Real> {
    lambda: T,
    step: DVector<T>,
    psi: T,
    residual: T,
}

/// Solves the CRN system for `F(z̄) = f_val` with snapshot `fact`.
///
/// `warm_lambda` seeds the bracket (default 1).
pub fn crn_step<T: Real>(
    f_val: &DVector<T>,
    fact: &SnapshotFactorization<T>,
    m_reg: T,
    warm_lambda: Option<T>,
) -> Result<CrnResult<T>> {
    crn_step_impl(f_val, fact, m_reg, warm_lambda, None)
}

/// As [`crn_step`], also returning every probed `(lambda, psi(lambda))`.
pub fn crn_step_with_probes<T: Real>(
    f_val: &DVector<T>,
    fact: &SnapshotFactorization<T>,
    m_reg: T,
    warm_lambda: Option<T>,
) -> Result<(CrnResult<T>, Vec<(T, T)>)> {
    let mut probes = Vec::new();
    let r = crn_step_impl(f_val, fact, m_reg, warm_lambda, Some(&mut probes))?;
    Ok((r, probes))
}

fn crn_step_impl<T: Real>(
    f_val: &DVector<T>,
    fact: &SnapshotFactorization<T>,
    m_reg: T,
    warm_lambda: Option<T>,
    mut log: Option<&mut Vec<(T, T)>>,
) -> Result<CrnResult<T>> {
    if !(m_reg > T::zero()) || !m_reg.is_finite() {
        return Err(Error::Config("CRN regularization M must be positive".into()));
    }
    if f_val.len() != fact.dim() {
        return Err(Error::DimensionMismatch { expected: fact.dim(), got: f_val.len() });
    }
    if !f_val.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("non-finite operator value passed to CRN oracle".into()));
    }
    if f_val.iter().all(|v| *v == T::zero()) {
        return Ok(CrnResult::zero(f_val.len()));
    }

    let half_m = m_reg * lit::<T>(0.5);
    let target = T::one() / half_m;
    let floor = lit::<T>(LAMBDA_FLOOR);
    let ceil = lit::<T>(LAMBDA_CEIL);
    let two = lit::<T>(2.0);
    let mut solves = 0usize;

    // psi = +inf on a singular shift: the root lies above.
    let mut probe = |lambda: T| -> Result<Option<Probe<T>>> {
        solves += 1;
        match fact.solve_shifted(lambda, f_val) {
            Ok(h) => {
                let nh = h.norm();
                if !nh.is_finite() {
                    return Err(Error::Numerical("non-finite shifted solve".into()));
                }
                let psi = nh / lambda - target;
                if let Some(log) = log.as_deref_mut() {
                    log.push((lambda, psi));
                }
                Ok(Some(Probe { lambda, step: -h, psi, residual: (half_m * nh - lambda).abs() }))
            }
            Err(Error::SingularShift { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let start = warm_lambda
        .filter(|l| *l > T::zero() && l.is_finite())
        .unwrap_or_else(T::one);
    let start = if start < floor { floor } else { start };

    // Bracket [lo, hi] with psi(lo) > 0 >= psi(hi).
    let first = probe(start)?;
    let (mut lo, mut hi, mut best): (Probe<T>, Probe<T>, Option<Probe<T>>);
    match first {
        Some(p) if p.psi <= T::zero() => {
            let mut upper = p;
            loop {
                let l = upper.lambda / two;
                if l < floor {
                    return Err(Error::CrnNonConvergence {
                        iterations: 0,
                        lo: to_f64(l),
                        hi: to_f64(upper.lambda),
                        residual: to_f64(upper.residual),
                    });
                }
                match probe(l)? {
                    Some(p) if p.psi <= T::zero() => upper = p,
                    Some(p) => {
                        lo = p;
                        hi = upper;
                        break;
                    }
                    None => {
                        // Singular below the root: keep the bracket at the last good pair.
                        lo = Probe { lambda: l, step: upper.step.clone(), psi: T::max_value().unwrap_or(ceil), residual: ceil };
                        hi = upper;
                        break;
                    }
                }
            }
        }
        other => {
            let mut lower = other.unwrap_or(Probe {
                lambda: start,
                step: DVector::zeros(f_val.len()),
                psi: T::max_value().unwrap_or(ceil),
                residual: ceil,
            });
            loop {
                let l = lower.lambda * two;
                if l > ceil {
                    return Err(Error::CrnNonConvergence {
                        iterations: 0,
                        lo: to_f64(lower.lambda),
                        hi: to_f64(l),
                        residual: to_f64(lower.residual),
                    });
                }
                match probe(l)? {
                    Some(p) if p.psi <= T::zero() => {
                        lo = lower;
                        hi = p;
                        break;
                    }
                    Some(p) => lower = p,
                    None => lower.lambda = l,
                }
            }
        }
    }
    best = None;
    let better = |cand: &Probe<T>, best: &Option<Probe<T>>| match best {
        None => true,
        Some(b) => cand.residual < b.residual,
    };
    for p in [&lo, &hi] {
        if p.residual.is_finite() && better(p, &best) {
            best = Some(Probe { lambda: p.lambda, step: p.step.clone(), psi: p.psi, residual: p.residual });
        }
    }

    let tol = |lambda: T| lit::<T>(1e-13) * (T::one() + lambda);
    let eps4 = T::default_epsilon() * lit::<T>(4.0);
    let mut iters = 0usize;
    while !best.as_ref().is_some_and(|b| b.residual <= tol(b.lambda)) {
        if hi.lambda - lo.lambda <= eps4 * hi.lambda {
            break;
        }
        if iters >= MAX_BISECTIONS {
            let b = best.as_ref().map(|b| to_f64(b.residual)).unwrap_or(f64::INFINITY);
            return Err(Error::CrnNonConvergence {
                iterations: iters,
                lo: to_f64(lo.lambda),
                hi: to_f64(hi.lambda),
                residual: b,
            });
        }
        iters += 1;
        let mid = if hi.lambda > lo.lambda * lit::<T>(4.0) {
            (lo.lambda * hi.lambda).sqrt()
        } else {
            (lo.lambda + hi.lambda) / two
        };
        match probe(mid)? {
            Some(p) => {
                if better(&p, &best) {
                    best = Some(Probe { lambda: p.lambda, step: p.step.clone(), psi: p.psi, residual: p.residual });
                }
                if p.psi > T::zero() {
                    lo = p;
                } else {
                    hi = p;
                }
            }
            None => lo.lambda = mid,
        }
    }

    let best = best.ok_or_else(|| Error::Numerical("CRN bisection produced no valid probe".into()))?;
    if best.residual > lit::<T>(1e-8) * (T::one() + best.lambda) {
        return Err(Error::CrnNonConvergence {
            iterations: iters,
            lo: to_f64(lo.lambda),
            hi: to_f64(hi.lambda),
            residual: to_f64(best.residual),
        });
    }
    Ok(CrnResult {
        step: best.step,
        lambda: best.lambda,
        residual: best.residual,
        bisection_iters: iters,
        solves_used: solves,
    })
}

/// `|f + H h + (M/2)|h| h|` for a dense `H` (test and audit helper).
pub fn crn_defect<T: Real>(
    f_val: &DVector<T>,
    h_matrix: &nalgebra::DMatrix<T>,
    m_reg: T,
    step: &DVector<T>,
) -> T {
    (f_val + h_matrix * step + step * (m_reg * lit::<T>(0.5) * step.norm())).norm()
}
