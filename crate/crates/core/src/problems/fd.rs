use nalgebra::DVector;

use super::{ProblemInstance, ProblemKind};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Result of comparing analytic oracles against central differences.
#[derive(Debug, Clone)]
pub struct FdReport<T: Real> {
    /// Operator vs. differences of the value oracle; `None` for `MNE`.
    pub grad_err: Option<T>,
    /// Jacobian vs. differences of the operator.
    pub jac_err: T,
    /// Point at which the check ran (moved off non-smooth points).
    pub point: DVector<T>,
    pub perturbed: bool,
}

fn rel_err<T: Real>(analytic: &DVector<T>, approx: &DVector<T>) -> T {
    let scale = analytic.amax();
    let scale = if scale > T::one() { scale } else { T::one() };
    (analytic - approx).amax() / scale
}

/// Max relative error (`|a - fd|_inf / max(1, |a|_inf)`) of `F` against
/// central differences of `f` and of `grad F` against central differences
/// of `F`, with step `h`.
pub fn fd_check<T: Real>(problem: &ProblemInstance<T>, z: &DVector<T>, h: T) -> Result<FdReport<T>> {
    if !(h > T::zero() && h < T::one()) {
        return Err(Error::Config("finite-difference step must lie in (0, 1)".into()));
    }
    if z.len() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: z.len() });
    }
    let model = problem.model();
    let d = z.len();

    let mut point = z.clone();
    let mut perturbed = false;
    let guard = h * lit::<T>(100.0);
    let mut shift = guard;
    for k in 0..20 {
        if model.is_smooth_near(&point, guard) {
            break;
        }
        perturbed = true;
        // Deterministic, non-axis-aligned direction.
        point = z + DVector::from_fn(d, |i, _| shift * lit::<T>(1.0 + 0.37 * ((i + k) % 7) as f64));
        shift *= lit::<T>(2.0);
    }

    let two_h = h + h;
    let f0 = model.operator(&point);
    let mut jac_err = T::zero();
    let jac = model.jacobian(&point);
    let mut grad_fd = DVector::zeros(d);
    let with_value = problem.kind() != ProblemKind::Mne;
    for j in 0..d {
        let mut plus = point.clone();
        let mut minus = point.clone();
        plus[j] += h;
        minus[j] -= h;
        let col_fd = (model.operator(&plus) - model.operator(&minus)) / two_h;
        let col = jac.column(j).into_owned();
        let e = rel_err(&col, &col_fd);
        if e > jac_err {
            jac_err = e;
        }
        if with_value {
            let fp = model.value(&plus);
            let fm = model.value(&minus);
            if let (Some(fp), Some(fm)) = (fp, fm) {
                let g = (fp - fm) / two_h;
                // Minimax operators carry -grad_y f in the dual block.
                grad_fd[j] = if problem.kind() == ProblemKind::Minimax && j >= problem.primal_dim() {
                    -g
                } else {
                    g
                };
            }
        }
    }
    let grad_err = with_value.then(|| rel_err(&f0, &grad_fd));
    Ok(FdReport { grad_err, jac_err, point, perturbed })
}
