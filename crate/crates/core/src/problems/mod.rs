//! Problem abstraction: monotone operators with Jacobian (and optional value)
//! oracles, the built-in test instances and their data sources.

mod data;
mod fd;
mod instances;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};
use crate::trace::OracleCounters;

pub use data::{gen_synthetic_fairness, gen_synthetic_logistic, read_libsvm, write_libsvm, Dataset};
pub use fd::{fd_check, FdReport, DEFAULT_FD_STEP};
pub use instances::{
    cubic_bilinear_with_rhs, make_affine, make_affine_cubic, make_cubic_bilinear, make_fairness, make_hard_cubic,
    make_logistic, random_monotone_matrix, Affine, AffineCubic, CubicBilinear, Fairness,
    HardCubic, Logistic, FAIRNESS_DEFAULT_BETA, FAIRNESS_DEFAULT_REG, LOGISTIC_THIRD_DERIV_MAX,
};

/// Which problem class an instance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    /// Monotone nonlinear equation `F(z) = 0`.
    Mne,
    /// Convex-concave saddle point; `F = [grad_x f; -grad_y f]`.
    Minimax,
    /// Convex minimization; `F = grad f`.
    Min,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Mne => "MNE",
            ProblemKind::Minimax => "Minimax",
            ProblemKind::Min => "Min",
        })
    }
}

/// Jacobian (Hessian for `Min`) evaluated at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix<T: Real> {
    pub entries: DMatrix<T>,
    pub symmetric: bool,
}

impl<T: Real> JacobianMatrix<T> {
    pub fn new(entries: DMatrix<T>, symmetric: bool) -> Self {
        Self { entries, symmetric }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `|J - J^T|_inf`.
    pub fn asymmetry(&self) -> T {
        crate::scalar::norm_inf(&(&self.entries - self.entries.transpose()))
    }
}

/// The evaluation oracles behind a [`ProblemInstance`].
///
/// Implementations must be pure: same input, same output.
pub trait Model<T: Real>: Send + Sync + fmt::Debug {
    /// `F(z)`.
    fn operator(&self, z: &DVector<T>) -> DVector<T>;

    /// `grad F(z)`.
    fn jacobian(&self, z: &DVector<T>) -> DMatrix<T>;

    /// `f(z)` for `Min` and `Minimax` problems.
    fn value(&self, _z: &DVector<T>) -> Option<T> {
        None
    }

    /// Whether the Jacobian is differentiable on the ball of the given
    /// radius around `z`. Finite-difference checks move away from points
    /// where this is false.
    fn is_smooth_near(&self, _z: &DVector<T>, _radius: T) -> bool {
        true
    }
}

/// An evaluatable monotone operator together with its constants.
///
/// Immutable after construction and cheap to clone (the model is shared).
#[derive(Clone)]
pub struct ProblemInstance<T: Real> {
    label: String,
    kind: ProblemKind,
    dim: usize,
    lipschitz: T,
    strong_mu: T,
    known_solution: Option<DVector<T>>,
    reference_value: Option<T>,
    primal_dim: usize,
    model: Arc<dyn Model<T>>,
}

impl<T: Real> fmt::Debug for ProblemInstance<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("label", &self.label)
            .field("kind", &self.kind)
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("strong_mu", &self.strong_mu)
            .finish_non_exhaustive()
    }
}

impl<T: Real> ProblemInstance<T> {
    /// Wraps a model. `lipschitz` must be positive; `Min` instances must
    /// provide a value oracle.
    pub fn new(
        label: impl Into<String>,
        kind: ProblemKind,
        dim: usize,
        lipschitz: T,
        model: Arc<dyn Model<T>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("problem dimension must be positive".into()));
        }
        if !(lipschitz > T::zero()) || !lipschitz.is_finite() {
            return Err(Error::Config("Lipschitz constant must be positive".into()));
        }
        Ok(Self {
            label: label.into(),
            kind,
            dim,
            lipschitz,
            strong_mu: T::zero(),
            known_solution: None,
            reference_value: None,
            primal_dim: dim,
            model,
        })
    }

    pub fn with_strong_mu(mut self, mu: T) -> Self {
        self.strong_mu = mu;
        self
    }

    pub fn with_solution(mut self, z_star: DVector<T>) -> Self {
        self.known_solution = Some(z_star);
        self
    }

    pub fn with_reference_value(mut self, f_star: T) -> Self {
        self.reference_value = Some(f_star);
        self
    }

    /// For `Minimax`: the first `primal_dim` coordinates are `x`, the rest `y`.
    pub fn with_primal_dim(mut self, primal_dim: usize) -> Self {
        self.primal_dim = primal_dim.min(self.dim);
        self
    }

    /// Replaces the Jacobian Lipschitz constant (e.g. a tighter problem-specific bound).
    pub fn with_lipschitz(mut self, lipschitz: T) -> Self {
        self.lipschitz = lipschitz;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    pub fn primal_dim(&self) -> usize {
        self.primal_dim
    }

    pub fn strong_mu(&self) -> T {
        self.strong_mu
    }

    pub fn known_solution(&self) -> Option<&DVector<T>> {
        self.known_solution.as_ref()
    }

    pub fn reference_value(&self) -> Option<T> {
        self.reference_value
    }

    pub fn model(&self) -> &dyn Model<T> {
        self.model.as_ref()
    }

    fn check_dim(&self, z: &DVector<T>) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        Ok(())
    }

    /// `F(z)`; one gradient-oracle call.
    pub fn eval_operator(&self, z: &DVector<T>, counters: &mut OracleCounters) -> Result<DVector<T>> {
        self.check_dim(z)?;
        counters.grad_evals += 1;
        Ok(self.model.operator(z))
    }

    /// `grad F(z)`; one Jacobian-oracle call. Flagged symmetric iff `kind = Min`.
    pub fn eval_jacobian(
        &self,
        z: &DVector<T>,
        counters: &mut OracleCounters,
    ) -> Result<JacobianMatrix<T>> {
        self.check_dim(z)?;
        counters.jac_evals += 1;
        let mut entries = self.model.jacobian(z);
        let symmetric = self.kind == ProblemKind::Min;
        if symmetric {
            // Remove roundoff-level asymmetry so the symmetric solver path sees
            // an exactly symmetric matrix.
            let half = lit::<T>(0.5);
            entries = (&entries + entries.transpose()) * half;
        }
        Ok(JacobianMatrix { entries, symmetric })
    }

    /// `f(z)` (the saddle function for `Minimax`).
    pub fn eval_value(&self, z: &DVector<T>) -> Result<T> {
        self.check_dim(z)?;
        if self.kind == ProblemKind::Mne {
            return Err(Error::Unsupported(format!(
                "{} is a monotone equation without a value oracle",
                self.label
            )));
        }
        self.model
            .value(z)
            .ok_or_else(|| Error::Unsupported(format!("{} has no value oracle", self.label)))
    }

    /// `f(z) - f*` when both are available.
    pub fn subopt_gap(&self, z: &DVector<T>) -> Option<T> {
        let f_star = self.reference_value?;
        if self.kind != ProblemKind::Min {
            return None;
        }
        self.eval_value(z).ok().map(|v| v - f_star)
    }

    /// `|z - z*|^2` when `z*` is known.
    pub fn dist_sq(&self, z: &DVector<T>) -> Option<T> {
        self.known_solution.as_ref().map(|s| (z - s).norm_squared())
    }

    /// Standard trace metrics at `z` given `F(z)`: `grad_norm`, plus
    /// `subopt_gap` and `dist_sq` when available. Names get `prefix`.
    pub fn metrics_at(&self, prefix: &str, z: &DVector<T>, fz: &DVector<T>) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        out.insert(format!("{prefix}grad_norm"), to_f64(fz.norm()));
        if let Some(g) = self.subopt_gap(z) {
            out.insert(format!("{prefix}subopt_gap"), to_f64(g));
        }
        if let Some(d) = self.dist_sq(z) {
            out.insert(format!("{prefix}dist_sq"), to_f64(d));
        }
        out
    }
}
