//! Lazy-Hessian second-order methods for monotone equations and convex
//! minimization.
//!
//! * [`len`]: lazy extra Newton (LEN) and NPE for monotone `F(z) = 0`.
//! * [`alen`]: accelerated LEN with the lazy MS-oracle solver, plus lazy
//!   CRN and A-NPE.
//! * [`restart`]: epoch restarts for strongly monotone problems.
//! * [`baselines`]: extragradient and accelerated gradient descent.
//!
//! Snapshot Jacobians are factorized once ([`shifted`]) and reused by the
//! cubic-regularized Newton oracle ([`crn`]) for many shifted solves.
//!
//! Everything is generic over the scalar type; the aliases below fix `f64`.

pub mod alen;
pub mod baselines;
pub mod crn;
pub mod error;
pub mod len;
pub mod problems;
pub mod restart;
pub mod scalar;
pub mod shifted;
pub mod trace;

pub use alen::{alen_run, anpe_run, lazy_crn_run, ms_solve, AccelState, AlenOutput, MsConfig, MsOutput, MsParams};
pub use baselines::{agd_run, eg_run, FirstOrderConfig, STEPSIZE_GRID};
pub use crn::{crn_step, CrnResult};
pub use error::{Error, Result};
pub use len::{len_run, npe_run, LenConfig, LenOutput};
pub use problems::{JacobianMatrix, Model, ProblemInstance, ProblemKind};
pub use restart::{alen_restart, len_restart, RestartConfig, RestartOutput};
pub use scalar::Real;
pub use shifted::{factorize, SnapshotFactorization};
pub use trace::{OracleCounters, RunTrace, SolveOutput, TraceRecord};

pub type Point = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;
pub type Problem = ProblemInstance<f64>;
pub type Jacobian = JacobianMatrix<f64>;
pub type Factorization = SnapshotFactorization<f64>;
