//! Self-checks behind the `check` command: finite-difference verification
//! of the built-in problems and spot checks of the linear-algebra kernels.

use lazy_newton::crn::{crn_defect, crn_step};
use lazy_newton::problems::{fd_check, random_monotone_matrix, DEFAULT_FD_STEP};
use lazy_newton::shifted::solve_dense;
use lazy_newton::{factorize, JacobianMatrix, Point, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::registry::{ProblemName, ProblemSpec};

pub const FD_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, detail: String) {
        self.lines.push(CheckLine { name: name.into(), pass, detail });
    }
}

/// Max FD errors of one built-in problem over `points` random points.
pub fn fd_sweep(spec: &ProblemSpec, points: usize, seed: u64) -> Result<(f64, f64)> {
    let problem = spec.build(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut grad, mut jac) = (0.0f64, 0.0f64);
    for _ in 0..points {
        let z = Point::from_fn(problem.dim(), |_, _| rng.random_range(-1.5..1.5));
        let r = fd_check(&problem, &z, DEFAULT_FD_STEP)?;
        grad = grad.max(r.grad_err.unwrap_or(0.0));
        jac = jac.max(r.jac_err);
    }
    Ok((grad, jac))
}

pub fn run_checks(seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    let specs = [
        ProblemSpec::new(ProblemName::HardCubic).with_n(6),
        ProblemSpec::new(ProblemName::CubicBilinear).with_n(5),
        ProblemSpec { samples: Some(40), ..ProblemSpec::new(ProblemName::Logistic).with_n(5) },
        ProblemSpec { samples: Some(40), ..ProblemSpec::new(ProblemName::Fairness).with_n(5) },
    ];
    for spec in &specs {
        let (g, j) = fd_sweep(spec, 20, seed)?;
        report.push(
            format!("fd {}", spec.name),
            g <= FD_TOLERANCE && j <= FD_TOLERANCE,
            format!("grad_err={g:.2e} jac_err={j:.2e}"),
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_defect = 0.0f64;
    for case in 0..50u64 {
        let d = 2 + (case as usize % 15);
        let b = random_monotone_matrix::<f64>(d, 0.0, 1.0, seed ^ (case + 1));
        let f = Point::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let m = [0.1, 1.0, 10.0][case as usize % 3];
        let fact = factorize(&JacobianMatrix::new(b.clone(), false))?;
        let h = crn_step(&f, &fact, m, None)?;
        worst_defect = worst_defect.max(crn_defect(&f, &b, m, &h.step) / (1.0 + f.norm()));
    }
    report.push("crn defect", worst_defect <= 1e-8, format!("max relative defect={worst_defect:.2e}"));

    let mut worst_solve = 0.0f64;
    for case in 0..10u64 {
        let b = random_monotone_matrix::<f64>(30, 0.0, 2.0, seed ^ (100 + case));
        let j = JacobianMatrix::new(b, false);
        let fact = factorize(&j)?;
        let rhs = Point::from_fn(30, |_, _| rng.random_range(-1.0..1.0));
        let lambda = rng.random_range(0.01..2.0);
        let a = fact.solve_shifted(lambda, &rhs)?;
        let b = solve_dense(&j, lambda, &rhs)?;
        worst_solve = worst_solve.max((&a - &b).norm() / b.norm());
    }
    report.push("shifted solve", worst_solve <= 1e-10, format!("max relative error={worst_solve:.2e}"));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_checks_pass() {
        let r = run_checks(0).unwrap();
        assert!(r.all_pass(), "{r:#?}");
        assert_eq!(r.lines.len(), 6);
    }
}
