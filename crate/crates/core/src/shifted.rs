//! One factorization per snapshot, many shifted solves.
//!
//! The snapshot Jacobian `H` is reduced once to real Schur form
//! `H = Q U Q^T` (orthogonal `Q`, quasi-upper-triangular `U` with 1x1 and 2x2
//! diagonal blocks). Every shifted system `(H + lambda I) h = r` is then
//! answered in `O(d^2)`: `h = Q (U + lambda I)^{-1} Q^T r`, where the middle
//! factor is a block back substitution. Symmetric snapshots use an
//! eigendecomposition, so `U` is diagonal.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::problems::JacobianMatrix;
use crate::scalar::{lit, matrix_finite, norm_inf, to_f64, Real};

const MAX_SWEEPS: usize = 10_000;

/// Cached factorization `H = Q U Q^T` of a snapshot Jacobian.
#[derive(Debug, Clone)]
pub struct SnapshotFactorization<T: Real> {
    q: DMatrix<T>,
    u: DMatrix<T>,
    /// `pair[i]` is true when a 2x2 block occupies rows `i, i+1`.
    pair: Vec<bool>,
    symmetric: bool,
    norm: T,
}

impl<T: Real> SnapshotFactorization<T> {
    pub fn q(&self) -> &DMatrix<T> {
        &self.q
    }

    pub fn u(&self) -> &DMatrix<T> {
        &self.u
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// `|H|_inf` of the factorized matrix.
    pub fn source_norm(&self) -> T {
        self.norm
    }

    /// `Q U Q^T`.
    pub fn reconstruct(&self) -> DMatrix<T> {
        &self.q * &self.u * self.q.transpose()
    }

    /// Number of 2x2 diagonal blocks (complex-conjugate eigenvalue pairs).
    pub fn num_pairs(&self) -> usize {
        self.pair.iter().filter(|&&p| p).count()
    }

    /// Solves `(H + lambda I) h = rhs` in `O(d^2)`.
    pub fn solve_shifted(&self, lambda: T, rhs: &DVector<T>) -> Result<DVector<T>> {
        let d = self.dim();
        if rhs.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: rhs.len() });
        }
        let mut y = self.q.tr_mul(rhs);
        let tiny = T::default_epsilon() * lit::<T>(16.0) * (self.norm + lambda.abs() + T::one());
        let singular = || Error::SingularShift { lambda: to_f64(lambda) };

        if self.symmetric {
            for i in 0..d {
                let p = self.u[(i, i)] + lambda;
                if p.abs() <= tiny {
                    return Err(singular());
                }
                y[i] /= p;
            }
            return Ok(&self.q * y);
        }

        // Back substitution over the quasi-triangular U + lambda I.
        let mut i = d;
        while i > 0 {
            let two = i >= 2 && self.pair[i - 2];
            let start = if two { i - 2 } else { i - 1 };
            let block = i - start;
            for r in start..i {
                let mut acc = y[r];
                for c in i..d {
                    acc -= self.u[(r, c)] * y[c];
                }
                y[r] = acc;
            }
            if block == 1 {
                let p = self.u[(start, start)] + lambda;
                if p.abs() <= tiny {
                    return Err(singular());
                }
                y[start] /= p;
            } else {
                let a = self.u[(start, start)] + lambda;
                let b = self.u[(start, start + 1)];
                let c = self.u[(start + 1, start)];
                let e = self.u[(start + 1, start + 1)] + lambda;
                let det = a * e - b * c;
                let scale = a.abs() * e.abs() + b.abs() * c.abs();
                if det.abs() <= tiny * (scale + T::one()) {
                    return Err(singular());
                }
                let (r0, r1) = (y[start], y[start + 1]);
                y[start] = (e * r0 - b * r1) / det;
                y[start + 1] = (a * r1 - c * r0) / det;
            }
            i = start;
        }
        Ok(&self.q * y)
    }
}

/// Factorizes a snapshot Jacobian: real Schur form in general, orthogonal
/// eigendecomposition when the matrix is flagged symmetric.
pub fn factorize<T: Real>(h: &JacobianMatrix<T>) -> Result<SnapshotFactorization<T>> {
    let m = &h.entries;
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
    }
    if m.nrows() == 0 {
        return Err(Error::Config("cannot factorize an empty matrix".into()));
    }
    let norm = norm_inf(m);
    if !matrix_finite(m) {
        return Err(Error::Numerical("non-finite entries in snapshot Jacobian".into()));
    }
    let d = m.nrows();
    let fail = || Error::Factorization { norm: to_f64(norm) };

    if h.symmetric {
        let eig = SymmetricEigen::try_new(m.clone(), T::default_epsilon(), MAX_SWEEPS).ok_or_else(fail)?;
        return Ok(SnapshotFactorization {
            q: eig.eigenvectors,
            u: DMatrix::from_diagonal(&eig.eigenvalues),
            pair: vec![false; d],
            symmetric: true,
            norm,
        });
    }

    let schur = Schur::try_new(m.clone(), T::default_epsilon(), MAX_SWEEPS).ok_or_else(fail)?;
    let (q, mut u) = schur.unpack();
    for c in 0..d {
        for r in (c + 2)..d {
            u[(r, c)] = T::zero();
        }
    }
    let mut pair = vec![false; d];
    let mut i = 0;
    while i + 1 < d {
        if u[(i + 1, i)] != T::zero() {
            if i + 2 < d && u[(i + 2, i + 1)] != T::zero() {
                return Err(Error::Numerical(
                    "Schur form has overlapping 2x2 blocks".into(),
                ));
            }
            pair[i] = true;
            i += 2;
        } else {
            i += 1;
        }
    }
    Ok(SnapshotFactorization { q, u, pair, symmetric: false, norm })
}

/// Direct `O(d^3)` solve of `(H + lambda I) h = rhs` (reference path).
pub fn solve_dense<T: Real>(h: &JacobianMatrix<T>, lambda: T, rhs: &DVector<T>) -> Result<DVector<T>> {
    let d = h.dim();
    if rhs.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: rhs.len() });
    }
    let mut a = h.entries.clone();
    for i in 0..d {
        a[(i, i)] += lambda;
    }
    a.lu()
        .solve(rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(Error::SingularShift { lambda: to_f64(lambda) })
}
