//! Scalar abstraction shared by every solver in the crate.

use nalgebra::{DMatrix, DVector, RealField};

/// Floating-point scalar the solvers are generic over (`f32` or `f64`).
///
/// Everything numeric in the crate is written against this trait; the
/// crate root exposes `f64` aliases for the common case.
pub trait Real: RealField + Copy + num_traits::ToPrimitive {}

impl<T> Real for T where T: RealField + Copy + num_traits::ToPrimitive {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Lossy conversion to `f64`, used for traces and reports.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn all_finite<T: Real>(v: &DVector<T>) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub(crate) fn matrix_finite<T: Real>(m: &DMatrix<T>) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// Infinity norm of a matrix (maximum absolute row sum).
pub fn norm_inf<T: Real>(m: &DMatrix<T>) -> T {
    let mut best = T::zero();
    for i in 0..m.nrows() {
        let mut row = T::zero();
        for j in 0..m.ncols() {
            row += m[(i, j)].abs();
        }
        if row > best {
            best = row;
        }
    }
    best
}

/// Spectral norm (largest singular value).
pub fn norm_spectral<T: Real>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}
