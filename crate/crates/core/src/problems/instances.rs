use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Dataset, Model, ProblemInstance, ProblemKind};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// `max |l'''(t)|` for the logistic loss `l(t) = log(1 + exp(-t))`.
pub const LOGISTIC_THIRD_DERIV_MAX: f64 = 0.096_225_044_864_937_63; // 1 / (6 sqrt 3)

pub const FAIRNESS_DEFAULT_BETA: f64 = 0.5;
pub const FAIRNESS_DEFAULT_REG: f64 = 1e-4;

// Unit upper-bidiagonal A with -1 on the superdiagonal.
fn bidiag_mul<T: Real>(x: &[T]) -> Vec<T> {
    let n = x.len();
    (0..n)
        .map(|i| if i + 1 < n { x[i] - x[i + 1] } else { x[i] })
        .collect()
}

fn bidiag_t_mul<T: Real>(w: &[T]) -> Vec<T> {
    (0..w.len())
        .map(|i| if i > 0 { w[i] - w[i - 1] } else { w[i] })
        .collect()
}

fn bidiag_dense<T: Real>(n: usize) -> DMatrix<T> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            T::one()
        } else if j == i + 1 {
            -T::one()
        } else {
            T::zero()
        }
    })
}

/// `A^T diag(d) A` for the bidiagonal `A` (tridiagonal result).
fn bidiag_congruence<T: Real>(d: &[T]) -> DMatrix<T> {
    let n = d.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = d[i] + if i > 0 { d[i - 1] } else { T::zero() };
        if i + 1 < n {
            h[(i, i + 1)] = -d[i];
            h[(i + 1, i)] = -d[i];
        }
    }
    h
}

/// Second-order lower-bound function `f(x) = (1/3) sum |(Ax)_i|^3 - x_1`.
#[derive(Debug, Clone)]
pub struct HardCubic {
    pub n: usize,
}

impl<T: Real> Model<T> for HardCubic {
    fn operator(&self, z: &DVector<T>) -> DVector<T> {
        let u = bidiag_mul(z.as_slice());
        let s: Vec<T> = u.iter().map(|&v| v * v.abs()).collect();
        let mut g = DVector::from_vec(bidiag_t_mul(&s));
        g[0] -= T::one();
        g
    }

    fn jacobian(&self, z: &DVector<T>) -> DMatrix<T> {
        let two = lit::<T>(2.0);
        let d: Vec<T> = bidiag_mul(z.as_slice())
            .into_iter()
            .map(|v| two * v.abs())
            .collect();
        bidiag_congruence(&d)
    }

    fn value(&self, z: &DVector<T>) -> Option<T> {
        let third = lit::<T>(1.0 / 3.0);
        let r = bidiag_mul(z.as_slice())
            .into_iter()
            .fold(T::zero(), |acc, v| acc + v.abs().powi(3));
        Some(third * r - z[0])
    }

    fn is_smooth_near(&self, z: &DVector<T>, radius: T) -> bool {
        // |u_i| is not differentiable at u_i = 0 and |(A dz)_i| <= sqrt(2) |dz|.
        let reach = radius * lit::<T>(std::f64::consts::SQRT_2);
        bidiag_mul(z.as_slice()).iter().all(|u| u.abs() > reach)
    }
}

/// The lower-bound instance on `R^n`. Its minimizer is `x*_i = n - i + 1`
/// with `f* = -2n/3`.
pub fn make_hard_cubic<T: Real>(n: usize) -> Result<ProblemInstance<T>> {
    if n == 0 {
        return Err(Error::Config("hard cubic needs n >= 1".into()));
    }
    let l = lit::<T>(2f64.powf(3.5));
    let x_star = DVector::from_fn(n, |i, _| lit::<T>((n - i) as f64));
    let f_star = lit::<T>(-2.0 * n as f64 / 3.0);
    Ok(
        ProblemInstance::new(format!("hard_cubic(n={n})"), ProblemKind::Min, n, l, Arc::new(HardCubic { n }))?
            .with_solution(x_star)
            .with_reference_value(f_star),
    )
}

/// Gradient and Hessian of `(rho/6)|w|^3` (the Hessian is 0 at `w = 0`).
pub(crate) fn cubic_norm_grad<T: Real>(w: &DVector<T>, rho: T) -> DVector<T> {
    w * (rho * lit::<T>(0.5) * w.norm())
}

pub(crate) fn cubic_norm_hessian<T: Real>(w: &DVector<T>, rho: T) -> DMatrix<T> {
    let n = w.len();
    let nw = w.norm();
    if nw == T::zero() {
        return DMatrix::zeros(n, n);
    }
    let half = rho * lit::<T>(0.5);
    let mut h = w * w.transpose() * (half / nw);
    for i in 0..n {
        h[(i, i)] += half * nw;
    }
    h
}

/// Cubic-regularized bilinear saddle `(rho/6)|x|^3 + y^T (A x - b)`.
#[derive(Debug, Clone)]
pub struct CubicBilinear<T: Real> {
    pub n: usize,
    pub rho: T,
    pub b: DVector<T>,
}

impl<T: Real> CubicBilinear<T> {
    fn split(&self, z: &DVector<T>) -> (DVector<T>, DVector<T>) {
        (z.rows(0, self.n).into_owned(), z.rows(self.n, self.n).into_owned())
    }
}

impl<T: Real> Model<T> for CubicBilinear<T> {
    fn operator(&self, z: &DVector<T>) -> DVector<T> {
        let (x, y) = self.split(z);
        let fx = cubic_norm_grad(&x, self.rho) + DVector::from_vec(bidiag_t_mul(y.as_slice()));
        let fy = &self.b - DVector::from_vec(bidiag_mul(x.as_slice()));
        let mut out = DVector::zeros(2 * self.n);
        out.rows_mut(0, self.n).copy_from(&fx);
        out.rows_mut(self.n, self.n).copy_from(&fy);
        out
    }

    fn jacobian(&self, z: &DVector<T>) -> DMatrix<T> {
        let n = self.n;
        let (x, _) = self.split(z);
        let a = bidiag_dense::<T>(n);
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        j.view_mut((0, 0), (n, n)).copy_from(&cubic_norm_hessian(&x, self.rho));
        j.view_mut((0, n), (n, n)).copy_from(&a.transpose());
        j.view_mut((n, 0), (n, n)).copy_from(&(-a));
        j
    }

    fn value(&self, z: &DVector<T>) -> Option<T> {
        let (x, y) = self.split(z);
        let ax_b = DVector::from_vec(bidiag_mul(x.as_slice())) - &self.b;
        Some(self.rho / lit::<T>(6.0) * x.norm().powi(3) + y.dot(&ax_b))
    }

    fn is_smooth_near(&self, z: &DVector<T>, radius: T) -> bool {
        z.rows(0, self.n).norm() > radius
    }
}

/// Bilinear saddle of size `2n` with Rademacher `b` drawn from `seed` and
/// `rho = 1/(20n)`. The saddle point is `x* = A^{-1} b`,
/// `y* = -(rho/2)|x*| A^{-T} x*`.
pub fn make_cubic_bilinear<T: Real>(n: usize, seed: u64) -> Result<ProblemInstance<T>> {
    if n == 0 {
        return Err(Error::Config("cubic bilinear needs n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = DVector::from_fn(n, |_, _| if rng.random::<bool>() { T::one() } else { -T::one() });
    cubic_bilinear_with_rhs(b)
}

/// Same instance with a caller-supplied right-hand side.
pub fn cubic_bilinear_with_rhs<T: Real>(b: DVector<T>) -> Result<ProblemInstance<T>> {
    let n = b.len();
    if n == 0 {
        return Err(Error::Config("cubic bilinear needs n >= 1".into()));
    }
    let rho = lit::<T>(1.0 / (20.0 * n as f64));
    // Back substitution for A x = b, forward substitution for A^T w = x.
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        x[i] = b[i] + if i + 1 < n { x[i + 1] } else { T::zero() };
    }
    let mut w = vec![T::zero(); n];
    for i in 0..n {
        w[i] = x[i] + if i > 0 { w[i - 1] } else { T::zero() };
    }
    let x = DVector::from_vec(x);
    let scale = -rho * lit::<T>(0.5) * x.norm();
    let mut z_star = DVector::zeros(2 * n);
    z_star.rows_mut(0, n).copy_from(&x);
    for i in 0..n {
        z_star[n + i] = scale * w[i];
    }
    let label = format!("cubic_bilinear(n={n},b={})", rhs_tag(&b));
    Ok(
        ProblemInstance::new(label, ProblemKind::Minimax, 2 * n, rho, Arc::new(CubicBilinear { n, rho, b }))?
            .with_primal_dim(n)
            .with_solution(z_star),
    )
}

fn rhs_tag<T: Real>(b: &DVector<T>) -> String {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for v in b.iter() {
        crate::scalar::to_f64(*v).to_bits().hash(&mut h);
    }
    format!("{:016x}", h.finish())
}

// Numerically stable logistic pieces for l(t) = log(1 + exp(-t)).
fn softplus_neg<T: Real>(t: T) -> T {
    // log(1 + e^{-t}) = max(-t, 0) + log(1 + e^{-|t|})
    let neg = -t;
    let m = if neg > T::zero() { neg } else { T::zero() };
    m + (T::one() + (-t.abs()).exp()).ln()
}

fn sigmoid<T: Real>(t: T) -> T {
    if t >= T::zero() {
        T::one() / (T::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (T::one() + e)
    }
}

/// `l'(t) = -sigma(-t)`.
fn logistic_d1<T: Real>(t: T) -> T {
    -sigmoid(-t)
}

/// `l''(t) = sigma(t) sigma(-t)`.
fn logistic_d2<T: Real>(t: T) -> T {
    sigmoid(t) * sigmoid(-t)
}

/// Regularized logistic regression `(1/n) sum l(b_i a_i^T x) + (reg/2)|x|^2`.
#[derive(Debug, Clone)]
pub struct Logistic<T: Real> {
    pub data: Dataset<T>,
    pub reg: T,
}

impl<T: Real> Model<T> for Logistic<T> {
    fn operator(&self, z: &DVector<T>) -> DVector<T> {
        let n = lit::<T>(self.data.n() as f64);
        let margins = &self.data.features * z;
        let w = DVector::from_fn(margins.len(), |i, _| {
            let b = self.data.labels[i];
            logistic_d1(b * margins[i]) * b / n
        });
        self.data.features.tr_mul(&w) + z * self.reg
    }

    fn jacobian(&self, z: &DVector<T>) -> DMatrix<T> {
        let n = lit::<T>(self.data.n() as f64);
        let margins = &self.data.features * z;
        let mut scaled = self.data.features.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= logistic_d2(self.data.labels[i] * margins[i]) / n;
        }
        let mut h = self.data.features.tr_mul(&scaled);
        for i in 0..h.nrows() {
            h[(i, i)] += self.reg;
        }
        h
    }

    fn value(&self, z: &DVector<T>) -> Option<T> {
        let n = lit::<T>(self.data.n() as f64);
        let margins = &self.data.features * z;
        let loss = margins
            .iter()
            .zip(self.data.labels.iter())
            .fold(T::zero(), |acc, (&m, &b)| acc + softplus_neg(b * m));
        Some(loss / n + self.reg * lit::<T>(0.5) * z.norm_squared())
    }
}

fn mean_cubed_row_norm<T: Real>(data: &Dataset<T>) -> T {
    let n = lit::<T>(data.n() as f64);
    data.features
        .row_iter()
        .fold(T::zero(), |acc, r| acc + r.norm().powi(3))
        / n
}

/// Logistic regression instance (`Min`, `mu = reg`). `reg` defaults to `1/n`
/// when `None`. The Hessian Lipschitz constant is the bound
/// `(1/n) sum |a_i|^3 max|l'''|`.
pub fn make_logistic<T: Real>(data: Dataset<T>, reg: Option<T>) -> Result<ProblemInstance<T>> {
    let reg = reg.unwrap_or_else(|| T::one() / lit::<T>(data.n() as f64));
    if !(reg > T::zero()) {
        return Err(Error::Config("logistic regularization must be positive".into()));
    }
    let bound = mean_cubed_row_norm(&data) * lit::<T>(LOGISTIC_THIRD_DERIV_MAX);
    let l = if bound > T::zero() { bound } else { T::default_epsilon() };
    let label = format!("logistic(n={},d={},reg={},data={})", data.n(), data.d(), reg, data.fingerprint());
    let d = data.d();
    Ok(ProblemInstance::new(label, ProblemKind::Min, d, l, Arc::new(Logistic { data, reg }))?
        .with_strong_mu(reg))
}

/// Fairness-aware classification saddle
/// `(1/n) sum [l(b_i a_i^T x) - beta l(c_i y a_i^T x)] + (lx/2)|x|^2 - (ly/2) y^2`
/// over `z = (x, y)` with scalar `y`.
#[derive(Debug, Clone)]
pub struct Fairness<T: Real> {
    pub data: Dataset<T>,
    pub protected: DVector<T>,
    pub beta: T,
    pub lam_x: T,
    pub lam_y: T,
}

impl<T: Real> Fairness<T> {
    fn split(&self, z: &DVector<T>) -> (DVector<T>, T) {
        let d = self.data.d();
        (z.rows(0, d).into_owned(), z[d])
    }
}

impl<T: Real> Model<T> for Fairness<T> {
    fn operator(&self, z: &DVector<T>) -> DVector<T> {
        let d = self.data.d();
        let n = lit::<T>(self.data.n() as f64);
        let (x, y) = self.split(z);
        let s = &self.data.features * &x;
        let mut wx = DVector::zeros(s.len());
        let mut grad_y = T::zero();
        for i in 0..s.len() {
            let b = self.data.labels[i];
            let c = self.protected[i];
            let u = c * y * s[i];
            let d1u = logistic_d1(u);
            wx[i] = (logistic_d1(b * s[i]) * b - self.beta * d1u * c * y) / n;
            grad_y -= self.beta * d1u * c * s[i] / n;
        }
        grad_y -= self.lam_y * y;
        let gx = self.data.features.tr_mul(&wx) + &x * self.lam_x;
        let mut out = DVector::zeros(d + 1);
        out.rows_mut(0, d).copy_from(&gx);
        out[d] = -grad_y;
        out
    }

    fn jacobian(&self, z: &DVector<T>) -> DMatrix<T> {
        let d = self.data.d();
        let n = lit::<T>(self.data.n() as f64);
        let (x, y) = self.split(z);
        let s = &self.data.features * &x;
        let mut scaled = self.data.features.clone();
        let mut wxy = DVector::zeros(s.len());
        let mut fyy = T::zero();
        for i in 0..s.len() {
            let b = self.data.labels[i];
            let c = self.protected[i];
            let u = c * y * s[i];
            let d2u = logistic_d2(u);
            let wxx = (logistic_d2(b * s[i]) - self.beta * d2u * y * y) / n;
            scaled.row_mut(i).scale_mut(wxx);
            wxy[i] = -self.beta * (d2u * y * s[i] + logistic_d1(u) * c) / n;
            fyy -= self.beta * d2u * s[i] * s[i] / n;
        }
        fyy -= self.lam_y;
        let mut fxx = self.data.features.tr_mul(&scaled);
        for i in 0..d {
            fxx[(i, i)] += self.lam_x;
        }
        let fxy = self.data.features.tr_mul(&wxy);
        let mut j = DMatrix::zeros(d + 1, d + 1);
        j.view_mut((0, 0), (d, d)).copy_from(&fxx);
        for i in 0..d {
            j[(i, d)] = fxy[i];
            j[(d, i)] = -fxy[i];
        }
        j[(d, d)] = -fyy;
        j
    }

    fn value(&self, z: &DVector<T>) -> Option<T> {
        let n = lit::<T>(self.data.n() as f64);
        let half = lit::<T>(0.5);
        let (x, y) = self.split(z);
        let s = &self.data.features * &x;
        let mut loss = T::zero();
        for i in 0..s.len() {
            loss += softplus_neg(self.data.labels[i] * s[i])
                - self.beta * softplus_neg(self.protected[i] * y * s[i]);
        }
        Some(loss / n + half * self.lam_x * x.norm_squared() - half * self.lam_y * y * y)
    }
}

/// Fairness-aware saddle over `(x, y)` of dimension `d + 1`.
///
/// The `-beta l(c y a^T x)` term is concave in `x`, so the operator is only
/// monotone where the regularizer dominates; `strong_mu` is reported as 0.
/// The Lipschitz constant is a heuristic local bound.
pub fn make_fairness<T: Real>(
    data: Dataset<T>,
    beta: T,
    lam_x: T,
    lam_y: T,
) -> Result<ProblemInstance<T>> {
    let protected = data
        .protected
        .clone()
        .ok_or_else(|| Error::Config("fairness problem requires a protected feature".into()))?;
    let n = lit::<T>(data.n() as f64);
    let l3 = lit::<T>(LOGISTIC_THIRD_DERIV_MAX);
    let quarter = lit::<T>(0.25);
    let mut bound = T::zero();
    for row in data.features.row_iter() {
        let a = row.norm();
        bound += (T::one() + beta) * l3 * a.powi(3) + beta * quarter * (a * a + a);
    }
    bound /= n;
    let l = if bound > T::zero() { bound } else { T::default_epsilon() };
    let label = format!(
        "fairness(n={},d={},beta={},lx={},ly={},data={})",
        data.n(),
        data.d(),
        beta,
        lam_x,
        lam_y,
        data.fingerprint()
    );
    let dim = data.d() + 1;
    ProblemInstance::new(
        label,
        ProblemKind::Minimax,
        dim,
        l,
        Arc::new(Fairness { data, protected, beta, lam_x, lam_y }),
    )
    .map(|p| p.with_primal_dim(dim - 1))
}

/// Affine operator `F(z) = B z + c` (kind `MNE`, or `Min` when `B` is symmetric
/// and `min` is requested). Any positive `L` is valid for a constant Jacobian;
/// 1 is reported.
#[derive(Debug, Clone)]
pub struct Affine<T: Real> {
    pub b: DMatrix<T>,
    pub c: DVector<T>,
}

impl<T: Real> Model<T> for Affine<T> {
    fn operator(&self, z: &DVector<T>) -> DVector<T> {
        &self.b * z + &self.c
    }

    fn jacobian(&self, _z: &DVector<T>) -> DMatrix<T> {
        self.b.clone()
    }

    fn value(&self, z: &DVector<T>) -> Option<T> {
        Some(lit::<T>(0.5) * z.dot(&(&self.b * z)) + self.c.dot(z))
    }
}

pub fn make_affine<T: Real>(b: DMatrix<T>, c: DVector<T>) -> Result<ProblemInstance<T>> {
    let d = c.len();
    if b.nrows() != d || b.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: b.nrows() });
    }
    let mu = min_sym_eigenvalue(&b);
    let mut inst = ProblemInstance::new(format!("affine(d={d})"), ProblemKind::Mne, d, T::one(), Arc::new(Affine { b: b.clone(), c: c.clone() }))?
        .with_strong_mu(if mu > T::zero() { mu } else { T::zero() });
    if mu > T::zero() {
        if let Some(z) = b.lu().solve(&(-c)) {
            inst = inst.with_solution(z);
        }
    }
    Ok(inst)
}

/// Strongly monotone operator with a known root:
/// `F(z) = B (z - z*) + (rho/2)|z - z*| (z - z*)`.
///
/// With symmetric `B` it is the gradient of
/// `(1/2)(z - z*)^T B (z - z*) + (rho/6)|z - z*|^3` and the instance is `Min`.
#[derive(Debug, Clone)]
pub struct AffineCubic<T: Real> {
    pub b: DMatrix<T>,
    pub center: DVector<T>,
    pub rho: T,
}

impl<T: Real> Model<T> for AffineCubic<T> {
    fn operator(&self, z: &DVector<T>) -> DVector<T> {
        let w = z - &self.center;
        &self.b * &w + cubic_norm_grad(&w, self.rho)
    }

    fn jacobian(&self, z: &DVector<T>) -> DMatrix<T> {
        let w = z - &self.center;
        &self.b + cubic_norm_hessian(&w, self.rho)
    }

    fn value(&self, z: &DVector<T>) -> Option<T> {
        let w = z - &self.center;
        Some(lit::<T>(0.5) * w.dot(&(&self.b * &w)) + self.rho / lit::<T>(6.0) * w.norm().powi(3))
    }

    fn is_smooth_near(&self, z: &DVector<T>, radius: T) -> bool {
        self.rho == T::zero() || (z - &self.center).norm() > radius
    }
}

pub fn make_affine_cubic<T: Real>(
    b: DMatrix<T>,
    center: DVector<T>,
    rho: T,
) -> Result<ProblemInstance<T>> {
    let d = center.len();
    if b.nrows() != d || b.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: b.nrows() });
    }
    if rho < T::zero() {
        return Err(Error::Config("cubic weight must be nonnegative".into()));
    }
    let symmetric = crate::scalar::norm_inf(&(&b - b.transpose())) == T::zero();
    let kind = if symmetric { ProblemKind::Min } else { ProblemKind::Mne };
    let mu = min_sym_eigenvalue(&b);
    let l = if rho > T::zero() { rho } else { T::one() };
    let mut inst = ProblemInstance::new(
        format!("affine_cubic(d={d},rho={rho})"),
        kind,
        d,
        l,
        Arc::new(AffineCubic { b, center: center.clone(), rho }),
    )?
    .with_strong_mu(if mu > T::zero() { mu } else { T::zero() })
    .with_solution(center);
    if symmetric {
        inst = inst.with_reference_value(T::zero());
    }
    Ok(inst)
}

/// Smallest eigenvalue of the symmetric part of `b`.
pub(crate) fn min_sym_eigenvalue<T: Real>(b: &DMatrix<T>) -> T {
    let sym = (b + b.transpose()) * lit::<T>(0.5);
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(T::max_value().unwrap_or_else(T::one), |a, v| if v < a { v } else { a })
}

/// Random `d x d` matrix whose symmetric part is `mu I + P^T P / d` and whose
/// skew part has scale `skew`. Deterministic in `seed`.
pub fn random_monotone_matrix<T: Real>(d: usize, mu: f64, skew: f64, seed: u64) -> DMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let k = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let mut b = p.tr_mul(&p) / d as f64 + (&k - k.transpose()) * (0.5 * skew);
    for i in 0..d {
        b[(i, i)] += mu;
    }
    b.map(lit::<T>)
}
