use lazy_newton::crn::crn_defect;
use lazy_newton::problems::{
    gen_synthetic_logistic, make_affine, make_affine_cubic, make_cubic_bilinear, make_hard_cubic, make_logistic,
    random_monotone_matrix,
};
use lazy_newton::scalar::norm_spectral;
use lazy_newton::{crn_step, factorize, JacobianMatrix, OracleCounters, Point, Problem};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Problem families with a rigorous Jacobian Lipschitz constant.
fn family(which: u8, seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match which % 5 {
        0 => make_hard_cubic(rng.random_range(1..8)).unwrap(),
        1 => make_cubic_bilinear(rng.random_range(1..6), seed).unwrap(),
        2 => make_logistic(gen_synthetic_logistic(30, rng.random_range(1..6), seed).unwrap(), None).unwrap(),
        3 => {
            let d = rng.random_range(1..10);
            let c = Point::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            make_affine(random_monotone_matrix(d, 0.0, 1.0, seed), c).unwrap()
        }
        _ => {
            let d = rng.random_range(1..10);
            let center = Point::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            make_affine_cubic(random_monotone_matrix(d, 0.1, 1.0, seed), center, 0.7).unwrap()
        }
    }
}

fn pair(p: &Problem, seed: u64, scale: f64) -> (Point, Point) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut draw = || Point::from_fn(p.dim(), |_, _| rng.random_range(-scale..scale));
    (draw(), draw())
}

fn op(p: &Problem, z: &Point) -> Point {
    p.eval_operator(z, &mut OracleCounters::default()).unwrap()
}

fn jac(p: &Problem, z: &Point) -> lazy_newton::Matrix {
    p.eval_jacobian(z, &mut OracleCounters::default()).unwrap().entries
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn operators_are_monotone(which in 0u8..5, seed in any::<u64>(), scale in 0.01f64..5.0) {
        let p = family(which, seed);
        let (x, y) = pair(&p, seed, scale);
        let inner = (op(&p, &x) - op(&p, &y)).dot(&(&x - &y));
        prop_assert!(inner >= -1e-10 * (1.0 + (&x - &y).norm_squared()), "{} {inner}", p.label());
    }

    #[test]
    fn jacobians_are_lipschitz(which in 0u8..5, seed in any::<u64>(), scale in 0.01f64..5.0) {
        let p = family(which, seed);
        let (x, y) = pair(&p, seed, scale);
        let lhs = norm_spectral(&(jac(&p, &x) - jac(&p, &y)));
        prop_assert!(lhs <= p.lipschitz() * (&x - &y).norm() * (1.0 + 1e-9) + 1e-12, "{}", p.label());
    }

    #[test]
    fn taylor_remainder_is_quadratic(which in 0u8..5, seed in any::<u64>(), scale in 0.01f64..5.0) {
        let p = family(which, seed);
        let (x, y) = pair(&p, seed, scale);
        let r = op(&p, &y) - op(&p, &x) - jac(&p, &x) * (&y - &x);
        let bound = p.lipschitz() / 2.0 * (&y - &x).norm_squared();
        prop_assert!(r.norm() <= bound * (1.0 + 1e-9) + 1e-10, "{} {} > {bound}", p.label(), r.norm());
    }

    #[test]
    fn shifted_solves_have_small_residual(d in 1usize..25, seed in any::<u64>(), skew in 0.0f64..3.0, log_lambda in -4.0f64..2.0) {
        let h = random_monotone_matrix::<f64>(d, 0.0, skew, seed);
        let fact = factorize(&JacobianMatrix::new(h.clone(), skew == 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rhs = Point::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let lambda = 10f64.powf(log_lambda);
        let x = fact.solve_shifted(lambda, &rhs).unwrap();
        let residual = (&h * &x + &x * lambda - &rhs).norm();
        prop_assert!(residual <= 1e-9 * (1.0 + rhs.norm()));
    }

    #[test]
    fn crn_steps_solve_the_cubic_equation(d in 1usize..20, seed in any::<u64>(), m_reg in 0.01f64..50.0, log_f in -6.0f64..3.0) {
        let h = random_monotone_matrix::<f64>(d, 0.0, 1.0, seed);
        let fact = factorize(&JacobianMatrix::new(h.clone(), false)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Point::from_fn(d, |_, _| rng.random_range(-1.0..1.0)) * 10f64.powf(log_f);
        let r = crn_step(&f, &fact, m_reg, None).unwrap();
        prop_assert!(crn_defect(&f, &h, m_reg, &r.step) <= 1e-8 * (1.0 + f.norm()));
        prop_assert!((r.lambda - m_reg / 2.0 * r.step.norm()).abs() <= 1e-8 * (1.0 + r.lambda));
        // descent direction for a monotone model
        prop_assert!(f.dot(&r.step) <= 1e-12);
    }
}
