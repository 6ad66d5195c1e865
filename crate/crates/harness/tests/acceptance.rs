//! Acceptance suite: one PASS/FAIL line per criterion. Criterion 10 is
//! reported but does not affect the exit status. Set
//! `LAZY_NEWTON_FULL_SCALE=1` to run criterion 10 at n = 500 (several
//! minutes); the default is n = 100.

use std::process::ExitCode;
use std::time::Instant;

use lazy_newton::crn::crn_defect;
use lazy_newton::problems::{
    gen_synthetic_logistic, make_affine, make_affine_cubic, make_cubic_bilinear, make_hard_cubic, make_logistic,
    random_monotone_matrix,
};
use lazy_newton::scalar::norm_inf;
use lazy_newton::shifted::solve_dense;
use lazy_newton::{
    crn_step, factorize, len_restart, len_run, ms_solve, JacobianMatrix, LenConfig, Matrix, MsConfig, OracleCounters,
    Point, Problem, RestartConfig,
};
use lazy_newton_harness::check::{fd_sweep, FD_TOLERANCE};
use lazy_newton_harness::compute_reference;
use lazy_newton_harness::registry::{ProblemName, ProblemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn random_point(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Point {
    Point::from_fn(d, |_, _| rng.random_range(-scale..scale))
}

fn crn_oracle_defect() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let clock = Instant::now();
    let mut worst = 0.0f64;
    let mut violations = 0;
    for case in 0..200u64 {
        let d = rng.random_range(1..=20);
        let h = random_monotone_matrix::<f64>(d, 0.0, rng.random_range(0.0..2.0), 1000 + case);
        let f = random_point(&mut rng, d, 1.0) * 10f64.powf(rng.random_range(-3.0..2.0));
        let m = [0.1, 1.0, 10.0][case as usize % 3];
        let fact = match factorize(&JacobianMatrix::new(h.clone(), false)) {
            Ok(f) => f,
            Err(_) => {
                violations += 1;
                continue;
            }
        };
        match crn_step(&f, &fact, m, None) {
            Ok(r) => {
                let rel = crn_defect(&f, &h, m, &r.step) / (1.0 + f.norm());
                worst = worst.max(rel);
                if rel > 1e-8 {
                    violations += 1;
                }
            }
            Err(_) => violations += 1,
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    (
        violations == 0 && secs < 2.0,
        format!("200 instances, violations={violations}, max defect/(1+|F|)={worst:.2e}, time={secs:.3}s"),
    )
}

fn shifted_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut solve_err, mut recon_err) = (0.0f64, 0.0f64);
    let mut failures = 0;
    for case in 0..100u64 {
        let sym = case % 4 == 0;
        let h = random_monotone_matrix::<f64>(50, 0.0, if sym { 0.0 } else { rng.random_range(0.1..3.0) }, 2000 + case);
        let j = JacobianMatrix::new(h.clone(), sym);
        let lambda = 10f64.powf(rng.random_range(-3.0..1.0));
        let rhs = random_point(&mut rng, 50, 1.0);
        let Ok(fact) = factorize(&j) else {
            failures += 1;
            continue;
        };
        match (fact.solve_shifted(lambda, &rhs), solve_dense(&j, lambda, &rhs)) {
            (Ok(a), Ok(b)) => solve_err = solve_err.max((&a - &b).norm() / b.norm()),
            _ => failures += 1,
        }
        recon_err = recon_err.max(norm_inf(&(fact.reconstruct() - &h)) / (1.0 + norm_inf(&h)));
    }
    (
        failures == 0 && solve_err <= 1e-10 && recon_err <= 1e-8,
        format!("100 instances d=50, failures={failures}, max rel solve err={solve_err:.2e}, max recon err={recon_err:.2e}"),
    )
}

fn lazy_noop_affine() -> Outcome {
    let b = random_monotone_matrix::<f64>(20, 0.0, 1.0, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = random_point(&mut rng, 20, 1.0);
    let p = make_affine(b, c).unwrap();
    let z0 = random_point(&mut rng, 20, 1.0);
    let cfg = |m| LenConfig::new(50, m).with_m_reg(1.0);
    let (a, b) = (len_run(&p, &z0, &cfg(1)).unwrap(), len_run(&p, &z0, &cfg(10)).unwrap());
    let mut diff = 0.0f64;
    for (x, y) in a.iterates.iter().zip(&b.iterates).chain(a.half_points.iter().zip(&b.half_points)) {
        diff = diff.max((x - y).amax());
    }
    for (x, y) in a.eta_weights.iter().zip(&b.eta_weights) {
        diff = diff.max((x - y).abs());
    }
    for (ra, rb) in a.trace.records.iter().zip(&b.trace.records) {
        for (k, v) in &ra.metrics {
            if let Some(w) = rb.metrics.get(k) {
                diff = diff.max((v - w).abs());
            }
        }
    }
    let same_len = a.iterates.len() == b.iterates.len() && a.iterates.len() == 51;
    (
        same_len && diff <= 1e-9,
        format!("50 steps, max entrywise difference={diff:.2e}, factorizations {} vs {}", a.counters.factorizations, b.counters.factorizations),
    )
}

fn counter_law() -> Outcome {
    let p = make_cubic_bilinear::<f64>(10, 4).unwrap();
    let z0 = Point::zeros(p.dim());
    let c10 = len_run(&p, &z0, &LenConfig::new(100, 10)).unwrap().counters;
    let c1 = len_run(&p, &z0, &LenConfig::new(100, 1)).unwrap().counters;
    let len_ok = c10.jac_evals == 10 && c10.factorizations == 10 && c1.jac_evals == 100 && c1.factorizations == 100;

    let hc = make_hard_cubic::<f64>(10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_excess = i64::MIN;
    for m in [1usize, 2, 5, 10] {
        for _ in 0..3 {
            let zb = random_point(&mut rng, 10, 1.5);
            let cfg = MsConfig::new(m);
            let epochs = cfg.resolve(hc.lipschitz()).unwrap().epochs;
            let out = ms_solve(&hc, &zb, &cfg).unwrap();
            worst_excess = worst_excess.max(out.counters.jac_evals as i64 - (epochs as i64 + 2));
        }
    }
    (
        len_ok && worst_excess <= 0,
        format!(
            "LEN m=10 jac={} fact={}, m=1 jac={} fact={}; ms_solve max jac - (ceil(K/m)+2) = {worst_excess}",
            c10.jac_evals, c10.factorizations, c1.jac_evals, c1.factorizations
        ),
    )
}

fn len_displays() -> Outcome {
    let cb = make_cubic_bilinear::<f64>(20, 5).unwrap();
    let z0 = Point::zeros(cb.dim());
    let d0 = cb.dist_sq(&z0).unwrap().sqrt();
    let mut max_excess = f64::NEG_INFINITY;
    for m in [1usize, 5] {
        let out = len_run(&cb, &z0, &LenConfig::new(200, m)).unwrap();
        for z in &out.iterates {
            max_excess = max_excess.max(cb.dist_sq(z).unwrap().sqrt() - d0);
        }
    }
    let bounded = max_excess <= 1e-6;

    let hc = make_hard_cubic::<f64>(25).unwrap();
    let reference = compute_reference(&hc, 100_000).unwrap();
    let hc = hc.with_reference_value(reference.f_star);
    let z0 = Point::zeros(25);
    let r0 = hc.dist_sq(&z0).unwrap().sqrt();
    let mut worst_ratio = 0.0f64;
    let mut gap_ok = true;
    for m in [1usize, 5] {
        for t in [16usize, 64, 256] {
            let out = len_run(&hc, &z0, &LenConfig::new(t, m)).unwrap();
            let gap = hc.subopt_gap(&out.z_out).unwrap();
            let bound = out.m_reg * r0.powi(3) / (t as f64).powf(1.5);
            gap_ok &= gap <= bound + 1e-8;
            worst_ratio = worst_ratio.max(gap / bound);
        }
    }
    (
        bounded && gap_ok,
        format!(
            "cubic-bilinear max |z_t - z*| - |z0 - z*| = {max_excess:.2e}; hard-cubic max gap/bound = {worst_ratio:.2e} (f* from {})",
            reference.source
        ),
    )
}

fn ms_certification() -> Outcome {
    let hc = make_hard_cubic::<f64>(10).unwrap();
    let lg = make_logistic(gen_synthetic_logistic::<f64>(200, 10, 6).unwrap(), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut unverified, mut cond_fail, mut calls) = (0, 0, 0);
    let mut worst_sigma = 0.0f64;
    for i in 0..50 {
        let p = if i % 2 == 0 { &hc } else { &lg };
        let m = [1usize, 2, 5][(i / 2) % 3];
        let zb = random_point(&mut rng, p.dim(), 1.5);
        let cfg = MsConfig::new(m);
        let gamma = cfg.resolve(p.lipschitz()).unwrap().gamma;
        calls += 1;
        let Ok(out) = ms_solve(p, &zb, &cfg) else {
            unverified += 1;
            continue;
        };
        let dist = (&out.z_ms - &zb).norm();
        let ratio = out.grad_g_norm / (gamma * dist * dist);
        worst_sigma = worst_sigma.max(ratio);
        if !out.verified || ratio > 0.99 {
            unverified += 1;
        }
        let prox = (&out.z_ms - (&zb - &out.grad_f / out.lambda)).norm();
        if prox > 0.99 * dist + 1e-8 || dist < out.lambda / gamma - 1e-12 {
            cond_fail += 1;
        }
    }
    (
        unverified == 0 && cond_fail == 0,
        format!("{calls} calls, unverified={unverified}, both-condition failures={cond_fail}, max |grad g|/(gamma r^2)={worst_sigma:.3}"),
    )
}

fn restart_superlinear() -> Outcome {
    let d = 10;
    let b = random_monotone_matrix::<f64>(d, 1.0, 1.0, 7);
    let center = Point::from_fn(d, |i, _| (i as f64).sin());
    let p = make_affine_cubic(b, center, 1.0).unwrap();
    let z0 = Point::zeros(d);
    let d0 = p.dist_sq(&z0).unwrap();
    let out = len_restart(&p, &z0, &RestartConfig::new(1, 1e-12).with_epochs(3)).unwrap();
    let mut ok = out.epochs.len() == 3;
    let mut parts = Vec::new();
    for (s, e) in out.epochs.iter().enumerate() {
        let s = s as i32 + 1;
        let bound = 0.5f64.powf(1.5f64.powi(s - 1) + 1.0) * d0 * 1.001;
        let dist = e.dist_sq.unwrap_or(f64::INFINITY);
        ok &= dist <= bound;
        parts.push(format!("s={s}: {dist:.2e} <= {bound:.2e} (T={})", e.steps));
    }
    (ok, parts.join(", "))
}

/// `g(z) = f(z) + (gamma/3)|z - z̄|^3`.
struct Prox<'a> {
    p: &'a Problem,
    z_bar: Point,
    gamma: f64,
}

impl Prox<'_> {
    fn value(&self, z: &Point) -> f64 {
        self.p.eval_value(z).unwrap() + self.gamma / 3.0 * (z - &self.z_bar).norm().powi(3)
    }

    fn grad(&self, z: &Point) -> Point {
        let w = z - &self.z_bar;
        self.p.eval_operator(z, &mut OracleCounters::default()).unwrap() + &w * (self.gamma * w.norm())
    }

    fn hessian(&self, z: &Point) -> Matrix {
        let mut h = self.p.eval_jacobian(z, &mut OracleCounters::default()).unwrap().entries;
        let w = z - &self.z_bar;
        let nw = w.norm();
        if nw > 0.0 {
            h += &w * w.transpose() * (self.gamma / nw) + Matrix::identity(w.len(), w.len()) * (self.gamma * nw);
        }
        h
    }

    fn lipschitz(&self) -> f64 {
        self.p.lipschitz() + 2.0 * self.gamma
    }

    fn crn(&self, z: &Point) -> Point {
        let fact = factorize(&JacobianMatrix::new(self.hessian(z), true)).unwrap();
        z + crn_step(&self.grad(z), &fact, self.lipschitz(), None).unwrap().step
    }

    fn minimizer(&self) -> Point {
        let mut z = self.z_bar.clone();
        for _ in 0..500 {
            if self.grad(&z).norm() <= 1e-12 {
                break;
            }
            z = self.crn(&z);
        }
        z
    }
}

fn sequence_inequality(rng: &mut ChaCha8Rng) -> usize {
    let mut violations = 0;
    for _ in 0..1000 {
        let m = rng.random_range(2..=12);
        let r: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
        let lhs: f64 = (1..m).map(|t| r[..t].iter().sum::<f64>().powi(2)).sum();
        let rhs = (m * m) as f64 / 2.0 * r.iter().map(|x| x * x).sum::<f64>();
        if lhs > rhs * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    violations
}

fn auxiliary_inequalities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let seq = sequence_inequality(&mut rng);

    let hc = make_hard_cubic::<f64>(6).unwrap();
    let lg = make_logistic(gen_synthetic_logistic::<f64>(60, 5, 8).unwrap(), None).unwrap();
    let (mut dom, mut descent, mut checks) = (0, 0, 0);
    for p in [&hc, &lg] {
        for k in 0..5 {
            let z_bar = random_point(&mut rng, p.dim(), 1.5);
            let gamma = p.lipschitz() / [1.0, 2.0, 5.0, 10.0, 0.5][k];
            let g = Prox { p, z_bar, gamma };
            let z_hat = g.minimizer();
            for _ in 0..20 {
                let z = &z_hat + random_point(&mut rng, p.dim(), 1.0) * 10f64.powf(rng.random_range(-2.0..0.5));
                checks += 1;
                if g.grad(&z).norm() < gamma / 2.0 * (&z - &z_hat).norm_squared() - 1e-6 {
                    dom += 1;
                }
                let z_plus = g.crn(&z);
                let lhs = g.grad(&z_plus).norm().powf(1.5) / (3.0 * g.lipschitz().sqrt());
                if lhs > g.value(&z) - g.value(&z_plus) + 1e-8 {
                    descent += 1;
                }
            }
        }
    }
    (
        seq == 0 && dom == 0 && descent == 0,
        format!("sequence inequality 1000 cases: {seq} violations; gradient dominance {checks} points: {dom}; CRN descent {checks} steps: {descent}"),
    )
}

fn fd_verification() -> Outcome {
    let specs = [
        ProblemSpec::new(ProblemName::HardCubic).with_n(8),
        ProblemSpec::new(ProblemName::CubicBilinear).with_n(6),
        ProblemSpec { samples: Some(60), ..ProblemSpec::new(ProblemName::Logistic).with_n(6) },
        ProblemSpec { samples: Some(60), ..ProblemSpec::new(ProblemName::Fairness).with_n(6) },
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for spec in &specs {
        let (g, j) = fd_sweep(spec, 20, 9).unwrap();
        ok &= g <= FD_TOLERANCE && j <= FD_TOLERANCE;
        parts.push(format!("{} grad={g:.1e} jac={j:.1e}", spec.name));
    }
    (ok, parts.join(", "))
}

fn lazy_speedup() -> Outcome {
    let n = if std::env::var("LAZY_NEWTON_FULL_SCALE").is_ok_and(|v| v == "1") { 500 } else { 100 };
    let p = make_cubic_bilinear::<f64>(n, 10).unwrap();
    let z0 = Point::zeros(p.dim());
    let mut rows = Vec::new();
    for m in [1usize, 10, 100] {
        let clock = Instant::now();
        let cfg = LenConfig::new(20_000, m).with_tolerance(1e-8).with_record_trace(false).with_keep_points(false);
        let out = len_run(&p, &z0, &cfg).unwrap();
        let reached = out.trace.meta("stop") != Some("budget");
        rows.push((m, out.steps, out.counters.factorizations, clock.elapsed().as_secs_f64(), reached));
    }
    let (_, steps1, fact1, time1, reached1) = rows[0];
    let mut ok = reached1;
    let mut parts = vec![format!("n={n} m=1: steps={steps1} fact={fact1} time={time1:.2}s")];
    for &(m, steps, fact, time, reached) in &rows[1..] {
        ok &= reached && fact * 5 <= fact1 && steps <= 3 * steps1;
        parts.push(format!("m={m}: steps={steps} fact={fact} time ratio={:.2}", time / time1));
    }
    (ok, parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("CRN oracle defect", crn_oracle_defect),
        ("shifted solve equivalence", shifted_equivalence),
        ("lazy no-op on affine operators", lazy_noop_affine),
        ("counter law", counter_law),
        ("LEN boundedness and gap bound", len_displays),
        ("MS oracle certification", ms_certification),
        ("restart superlinearity", restart_superlinear),
        ("auxiliary inequality suites", auxiliary_inequalities),
        ("finite-difference verification", fd_verification),
        ("lazy speedup trend (soft, not gated)", lazy_speedup),
    ];
    let mut gated_failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = check();
        println!("criterion {:>2} {}: {name}: {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
        if !pass && i + 1 != 10 {
            gated_failures += 1;
        }
    }
    if gated_failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{gated_failures} gated criteria failed");
        ExitCode::FAILURE
    }
}
