//! Reference optimal values `f*` for problems without a closed form.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use lazy_newton::{
    agd_run, lazy_crn_run, Error, FirstOrderConfig, OracleCounters, Problem, ProblemKind, Result, STEPSIZE_GRID,
};

/// Default reference budget (first-order steps).
pub const DEFAULT_REFERENCE_BUDGET: usize = 100_000;
/// Reference runs stop once the gradient norm reaches this.
pub const REFERENCE_GRAD_TOL: f64 = 1e-12;
const CRN_REFERENCE_STEPS: usize = 1_000;
const CRN_REFERENCE_M: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub f_star: f64,
    /// Which run produced the value, e.g. `AGD(eta=0.1)`.
    pub source: String,
    pub counters: OracleCounters,
}

/// Lowest final value among AGD over the step-size grid and lazy CRN
/// (`m = 1`, `M = 6L`), each run for `budget` steps (CRN capped at 1000) or
/// until the gradient norm reaches 1e-12.
pub fn compute_reference(problem: &Problem, budget: usize) -> Result<Reference> {
    if problem.kind() != ProblemKind::Min {
        return Err(Error::Unsupported(format!(
            "reference values need a minimization problem, got {}",
            problem.kind()
        )));
    }
    if budget == 0 {
        return Err(Error::Config("reference budget must be positive".into()));
    }
    let z0 = lazy_newton::Point::zeros(problem.dim());
    let mut counters = OracleCounters::default();
    let mut best: Option<(f64, String)> = None;
    let mut offer = |value: f64, source: String| {
        if value.is_finite() && best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, source));
        }
    };

    for eta in STEPSIZE_GRID {
        let cfg = FirstOrderConfig::new(eta, budget).with_tolerance(REFERENCE_GRAD_TOL);
        match agd_run(problem, &z0, &cfg) {
            Ok(out) => {
                counters += out.counters;
                offer(problem.eval_value(&out.z)?, format!("AGD(eta={eta})"));
            }
            Err(Error::Divergence { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let m_reg = CRN_REFERENCE_M * problem.lipschitz();
    match lazy_crn_run(problem, &z0, budget.min(CRN_REFERENCE_STEPS), 1, m_reg, REFERENCE_GRAD_TOL) {
        Ok(out) => {
            counters += out.counters;
            offer(problem.eval_value(&out.z)?, "Lazy-CRN(m=1)".into());
        }
        Err(e) if e.is_numerical() => {}
        Err(e) => return Err(e),
    }
    let (f_star, source) = best.ok_or_else(|| Error::Numerical("every reference run diverged".into()))?;
    Ok(Reference { f_star, source, counters })
}

/// Reference values keyed by problem label, optionally persisted as
/// `label<TAB>value` lines.
#[derive(Debug, Default)]
pub struct ReferenceCache {
    values: Mutex<BTreeMap<String, f64>>,
}

impl ReferenceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.values.lock().expect("cache lock").get(label).copied()
    }

    pub fn insert(&self, label: &str, f_star: f64) {
        self.values.lock().expect("cache lock").insert(label.to_string(), f_star);
    }

    pub fn len(&self) -> usize {
        self.values.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cached value, or a fresh computation (whose oracle calls are
    /// returned; zero on a cache hit).
    pub fn get_or_compute(&self, problem: &Problem, budget: usize) -> Result<(f64, OracleCounters)> {
        if let Some(v) = self.get(problem.label()) {
            return Ok((v, OracleCounters::default()));
        }
        let r = compute_reference(problem, budget)?;
        self.insert(problem.label(), r.f_star);
        Ok((r.f_star, r.counters))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let cache = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (label, value) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::Parse { line: i + 1, message: "expected label<TAB>value".into() })?;
            let value = value
                .parse::<f64>()
                .map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
            cache.insert(label, value);
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for (k, v) in self.values.lock().expect("cache lock").iter() {
            text.push_str(&format!("{k}\t{v:.16e}\n"));
        }
        fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }
}

#[cfg(test)]
mod tests {
    use lazy_newton::problems::{make_cubic_bilinear, make_hard_cubic};

    use super::*;

    #[test]
    fn hard_cubic_one_dimensional() {
        let p = make_hard_cubic::<f64>(1).unwrap();
        let r = compute_reference(&p, 10_000).unwrap();
        assert!((r.f_star + 2.0 / 3.0).abs() <= 1e-8, "{r:?}");
    }

    #[test]
    fn cache_hit_costs_nothing() {
        let p = make_hard_cubic::<f64>(3).unwrap();
        let cache = ReferenceCache::new();
        let (a, first) = cache.get_or_compute(&p, 2_000).unwrap();
        assert!(first.grad_evals > 0);
        let (b, second) = cache.get_or_compute(&p, 2_000).unwrap();
        assert_eq!(a, b);
        assert_eq!(second, OracleCounters::default());
    }

    #[test]
    fn invalid_requests() {
        let p = make_hard_cubic::<f64>(2).unwrap();
        assert!(matches!(compute_reference(&p, 0), Err(Error::Config(_))));
        let q = make_cubic_bilinear::<f64>(2, 0).unwrap();
        assert!(matches!(compute_reference(&q, 10), Err(Error::Unsupported(_))));
    }

    #[test]
    fn persistence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("refs.tsv");
        let cache = ReferenceCache::new();
        cache.insert("hard_cubic(n=3)", -2.0);
        cache.insert("logistic(n=5,d=2)", 1.0 / 3.0);
        cache.save(&path).unwrap();
        let back = ReferenceCache::load(&path).unwrap();
        assert_eq!(back.get("logistic(n=5,d=2)"), Some(1.0 / 3.0));
        assert_eq!(back.len(), 2);
    }
}
