//! Experiment configuration files.
//!
//! ```toml
//! [run]
//! steps = 100
//! seeds = [0, 1]
//! tolerance = 1e-8
//!
//! [[problem]]
//! name = "cubic_bilinear"
//! n = 50
//!
//! [[method]]
//! name = "LEN"
//! m = [1, 10, 100]
//!
//! [[method]]
//! name = "EG"
//! stepsize = [1.0, 0.1, 0.01, 0.001]
//! ```
//!
//! `[run]` keys: `steps`, `seeds`, `tolerance`, `eps` (restart target),
//! `reference_budget`, `metric_every`, `parallel`.
//! `[[problem]]` keys: `name`, `n`, `samples`, `data`, `protected_column`,
//! `mu`, `rho`, `skew`, `reg`, `beta`, `z0`.
//! `[[method]]` keys: `name`, `m`, `stepsize`, `M`, `gamma`, `alpha`, `steps`.
//! Scalars are accepted wherever a list is.

use std::fs;
use std::path::{Path, PathBuf};

use lazy_newton::baselines::STEPSIZE_GRID;
use lazy_newton::{Error, Result};
use toml::{Table, Value};

use crate::reference::DEFAULT_REFERENCE_BUDGET;
use crate::registry::{Method, ProblemName, ProblemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub method: Method,
    pub m: Vec<usize>,
    pub stepsizes: Vec<f64>,
    pub m_reg: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: f64,
    pub steps: Option<usize>,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            m: vec![1],
            stepsizes: STEPSIZE_GRID.to_vec(),
            m_reg: None,
            gamma: None,
            alpha: lazy_newton::alen::DEFAULT_ALPHA,
            steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub steps: usize,
    pub seeds: Vec<u64>,
    pub tolerance: f64,
    pub eps: f64,
    pub reference_budget: usize,
    pub metric_every: usize,
    pub parallel: bool,
    pub problems: Vec<ProblemSpec>,
    pub methods: Vec<MethodSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            seeds: vec![0],
            tolerance: 0.0,
            eps: 1e-8,
            reference_budget: DEFAULT_REFERENCE_BUDGET,
            metric_every: 0,
            parallel: false,
            problems: Vec::new(),
            methods: Vec::new(),
        }
    }
}

fn cfg_err(msg: String) -> Error {
    Error::Config(msg)
}

fn check_keys(table: &Table, section: &str, allowed: &[&str]) -> Result<()> {
    for k in table.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(cfg_err(format!("unknown key '{k}' in [{section}]; allowed: {}", allowed.join(", "))));
        }
    }
    Ok(())
}

fn as_real(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(cfg_err(format!("'{key}' must be a number"))),
    }
}

fn as_count(v: &Value, key: &str) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(cfg_err(format!("'{key}' must be a nonnegative integer"))),
    }
}

fn list<T>(v: &Value, key: &str, one: impl Fn(&Value, &str) -> Result<T>) -> Result<Vec<T>> {
    let out = match v {
        Value::Array(items) => items.iter().map(|x| one(x, key)).collect::<Result<Vec<_>>>()?,
        other => vec![one(other, key)?],
    };
    if out.is_empty() {
        return Err(cfg_err(format!("'{key}' must not be empty")));
    }
    Ok(out)
}

fn opt<T>(t: &Table, key: &str, f: impl Fn(&Value, &str) -> Result<T>) -> Result<Option<T>> {
    t.get(key).map(|v| f(v, key)).transpose()
}

fn tables<'a>(root: &'a Table, key: &str) -> Result<Vec<&'a Table>> {
    match root.get(key) {
        None => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_table().ok_or_else(|| cfg_err(format!("[[{key}]] entries must be tables"))))
            .collect(),
        Some(Value::Table(t)) => Ok(vec![t]),
        Some(_) => Err(cfg_err(format!("'{key}' must be a table"))),
    }
}

fn name_of<'a>(t: &'a Table, section: &str) -> Result<&'a str> {
    t.get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| cfg_err(format!("[{section}] needs a string 'name'")))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    /// Parses config text; relative `data` paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
                .unwrap_or(0);
            Error::Parse { line, message: e.message().to_string() }
        })?;
        check_keys(&root, "top level", &["run", "problem", "method"])?;
        let mut cfg = ExperimentConfig::default();

        if let Some(run) = root.get("run") {
            let run = run.as_table().ok_or_else(|| cfg_err("[run] must be a table".into()))?;
            check_keys(
                run,
                "run",
                &["steps", "seeds", "tolerance", "eps", "reference_budget", "metric_every", "parallel"],
            )?;
            if let Some(s) = opt(run, "steps", as_count)? {
                cfg.steps = s;
            }
            if let Some(s) = opt(run, "seeds", |v, k| list(v, k, as_count))? {
                cfg.seeds = s.into_iter().map(|x| x as u64).collect();
            }
            if let Some(t) = opt(run, "tolerance", as_real)? {
                cfg.tolerance = t;
            }
            if let Some(e) = opt(run, "eps", as_real)? {
                cfg.eps = e;
            }
            if let Some(b) = opt(run, "reference_budget", as_count)? {
                cfg.reference_budget = b;
            }
            if let Some(m) = opt(run, "metric_every", as_count)? {
                cfg.metric_every = m;
            }
            if let Some(p) = run.get("parallel") {
                cfg.parallel = p.as_bool().ok_or_else(|| cfg_err("'parallel' must be true or false".into()))?;
            }
        }

        for t in tables(&root, "problem")? {
            check_keys(
                t,
                "problem",
                &["name", "n", "samples", "data", "protected_column", "mu", "rho", "skew", "reg", "beta", "z0"],
            )?;
            let mut spec = ProblemSpec::new(name_of(t, "problem")?.parse::<ProblemName>()?);
            spec.n = opt(t, "n", as_count)?;
            spec.samples = opt(t, "samples", as_count)?;
            spec.protected_column = opt(t, "protected_column", as_count)?;
            spec.mu = opt(t, "mu", as_real)?;
            spec.rho = opt(t, "rho", as_real)?;
            spec.skew = opt(t, "skew", as_real)?;
            spec.reg = opt(t, "reg", as_real)?;
            spec.beta = opt(t, "beta", as_real)?;
            spec.z0 = opt(t, "z0", as_real)?.unwrap_or(0.0);
            if let Some(d) = t.get("data") {
                let d = d.as_str().ok_or_else(|| cfg_err("'data' must be a path string".into()))?;
                let p = PathBuf::from(d);
                spec.data = Some(if p.is_relative() { base.join(p) } else { p });
            }
            cfg.problems.push(spec);
        }

        for t in tables(&root, "method")? {
            check_keys(t, "method", &["name", "m", "stepsize", "M", "gamma", "alpha", "steps"])?;
            let mut spec = MethodSpec::new(name_of(t, "method")?.parse::<Method>()?);
            if let Some(m) = opt(t, "m", |v, k| list(v, k, as_count))? {
                spec.m = m;
            }
            if let Some(s) = opt(t, "stepsize", |v, k| list(v, k, as_real))? {
                spec.stepsizes = s;
            }
            spec.m_reg = opt(t, "M", as_real)?;
            spec.gamma = opt(t, "gamma", as_real)?;
            spec.steps = opt(t, "steps", as_count)?;
            if let Some(a) = opt(t, "alpha", as_real)? {
                spec.alpha = a;
            }
            cfg.methods.push(spec);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.problems.is_empty() || self.methods.is_empty() {
            return Err(cfg_err("config needs at least one [[problem]] and one [[method]]".into()));
        }
        if self.steps == 0 {
            return Err(cfg_err("'steps' must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(cfg_err("'seeds' must not be empty".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(cfg_err("'tolerance' must be nonnegative".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(cfg_err("'eps' must lie in (0, 1)".into()));
        }
        for m in &self.methods {
            if m.m.contains(&0) {
                return Err(cfg_err(format!("{}: m must be at least 1", m.method)));
            }
            if m.stepsizes.iter().any(|s| !(*s > 0.0)) {
                return Err(cfg_err(format!("{}: stepsizes must be positive", m.method)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_example() {
        let text = r#"
[run]
steps = 50
seeds = [1, 2]
tolerance = 1e-8
parallel = true

[[problem]]
name = "cubic_bilinear"
n = 20

[[problem]]
name = "logistic"
data = "data/a9a.svm"

[[method]]
name = "LEN"
m = [1, 10, 100]

[[method]]
name = "EG"
"#;
        let cfg = ExperimentConfig::parse(text, Path::new("/cfg")).unwrap();
        assert_eq!(cfg.steps, 50);
        assert_eq!(cfg.seeds, vec![1, 2]);
        assert!(cfg.parallel);
        assert_eq!(cfg.problems[1].data.as_deref(), Some(Path::new("/cfg/data/a9a.svm")));
        assert_eq!(cfg.methods[0].m, vec![1, 10, 100]);
        assert_eq!(cfg.methods[1].stepsizes, STEPSIZE_GRID.to_vec());
    }

    #[test]
    fn errors_name_the_problem() {
        let bad_method = "[[problem]]\nname = \"hard_cubic\"\n[[method]]\nname = \"Newton\"\n";
        let e = ExperimentConfig::parse(bad_method, Path::new(".")).unwrap_err().to_string();
        assert!(e.contains("valid methods"), "{e}");

        let bad_key = "[run]\nstep = 3\n";
        let e = ExperimentConfig::parse(bad_key, Path::new(".")).unwrap_err().to_string();
        assert!(e.contains("unknown key 'step'"), "{e}");

        let syntax = "[run\nsteps = 3\n";
        assert!(matches!(ExperimentConfig::parse(syntax, Path::new(".")), Err(Error::Parse { .. })));

        let empty = "[run]\nsteps = 3\n";
        assert!(matches!(ExperimentConfig::parse(empty, Path::new(".")), Err(Error::Config(_))));
    }

    #[test]
    fn scalars_promote_to_lists() {
        let text = "[run]\nseeds = 4\n[[problem]]\nname = \"affine\"\n[[method]]\nname = \"LEN\"\nm = 10\n";
        let cfg = ExperimentConfig::parse(text, Path::new(".")).unwrap();
        assert_eq!(cfg.seeds, vec![4]);
        assert_eq!(cfg.methods[0].m, vec![10]);
    }
}
