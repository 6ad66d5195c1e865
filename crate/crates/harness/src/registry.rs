//! Named problems and methods.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use lazy_newton::problems::{
    gen_synthetic_fairness, gen_synthetic_logistic, make_affine, make_affine_cubic, make_cubic_bilinear, make_fairness,
    make_hard_cubic, make_logistic, random_monotone_matrix, read_libsvm, FAIRNESS_DEFAULT_BETA, FAIRNESS_DEFAULT_REG,
};
use lazy_newton::{Error, Point, Problem, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PROBLEM_NAMES: [&str; 6] = ["hard_cubic", "cubic_bilinear", "logistic", "fairness", "affine", "affine_cubic"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemName {
    HardCubic,
    CubicBilinear,
    Logistic,
    Fairness,
    Affine,
    AffineCubic,
}

impl FromStr for ProblemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "hard_cubic" => Self::HardCubic,
            "cubic_bilinear" => Self::CubicBilinear,
            "logistic" => Self::Logistic,
            "fairness" => Self::Fairness,
            "affine" => Self::Affine,
            "affine_cubic" => Self::AffineCubic,
            _ => {
                return Err(Error::Config(format!(
                    "unknown problem '{s}'; valid problems: {}",
                    PROBLEM_NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = *self as usize;
        f.write_str(PROBLEM_NAMES[i])
    }
}

/// A problem family plus its size and data parameters. Unset fields take
/// per-family defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: ProblemName,
    /// Size parameter (`n` for the cubic families, feature count otherwise).
    pub n: Option<usize>,
    /// Number of samples for synthetic datasets.
    pub samples: Option<usize>,
    pub data: Option<PathBuf>,
    /// Feature column used as the protected attribute when reading data.
    pub protected_column: Option<usize>,
    pub mu: Option<f64>,
    pub rho: Option<f64>,
    pub skew: Option<f64>,
    pub reg: Option<f64>,
    pub beta: Option<f64>,
    /// Constant fill of the starting point.
    pub z0: f64,
}

impl ProblemSpec {
    pub fn new(name: ProblemName) -> Self {
        Self {
            name,
            n: None,
            samples: None,
            data: None,
            protected_column: None,
            mu: None,
            rho: None,
            skew: None,
            reg: None,
            beta: None,
            z0: 0.0,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn with_data(mut self, path: PathBuf) -> Self {
        self.data = Some(path);
        self
    }

    /// Short, file-name-safe description.
    pub fn key(&self) -> String {
        let mut k = self.name.to_string();
        if let Some(n) = self.n {
            k.push_str(&format!("-n{n}"));
        }
        if let Some(s) = self.samples {
            k.push_str(&format!("-s{s}"));
        }
        if let Some(p) = &self.data {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            k.push_str(&format!("-{stem}"));
        }
        k
    }

    /// Instantiates the problem; `seed` drives every random choice.
    pub fn build(&self, seed: u64) -> Result<Problem> {
        let size = |default: usize| self.n.unwrap_or(default);
        let problem = match self.name {
            ProblemName::HardCubic => make_hard_cubic(size(10))?,
            ProblemName::CubicBilinear => {
                let n = size(10);
                make_cubic_bilinear(n, seed)?.with_label(format!("cubic_bilinear(n={n},seed={seed})"))
            }
            ProblemName::Logistic => {
                let data = match &self.data {
                    Some(path) => read_libsvm(path)?,
                    None => gen_synthetic_logistic(self.samples.unwrap_or(200), size(10), seed)?,
                };
                make_logistic(data, self.reg)?
            }
            ProblemName::Fairness => {
                let data = match &self.data {
                    Some(path) => read_libsvm::<f64>(path)?.split_protected(self.protected_column.unwrap_or(0))?,
                    None => gen_synthetic_fairness(self.samples.unwrap_or(200), size(10), seed)?,
                };
                let reg = self.reg.unwrap_or(FAIRNESS_DEFAULT_REG);
                make_fairness(data, self.beta.unwrap_or(FAIRNESS_DEFAULT_BETA), reg, reg)?
            }
            ProblemName::Affine => {
                let d = size(20);
                let b = random_monotone_matrix(d, self.mu.unwrap_or(0.0), self.skew.unwrap_or(1.0), seed);
                let c = seeded_vector(d, seed.wrapping_add(1));
                make_affine(b, c)?.with_label(format!("affine(d={d},seed={seed})"))
            }
            ProblemName::AffineCubic => {
                let d = size(20);
                let b = random_monotone_matrix(d, self.mu.unwrap_or(1.0), self.skew.unwrap_or(0.0), seed);
                let center = seeded_vector(d, seed.wrapping_add(1));
                make_affine_cubic(b, center, self.rho.unwrap_or(1.0))?
                    .with_label(format!("affine_cubic(d={d},seed={seed})"))
            }
        };
        Ok(problem)
    }

    pub fn start(&self, problem: &Problem) -> Point {
        Point::from_element(problem.dim(), self.z0)
    }
}

/// Deterministic vector with entries uniform in `[-1, 1)`.
fn seeded_vector(d: usize, seed: u64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Point::from_fn(d, |_, _| rng.random_range(-1.0..1.0))
}

pub const METHOD_NAMES: [&str; 9] =
    ["LEN", "NPE", "A-LEN", "A-NPE", "Lazy-CRN", "EG", "AGD", "LEN-restart", "A-LEN-restart"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Len,
    Npe,
    Alen,
    Anpe,
    LazyCrn,
    Eg,
    Agd,
    LenRestart,
    AlenRestart,
}

impl Method {
    /// Methods parameterized by the snapshot period `m`.
    pub fn uses_laziness(self) -> bool {
        matches!(self, Method::Len | Method::Alen | Method::LazyCrn | Method::LenRestart | Method::AlenRestart)
    }

    pub fn uses_stepsize(self) -> bool {
        matches!(self, Method::Eg | Method::Agd)
    }

    /// Legend label, e.g. `LEN-10`.
    pub fn legend(self, m: usize) -> String {
        if self.uses_laziness() {
            format!("{self}-{m}")
        } else {
            self.to_string()
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        Ok(match norm.as_str() {
            "len" => Self::Len,
            "npe" => Self::Npe,
            "alen" => Self::Alen,
            "anpe" => Self::Anpe,
            "lazycrn" | "crn" => Self::LazyCrn,
            "eg" => Self::Eg,
            "agd" => Self::Agd,
            "lenrestart" => Self::LenRestart,
            "alenrestart" => Self::AlenRestart,
            _ => {
                return Err(Error::Config(format!(
                    "unknown method '{s}'; valid methods: {}",
                    METHOD_NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(METHOD_NAMES[*self as usize])
    }
}
