use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// Dense labelled data `{a_i, b_i, c_i}` with `b_i, c_i` in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Real> {
    /// `n x d`, one sample per row.
    pub features: DMatrix<T>,
    pub labels: DVector<T>,
    /// Protected attribute used by the fairness problem.
    pub protected: Option<DVector<T>>,
}

fn is_sign<T: Real>(v: T) -> bool {
    v == T::one() || v == -T::one()
}

impl<T: Real> Dataset<T> {
    pub fn new(features: DMatrix<T>, labels: DVector<T>, protected: Option<DVector<T>>) -> Result<Self> {
        let (n, d) = features.shape();
        if n == 0 || d == 0 {
            return Err(Error::Config("dataset needs n >= 1 and d >= 1".into()));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
        }
        if !labels.iter().all(|&b| is_sign(b)) {
            return Err(Error::Config("labels must be exactly +1 or -1".into()));
        }
        if let Some(c) = &protected {
            if c.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: c.len() });
            }
            if !c.iter().all(|&v| is_sign(v)) {
                return Err(Error::Config("protected entries must be exactly +1 or -1".into()));
            }
        }
        Ok(Self { features, labels, protected })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    /// Moves feature column `col` out of the design matrix and uses its sign
    /// (`> 0` maps to +1) as the protected attribute.
    pub fn split_protected(self, col: usize) -> Result<Self> {
        let d = self.d();
        if col >= d {
            return Err(Error::Config(format!("protected column {col} out of range (d = {d})")));
        }
        if d == 1 {
            return Err(Error::Config("cannot remove the only feature column".into()));
        }
        let protected = DVector::from_fn(self.n(), |i, _| {
            if self.features[(i, col)] > T::zero() {
                T::one()
            } else {
                -T::one()
            }
        });
        let features = self.features.remove_column(col);
        Self::new(features, self.labels, Some(protected))
    }

    /// Stable content hash used to key cached reference values.
    pub fn fingerprint(&self) -> String {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.features.shape().hash(&mut h);
        for v in self.features.iter().chain(self.labels.iter()) {
            to_f64(*v).to_bits().hash(&mut h);
        }
        if let Some(c) = &self.protected {
            for v in c.iter() {
                to_f64(*v).to_bits().hash(&mut h);
            }
        }
        format!("{:016x}", h.finish())
    }
}

/// Synthetic logistic-regression data: standard normal features, a planted
/// unit-norm parameter `w`, and `b_i = +1` with probability
/// `1 / (1 + exp(-a_i^T w))`. Deterministic in `seed`.
pub fn gen_synthetic_logistic<T: Real>(n: usize, d: usize, seed: u64) -> Result<Dataset<T>> {
    if n == 0 || d == 0 {
        return Err(Error::Config("synthetic data needs n >= 1 and d >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
    let nw = w.norm();
    if nw > 0.0 {
        w /= nw;
    }
    let features = DMatrix::<f64>::from_fn(n, d, |_, _| rng.sample(StandardNormal));
    let margins = &features * &w;
    let labels = DVector::<f64>::from_fn(n, |i, _| {
        let p = 1.0 / (1.0 + (-margins[i]).exp());
        if rng.random::<f64>() < p {
            1.0
        } else {
            -1.0
        }
    });
    Dataset::new(features.map(lit::<T>), labels.map(lit::<T>), None)
}

/// Synthetic data for the fairness saddle: as [`gen_synthetic_logistic`],
/// plus a protected attribute correlated with the first feature.
pub fn gen_synthetic_fairness<T: Real>(n: usize, d: usize, seed: u64) -> Result<Dataset<T>> {
    let base = gen_synthetic_logistic::<f64>(n, d, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let protected = DVector::<f64>::from_fn(n, |i, _| {
        let noise: f64 = rng.sample(StandardNormal);
        if base.features[(i, 0)] + noise > 0.0 {
            1.0
        } else {
            -1.0
        }
    });
    Dataset::new(
        base.features.map(lit::<T>),
        base.labels.map(lit::<T>),
        Some(protected.map(lit::<T>)),
    )
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Reads a libsvm text file (`label index:value ...`, 1-based indices) into
/// a dense dataset. Labels in `{-1, 0, +1}` map `<= 0` to -1; any other pair
/// of distinct labels maps the smaller to -1 and the larger to +1.
pub fn read_libsvm<T: Real>(path: &Path) -> Result<Dataset<T>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_libsvm(&text)
}

pub(crate) fn parse_libsvm<T: Real>(text: &str) -> Result<Dataset<T>> {
    let mut raw_labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut dim = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().ok_or_else(|| parse_err(lineno, "missing label"))?;
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid label '{label_tok}'")))?;
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected index:value, got '{tok}'")))?;
            let i: usize = i
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid index '{i}'")))?;
            if i == 0 {
                return Err(parse_err(lineno, "indices are 1-based"));
            }
            if i <= last {
                return Err(parse_err(lineno, format!("indices must increase (saw {i} after {last})")));
            }
            last = i;
            let v: f64 = v
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid value '{v}'")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("non-finite value '{v}'")));
            }
            dim = dim.max(i);
            row.push((i - 1, v));
        }
        raw_labels.push((lineno, label));
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(0, "empty libsvm file"));
    }
    if dim == 0 {
        return Err(parse_err(0, "no features present"));
    }

    let mut distinct: Vec<f64> = raw_labels.iter().map(|&(_, l)| l).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    distinct.dedup();
    let signed = distinct.iter().all(|&l| l == -1.0 || l == 0.0 || l == 1.0);
    if !signed && distinct.len() > 2 {
        let (line, _) = raw_labels
            .iter()
            .find(|&&(_, l)| l != distinct[0] && l != distinct[1])
            .copied()
            .unwrap_or((0, 0.0));
        return Err(parse_err(line, format!("more than two classes: {distinct:?}")));
    }
    let labels = DVector::from_iterator(
        raw_labels.len(),
        raw_labels.iter().map(|&(_, l)| {
            let positive = if signed { l > 0.0 } else { l == distinct[distinct.len() - 1] };
            if positive {
                T::one()
            } else {
                -T::one()
            }
        }),
    );
    let mut features = DMatrix::zeros(rows.len(), dim);
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            features[(r, c)] = lit::<T>(v);
        }
    }
    Dataset::new(features, labels, None)
}

/// Writes the dataset back in libsvm format (zeros omitted).
pub fn write_libsvm<T: Real>(data: &Dataset<T>, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    for (i, row) in data.features.row_iter().enumerate() {
        let label = if data.labels[i] > T::zero() { "+1" } else { "-1" };
        let mut line = label.to_string();
        for (j, v) in row.iter().enumerate() {
            if *v != T::zero() {
                line.push_str(&format!(" {}:{}", j + 1, to_f64(*v)));
            }
        }
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
