//! Ground-truth Gaussian linear chance-constrained problems, synthetic data,
//! the phase split, the exact feasibility oracle and sample/instance files.
//!
//! The problem is `min c'x  s.t.  P(ξ'x ≤ b) ≥ 1 − α` with `ξ ~ N(μ, Σ)`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mathkit::{
    cholesky_psd, dot, norm2, sample_mvn, std_normal_cdf, MathError, Matrix, PsdFactor,
    RepairPolicy, RngStream, Vector,
};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },
    #[error("ragged rows: line {line} has {found} fields, header has {expected}")]
    RaggedRows {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("sample file has no data rows")]
    EmptySet,
    #[error("split sizes n1={n1}, n2={n2} do not fit {n} samples (both phases need data)")]
    SizeMismatch { n: usize, n1: usize, n2: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("instance file {path}: {message}")]
    InstanceFile { path: PathBuf, message: String },
}

/// `min c'x  s.t.  P(ξ'x ≤ b) ≥ 1 − α`, `ξ ~ N(μ, Σ)`.
#[derive(Clone, Debug)]
pub struct GaussianLinearCcp {
    mu: Vector,
    sigma: Matrix,
    factor: PsdFactor,
    c: Vector,
    b: f64,
    alpha: f64,
}

impl GaussianLinearCcp {
    pub fn new(
        mu: Vector,
        sigma: Matrix,
        c: Vector,
        b: f64,
        alpha: f64,
    ) -> Result<Self, InstanceError> {
        let d = mu.len();
        if d == 0 {
            return Err(InstanceError::Invalid(
                "dimension must be at least 1".into(),
            ));
        }
        if sigma.rows() != d || sigma.cols() != d || c.len() != d {
            return Err(InstanceError::Invalid(format!(
                "dimension mismatch: mu has {d} entries, sigma is {}x{}, c has {}",
                sigma.rows(),
                sigma.cols(),
                c.len()
            )));
        }
        if !mu.iter().chain(&c).all(|v| v.is_finite()) || !b.is_finite() {
            return Err(InstanceError::Invalid("non-finite entries".into()));
        }
        if c.iter().all(|&v| v == 0.0) {
            return Err(InstanceError::Invalid(
                "objective vector c must be nonzero".into(),
            ));
        }
        if !(b > 0.0) {
            return Err(InstanceError::Invalid(format!(
                "b must be positive, got {b}"
            )));
        }
        check_alpha(alpha)?;
        let factor = cholesky_psd(&sigma, RepairPolicy::Bounded)?;
        Ok(Self {
            mu,
            sigma,
            factor,
            c,
            b,
            alpha,
        })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self, InstanceError> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }
    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }
    pub fn factor(&self) -> &PsdFactor {
        &self.factor
    }
    pub fn c(&self) -> &[f64] {
        &self.c
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    /// Target satisfaction level `1 − α`.
    pub fn gamma(&self) -> f64 {
        1.0 - self.alpha
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.c, x)
    }
}

fn check_alpha(alpha: f64) -> Result<(), InstanceError> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(InstanceError::Invalid(format!(
            "alpha must lie in (0, 0.5), got {alpha}"
        )))
    }
}

/// Violation tolerance used by [`generate_canonical_instance`].
pub const CANONICAL_ALPHA: f64 = 0.1;
/// Right-hand side of the canonical family; positive so `x = 0` is strictly feasible.
pub const CANONICAL_B: f64 = 2.0;

const INSTANCE_STREAM: u64 = 0x1157;

/// Reproducible instance family, a pure function of `(d, seed)`:
/// `μ_k ~ U(−0.5, 0.5)`, `Σ = A·Aᵀ/d + 0.1·I` with `A_ij ~ N(0, 1)`,
/// `c_k ~ U(−1, 0)` normalized to unit length, `b = 2`, `α = 0.1`.
pub fn generate_canonical_instance(
    d: usize,
    seed: u64,
) -> Result<GaussianLinearCcp, InstanceError> {
    if d == 0 {
        return Err(InstanceError::Invalid(
            "dimension must be at least 1".into(),
        ));
    }
    // a derived stream, so instance parameters never share draws with the
    // replication data generated from stream index 0 of the same seed
    let mut rng = RngStream::new(seed, 0).derive(INSTANCE_STREAM);
    let mu: Vector = (0..d).map(|_| rng.uniform_range(-0.5, 0.5)).collect();
    let mut a = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] = rng.standard_normal();
        }
    }
    let mut sigma = a.gram().scale(1.0 / d as f64);
    for i in 0..d {
        sigma[(i, i)] += 0.1;
    }
    let mut c: Vector = (0..d).map(|_| rng.uniform_range(-1.0, 0.0)).collect();
    let norm = norm2(&c);
    for v in &mut c {
        *v /= norm;
    }
    GaussianLinearCcp::new(mu, sigma, c, CANONICAL_B, CANONICAL_ALPHA)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Generated { seed: u64, index: u64 },
    File(PathBuf),
    Derived,
}

/// i.i.d. draws of ξ, one per row.
#[derive(Clone, Debug)]
pub struct SampleSet {
    data: Matrix,
    provenance: Provenance,
}

impl SampleSet {
    pub fn new(data: Matrix, provenance: Provenance) -> Result<Self, InstanceError> {
        if !data.is_finite() {
            return Err(InstanceError::Invalid(
                "samples contain non-finite entries".into(),
            ));
        }
        Ok(Self { data, provenance })
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }
    pub fn len(&self) -> usize {
        self.data.rows()
    }
    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }
    pub fn dim(&self) -> usize {
        self.data.cols()
    }
    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.row_iter()
    }
}

pub fn draw_samples(
    inst: &GaussianLinearCcp,
    n: usize,
    rng: &mut RngStream,
) -> Result<SampleSet, InstanceError> {
    if n == 0 {
        return Err(InstanceError::Invalid(
            "sample count must be at least 1".into(),
        ));
    }
    let provenance = Provenance::Generated {
        seed: rng.seed(),
        index: rng.index(),
    };
    let data = sample_mvn(inst.mu(), inst.factor(), n, rng)?;
    SampleSet::new(data, provenance)
}

/// Phase two gets rows `1..=n2`, phase one gets rows `n2+1..=n`.
#[derive(Clone, Debug)]
pub struct DataSplit {
    pub phase1: SampleSet,
    pub phase2: SampleSet,
}

pub fn split_data(samples: &SampleSet, n1: usize, n2: usize) -> Result<DataSplit, InstanceError> {
    let n = samples.len();
    if n1 == 0 || n2 == 0 || n1 + n2 != n {
        return Err(InstanceError::SizeMismatch { n, n1, n2 });
    }
    Ok(DataSplit {
        phase2: SampleSet::new(samples.data().slice_rows(0, n2), Provenance::Derived)?,
        phase1: SampleSet::new(samples.data().slice_rows(n2, n), Provenance::Derived)?,
    })
}

/// Exact `P(ξ'x ≤ b)` under the ground truth.
pub fn true_satisfaction_probability(inst: &GaussianLinearCcp, x: &[f64]) -> f64 {
    let spread = inst
        .factor()
        .quad_norm(x)
        .expect("decision vector dimension matches the instance");
    let center = dot(inst.mu(), x);
    if spread > 0.0 {
        std_normal_cdf((inst.b() - center) / spread)
    } else if center <= inst.b() {
        1.0
    } else {
        0.0
    }
}

/// Reads a sample CSV: header `x1,...,xd`, then `d` decimal floats per line.
pub fn read_samples(path: &Path) -> Result<SampleSet, InstanceError> {
    let file = fs::File::open(path).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut data = parse_samples(file)?;
    data.provenance = Provenance::File(path.to_path_buf());
    Ok(data)
}

pub fn parse_samples<R: std::io::Read>(input: R) -> Result<SampleSet, InstanceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let width = reader.headers().map_err(|e| csv_error(e, 1))?.len();
    let mut values = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(InstanceError::RaggedRows {
                line,
                expected: width,
                found: record.len(),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| InstanceError::Parse {
                line,
                column: col + 1,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(InstanceError::Parse {
                    line,
                    column: col + 1,
                    message: format!("non-finite value {field:?}"),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(InstanceError::EmptySet);
    }
    SampleSet::new(Matrix::from_vec(rows, width, values)?, Provenance::Derived)
}

fn csv_error(e: csv::Error, fallback_line: u64) -> InstanceError {
    let line = e.position().map_or(fallback_line, |p| p.line());
    InstanceError::Parse {
        line,
        column: 0,
        message: e.to_string(),
    }
}

pub fn write_samples(path: &Path, samples: &SampleSet) -> Result<(), InstanceError> {
    let mut out = String::new();
    let header: Vec<String> = (1..=samples.dim()).map(|k| format!("x{k}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in samples.rows() {
        let fields: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// On-disk instance document; `sigma` is row-major.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub d: usize,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub c: Vec<f64>,
    pub b: f64,
    pub alpha: f64,
}

impl From<&GaussianLinearCcp> for InstanceFile {
    fn from(inst: &GaussianLinearCcp) -> Self {
        Self {
            d: inst.dim(),
            mu: inst.mu().to_vec(),
            sigma: inst.sigma().as_slice().to_vec(),
            c: inst.c().to_vec(),
            b: inst.b(),
            alpha: inst.alpha(),
        }
    }
}

impl TryFrom<InstanceFile> for GaussianLinearCcp {
    type Error = InstanceError;

    fn try_from(f: InstanceFile) -> Result<Self, Self::Error> {
        if f.mu.len() != f.d || f.sigma.len() != f.d * f.d {
            return Err(InstanceError::Invalid(format!(
                "d = {} but mu has {} entries and sigma has {}",
                f.d,
                f.mu.len(),
                f.sigma.len()
            )));
        }
        let sigma = Matrix::from_vec(f.d, f.d, f.sigma)?;
        GaussianLinearCcp::new(f.mu, sigma, f.c, f.b, f.alpha)
    }
}

pub fn read_instance(path: &Path) -> Result<GaussianLinearCcp, InstanceError> {
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let doc: InstanceFile = toml::from_str(&text).map_err(|e| InstanceError::InstanceFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    GaussianLinearCcp::try_from(doc)
}

pub fn write_instance(path: &Path, inst: &GaussianLinearCcp) -> Result<(), InstanceError> {
    let text =
        toml::to_string(&InstanceFile::from(inst)).map_err(|e| InstanceError::InstanceFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    fs::write(path, text).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })
}
