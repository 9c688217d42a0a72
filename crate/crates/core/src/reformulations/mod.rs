//! Parameter grids and solution paths `{(s_j, x*(s_j))}` for each
//! reformulation family, built from phase-one data, plus the benchmarks the
//! experiments compare against and a KL-divergence diagnostic.

mod grid;
mod io;
mod kl;
mod paths;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instances::InstanceError;
use crate::mathkit::{MathError, Matrix, Vector};
use crate::solvers::SolverError;

pub use grid::{build_grid, phase_one_stats, PhaseOneStats};
pub use io::{parse_path_csv, read_path_csv, write_path_csv};
pub use kl::{binary_kl, kl_worst_case_mean};
pub use paths::{
    build_path, dro_kappa, fast_segment_points, solve_dro_benchmark, solve_dro_point,
    solve_fast_benchmark, solve_ro_point, solve_sca_benchmark, solve_so_benchmark, solve_so_point,
    Benchmark,
};

#[derive(Debug, Error)]
pub enum ReformulationError {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("phase-one covariance is singular; Mahalanobis distances are undefined")]
    SingularCovariance,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("path file line {line}: {message}")]
    PathFile { line: u64, message: String },
}

/// Reformulation family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Ellipsoidal-set robust optimization, `μ̂'x + √s‖Σ̂^{1/2}x‖ ≤ b`.
    Ro,
    /// Moment-based distributionally robust optimization.
    Dro,
    /// Scenario optimization on the first `s` phase-one constraints.
    So,
    /// Line segment between the zero anchor and the full scenario solution.
    Fast,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ro => "ro",
            Method::Dro => "dro",
            Method::So => "so",
            Method::Fast => "fast",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ro" => Ok(Method::Ro),
            "dro" => Ok(Method::Dro),
            "so" => Ok(Method::So),
            "fast" => Ok(Method::Fast),
            other => Err(format!(
                "unknown method {other:?} (expected ro, dro, so or fast)"
            )),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Half-width of the box injected into scenario LPs.
pub const DEFAULT_SO_BOX: f64 = 1e3;

/// Grid construction parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Number of grid points (ignored by SO, whose grid is `1..=n1`).
    pub points: usize,
    /// Added to the Mahalanobis quantile before spreading the RO grid.
    pub ro_pad: f64,
    /// Multiplier on the χ² anchor of the DRO grid.
    pub dro_inflation: f64,
    /// Degrees of freedom of the χ² anchor; defaults to the dimension.
    pub dro_chi2_df: Option<u32>,
    /// Half-width of the box added to scenario LPs.
    pub so_box: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 50,
            ro_pad: 20.0,
            dro_inflation: 1.5,
            dro_chi2_df: None,
            so_box: DEFAULT_SO_BOX,
        }
    }
}

impl GridSpec {
    /// Defaults for a method: 50 points for RO/DRO, 11 for FAST.
    pub fn for_method(method: Method) -> Self {
        let points = match method {
            Method::Fast => 11,
            _ => 50,
        };
        Self {
            points,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CandidateStatus {
    Optimal,
    Excluded(String),
}

impl CandidateStatus {
    pub fn is_optimal(&self) -> bool {
        matches!(self, CandidateStatus::Optimal)
    }

    /// `optimal` or `excluded:<reason>`.
    pub fn label(&self) -> String {
        match self {
            CandidateStatus::Optimal => "optimal".into(),
            CandidateStatus::Excluded(reason) => format!("excluded:{reason}"),
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        if label == "optimal" {
            Some(CandidateStatus::Optimal)
        } else if label == "excluded" {
            Some(CandidateStatus::Excluded(String::new()))
        } else {
            label
                .strip_prefix("excluded:")
                .map(|r| CandidateStatus::Excluded(r.to_string()))
        }
    }
}

/// One point `(s, x*(s))` on a path.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub s: f64,
    pub x: Vector,
    pub status: CandidateStatus,
    pub objective: f64,
    /// Some coordinate sits on the injected box.
    pub at_bound: bool,
}

impl Candidate {
    pub fn excluded(s: f64, dim: usize, reason: impl Into<String>) -> Self {
        Self {
            s,
            x: vec![f64::NAN; dim],
            status: CandidateStatus::Excluded(reason.into()),
            objective: f64::NAN,
            at_bound: false,
        }
    }
}

/// Ordered candidates (ascending, unique `s`) from one reformulation.
#[derive(Clone, Debug)]
pub struct SolutionPath {
    pub method: Option<Method>,
    pub candidates: Vec<Candidate>,
    pub stats: Option<PhaseOneStats>,
}

impl SolutionPath {
    pub fn new(
        method: Option<Method>,
        candidates: Vec<Candidate>,
        stats: Option<PhaseOneStats>,
    ) -> Result<Self, ReformulationError> {
        if candidates.windows(2).any(|w| !(w[0].s < w[1].s)) {
            return Err(ReformulationError::InvalidGrid(
                "path parameters must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            method,
            candidates,
            stats,
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.candidates.first().map_or(0, |c| c.x.len())
    }

    pub fn optimal_count(&self) -> usize {
        self.candidates
            .iter()
            .filter(|c| c.status.is_optimal())
            .count()
    }

    /// Candidate decisions as rows (excluded candidates carry NaN rows).
    pub fn decisions(&self) -> Matrix {
        let rows: Vec<&[f64]> = self.candidates.iter().map(|c| c.x.as_slice()).collect();
        Matrix::from_rows(&rows).expect("candidates share one dimension")
    }
}
