//! Deterministic internal optimizers: dense two-phase simplex, the
//! single-cone SOC minimizer and the FAST line solver.

mod fast;
mod lp;
mod soc;

use thiserror::Error;

pub use fast::{line_search_fast, ANCHOR_TOL};
pub use lp::{solve_lp, LpProblem, LpSolution, LpStatus, LP_FEASIBILITY_TOL};
pub use soc::{solve_single_soc, SocGeometry, SocProblem, SocSolution, SocStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("singular covariance: {0}")]
    SingularCovariance(String),
    #[error("anchor violates constraint {row}: {value} > {bound}")]
    InfeasibleAnchor { row: usize, value: f64, bound: f64 },
}
