//! One-dimensional line solver for the second stage of FAST:
//! `min c'((1−s)x_o + s·x̂)` over `0 ≤ s ≤ 1` subject to sampled constraints
//! `ξᵢ'x ≤ b`.

use crate::mathkit::{dot, Matrix, Vector};

use super::SolverError;

/// Slack allowed when checking that the anchor satisfies every constraint.
pub const ANCHOR_TOL: f64 = 1e-10;

pub fn line_search_fast(
    c: &[f64],
    x_o: &[f64],
    x_hat: &[f64],
    constraints: &Matrix,
    b: f64,
) -> Result<(f64, Vector), SolverError> {
    let d = c.len();
    if x_o.len() != d || x_hat.len() != d || constraints.cols() != d {
        return Err(SolverError::InvalidInput(
            "line search dimensions disagree".into(),
        ));
    }
    let dir: Vector = x_hat.iter().zip(x_o).map(|(h, o)| h - o).collect();
    let mut step: f64 = 1.0;
    for (i, xi) in constraints.row_iter().enumerate() {
        let base = dot(xi, x_o);
        if base > b + ANCHOR_TOL * (1.0 + b.abs()) {
            return Err(SolverError::InfeasibleAnchor {
                row: i,
                value: base,
                bound: b,
            });
        }
        let rate = dot(xi, &dir);
        if rate > 0.0 {
            step = step.min(((b - base) / rate).max(0.0));
        }
    }
    if dot(c, &dir) >= 0.0 {
        step = 0.0;
    }
    let x = x_o.iter().zip(&dir).map(|(o, di)| o + step * di).collect();
    Ok((step, x))
}
