use crate::instances::SampleSet;
use crate::mathkit::{dot, Matrix};
use crate::reformulations::SolutionPath;

use super::ValidationError;

/// Indicator values `1(ξᵢ'x_j ≤ b)`, one row per candidate. Rows of excluded
/// candidates are zero and masked out.
#[derive(Clone, Debug)]
pub struct HMatrix {
    values: Matrix,
    active: Vec<bool>,
}

impl HMatrix {
    pub fn new(values: Matrix, active: Vec<bool>) -> Result<Self, ValidationError> {
        if active.len() != values.rows() {
            return Err(ValidationError::DimensionMismatch {
                path: active.len(),
                samples: values.rows(),
            });
        }
        if values.cols() == 0 {
            return Err(ValidationError::EmptySample);
        }
        if !active.iter().any(|&a| a) {
            return Err(ValidationError::EmptyPath);
        }
        Ok(Self { values, active })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// Number of candidates, masked ones included.
    pub fn candidates(&self) -> usize {
        self.values.rows()
    }

    /// Phase-two sample size.
    pub fn samples(&self) -> usize {
        self.values.cols()
    }

    pub fn is_active(&self, j: usize) -> bool {
        self.active[j]
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&j| self.active[j]).collect()
    }

    /// Active rows transposed to `samples × active`, ready for sample moments.
    pub fn observations(&self) -> Matrix {
        let idx = self.active_indices();
        let n2 = self.samples();
        let mut out = Matrix::zeros(n2, idx.len());
        for (k, &j) in idx.iter().enumerate() {
            for (i, &v) in self.values.row(j).iter().enumerate() {
                out[(i, k)] = v;
            }
        }
        debug_assert_eq!(out.rows(), n2);
        out
    }
}

pub fn evaluate_h_matrix(
    path: &SolutionPath,
    phase2: &SampleSet,
    b: f64,
) -> Result<HMatrix, ValidationError> {
    if path.optimal_count() == 0 {
        return Err(ValidationError::EmptyPath);
    }
    if phase2.is_empty() {
        return Err(ValidationError::EmptySample);
    }
    if path.dim() != phase2.dim() {
        return Err(ValidationError::DimensionMismatch {
            path: path.dim(),
            samples: phase2.dim(),
        });
    }
    let n2 = phase2.len();
    let mut values = Matrix::zeros(path.len(), n2);
    let mut active = Vec::with_capacity(path.len());
    for (j, cand) in path.candidates.iter().enumerate() {
        let ok = cand.status.is_optimal();
        active.push(ok);
        if !ok {
            continue;
        }
        for (i, xi) in phase2.rows().enumerate() {
            values[(j, i)] = if dot(xi, &cand.x) <= b { 1.0 } else { 0.0 };
        }
    }
    HMatrix::new(values, active)
}
