//! Factorization of symmetric positive semidefinite matrices and Gaussian
//! sampling through the factor.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{dot, MathError, Matrix, RngStream};

/// How [`cholesky_psd`] treats negative eigenvalues once plain Cholesky fails.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RepairPolicy {
    /// Clip negative eigenvalues to zero, but fail when the clipped mass
    /// exceeds `1e-6 · trace(M)`.
    #[default]
    Bounded,
    /// Always clip and report the clipped mass.
    ClipAlways,
}

/// Relative bound on clipped eigenvalue mass under [`RepairPolicy::Bounded`].
pub const MAX_CLIPPED_FRACTION: f64 = 1e-6;

/// `L` with `L·Lᵀ ≈ M`. `L` is `p × rank`; it is lower triangular when plain
/// Cholesky succeeded and `V·√Λ` (rank columns) after eigenvalue repair.
#[derive(Clone, Debug)]
pub struct PsdFactor {
    factor: Matrix,
    repaired: bool,
    clipped_mass: f64,
}

impl PsdFactor {
    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.factor.rows()
    }

    pub fn rank(&self) -> usize {
        self.factor.cols()
    }

    /// Whether the eigenvalue route was taken.
    pub fn repaired(&self) -> bool {
        self.repaired
    }

    /// Sum of |λ| over clipped negative eigenvalues.
    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    pub fn reconstruct(&self) -> Matrix {
        self.factor.gram()
    }

    /// `Lᵀ·x`, so that `‖Lᵀx‖₂² = xᵀ M x`.
    pub fn tr_apply(&self, x: &[f64]) -> Result<Vec<f64>, MathError> {
        self.factor.tr_matvec(x)
    }

    /// `sqrt(xᵀ M x)` computed as `‖Lᵀx‖₂`.
    pub fn quad_norm(&self, x: &[f64]) -> Result<f64, MathError> {
        let y = self.tr_apply(x)?;
        Ok(dot(&y, &y).sqrt())
    }

    /// `zᵀ M⁻¹ z`, or `None` when the factor is rank-deficient.
    pub fn mahalanobis(&self, z: &[f64]) -> Option<f64> {
        let n = self.dim();
        if self.rank() < n || z.len() != n {
            return None;
        }
        if !self.repaired {
            // forward substitution with the lower-triangular factor
            let mut y = vec![0.0; n];
            for i in 0..n {
                let row = self.factor.row(i);
                y[i] = (z[i] - dot(&row[..i], &y[..i])) / row[i];
            }
            return Some(dot(&y, &y));
        }
        // columns are orthogonal: col_k = v_k·√λ_k
        let mut total = 0.0;
        for k in 0..n {
            let col = self.factor.column(k);
            let lambda = dot(&col, &col);
            let proj = dot(&col, z);
            total += proj * proj / (lambda * lambda);
        }
        Some(total)
    }

    /// `mean + L·z`, writing into `out`.
    pub fn push_forward(&self, mean: &[f64], z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = mean[i] + dot(self.factor.row(i), z);
        }
    }
}

/// Factor a symmetric PSD matrix; see [`RepairPolicy`] for the fallback.
pub fn cholesky_psd(m: &Matrix, policy: RepairPolicy) -> Result<PsdFactor, MathError> {
    if !m.is_square() {
        return Err(MathError::DimensionMismatch {
            context: "cholesky_psd",
            expected: m.rows(),
            found: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(MathError::NonFinite("cholesky_psd input"));
    }
    if !m.is_symmetric(1e-10) {
        return Err(MathError::NotSymmetric);
    }
    if let Some(l) = plain_cholesky(m) {
        return Ok(PsdFactor {
            factor: l,
            repaired: false,
            clipped_mass: 0.0,
        });
    }
    eigen_factor(m, policy)
}

fn plain_cholesky(m: &Matrix) -> Option<Matrix> {
    let n = m.rows();
    let max_diag = (0..n).fold(0.0f64, |acc, i| acc.max(m[(i, i)]));
    let pivot_floor = 1e-12 * max_diag;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let d = m[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
        if !(d > pivot_floor) {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let s = m[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

fn eigen_factor(m: &Matrix, policy: RepairPolicy) -> Result<PsdFactor, MathError> {
    let n = m.rows();
    // symmetrize exactly so the eigensolver sees a symmetric input
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let eig = SymmetricEigen::new(sym);
    let max_eig = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v));
    let keep_floor = 1e-14 * max_eig;

    let clipped_mass: f64 = eig
        .eigenvalues
        .iter()
        .filter(|&&v| v < 0.0)
        .map(|v| -v)
        .sum();
    if policy == RepairPolicy::Bounded && clipped_mass > MAX_CLIPPED_FRACTION * m.trace().abs() {
        return Err(MathError::RepairExceeded {
            clipped_mass,
            trace: m.trace(),
        });
    }

    let mut kept: Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k] > keep_floor)
        .collect();
    // deterministic column order: descending eigenvalue, ties by index
    kept.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut l = Matrix::zeros(n, kept.len());
    for (col, &k) in kept.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        for i in 0..n {
            l[(i, col)] = eig.eigenvectors[(i, k)] * s;
        }
    }
    Ok(PsdFactor {
        factor: l,
        repaired: true,
        clipped_mass,
    })
}

/// `count` draws of `N(mean, L·Lᵀ)`, one per row.
pub fn sample_mvn(
    mean: &[f64],
    factor: &PsdFactor,
    count: usize,
    rng: &mut RngStream,
) -> Result<Matrix, MathError> {
    if factor.dim() != mean.len() {
        return Err(MathError::DimensionMismatch {
            context: "sample_mvn",
            expected: factor.dim(),
            found: mean.len(),
        });
    }
    let p = mean.len();
    let mut out = Matrix::zeros(count, p);
    let mut z = vec![0.0; factor.rank()];
    for i in 0..count {
        rng.fill_standard_normal(&mut z);
        factor.push_forward(mean, &z, out.row_mut(i));
    }
    Ok(out)
}
