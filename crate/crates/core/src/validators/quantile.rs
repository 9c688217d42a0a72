use crate::mathkit::{
    cholesky_psd, dot, empirical_quantile, order_statistic_index, std_normal_quantile, Matrix,
    RepairPolicy, RngStream,
};

use super::ValidationError;

/// `(1−β)`-quantile of `max_j Z_j` (or `max_{σ_j>0} Z_j/σ_j` when
/// `normalized`) for `Z ~ N(0, cov)`, estimated from `budget` draws and
/// clamped below by the single-coordinate quantile.
pub fn gaussian_sup_quantile(
    cov: &Matrix,
    sigmas: &[f64],
    beta: f64,
    budget: usize,
    rng: &mut RngStream,
    normalized: bool,
) -> Result<f64, ValidationError> {
    let p = sigmas.len();
    if !cov.is_square() || cov.rows() != p || p == 0 {
        return Err(ValidationError::InvalidRule(format!(
            "covariance is {}x{} but {p} standard deviations were given",
            cov.rows(),
            cov.cols()
        )));
    }
    if !(beta > 0.0 && beta < 0.5) {
        return Err(ValidationError::InvalidRule(format!(
            "beta must lie in (0, 0.5), got {beta}"
        )));
    }
    if budget == 0 {
        return Err(ValidationError::InvalidRule(
            "Monte Carlo budget must be positive".into(),
        ));
    }
    let z = std_normal_quantile(1.0 - beta)?;
    let floor = if normalized {
        if !sigmas.iter().any(|&s| s > 0.0) {
            return Err(ValidationError::AllDegenerate);
        }
        z
    } else {
        sigmas.iter().fold(0.0f64, |acc, &s| acc.max(z * s))
    };
    if p == 1 {
        return Ok(floor);
    }

    // Coordinates that are almost surely equal collapse to one; zero-variance
    // coordinates are identically 0 and only matter for the plain maximum.
    let mut kept: Vec<usize> = Vec::new();
    let mut has_zero = false;
    for j in 0..p {
        if !(sigmas[j] > 0.0) {
            has_zero = true;
            continue;
        }
        let v = cov[(j, j)];
        let dup = kept.iter().any(|&k| {
            sigmas[k] == sigmas[j] && cov[(k, k)] == v && cov[(k, j)] == v && cov[(j, k)] == v
        });
        if !dup {
            kept.push(j);
        }
    }
    let include_zero = has_zero && !normalized;
    if kept.len() <= 1 {
        // one coordinate (plus possibly a constant 0): the quantile is the floor
        return Ok(floor);
    }

    let m = kept.len();
    let mut sub = Matrix::zeros(m, m);
    for (a, &ja) in kept.iter().enumerate() {
        for (b, &jb) in kept.iter().enumerate() {
            sub[(a, b)] = 0.5 * (cov[(ja, jb)] + cov[(jb, ja)]);
        }
    }
    let factor = cholesky_psd(&sub, RepairPolicy::ClipAlways)?;
    let mut l = factor.factor().clone();
    if normalized {
        for (a, &j) in kept.iter().enumerate() {
            let inv = 1.0 / sigmas[j];
            for v in l.row_mut(a) {
                *v *= inv;
            }
        }
    }
    let r = l.cols();
    let mut w = vec![0.0; r];
    let mut stats = Vec::with_capacity(budget);
    for _ in 0..budget {
        rng.fill_standard_normal(&mut w);
        let mut best = if include_zero { 0.0 } else { f64::NEG_INFINITY };
        for row in l.row_iter() {
            best = best.max(dot(row, &w));
        }
        stats.push(best);
    }
    let k = order_statistic_index(1.0 - beta, budget);
    let q = empirical_quantile(&stats, k)?;
    Ok(q.max(floor))
}
