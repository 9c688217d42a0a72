use crate::instances::SampleSet;
use crate::mathkit::{
    chi_square_quantile, cholesky_psd, empirical_quantile, mean_and_cov, order_statistic_index,
    Matrix, PsdFactor, RepairPolicy, Vector,
};

use super::{GridSpec, Method, ReformulationError};

/// Sample moments of the phase-one data and the Mahalanobis anchor.
#[derive(Clone, Debug)]
pub struct PhaseOneStats {
    pub n1: usize,
    pub mu: Vector,
    pub sigma: Matrix,
    pub factor: PsdFactor,
    /// `⌈(1−α)n₁⌉`-th smallest Mahalanobis distance; `None` when Σ̂ is singular.
    pub s_hat: Option<f64>,
}

pub fn phase_one_stats(
    phase1: &SampleSet,
    alpha: f64,
) -> Result<PhaseOneStats, ReformulationError> {
    let (mu, sigma) = mean_and_cov(phase1.data())?;
    let factor = cholesky_psd(&sigma, RepairPolicy::Bounded)?;
    let distances: Option<Vec<f64>> = phase1
        .rows()
        .map(|xi| {
            let z: Vec<f64> = xi.iter().zip(&mu).map(|(a, m)| a - m).collect();
            factor.mahalanobis(&z)
        })
        .collect();
    let s_hat = match distances {
        Some(d) => {
            let k = order_statistic_index(1.0 - alpha, d.len());
            Some(empirical_quantile(&d, k)?)
        }
        None => None,
    };
    Ok(PhaseOneStats {
        n1: phase1.len(),
        mu,
        sigma,
        factor,
        s_hat,
    })
}

/// Parameter values for `method`. FAST ignores `stats`.
pub fn build_grid(
    method: Method,
    stats: Option<&PhaseOneStats>,
    spec: &GridSpec,
) -> Result<Vec<f64>, ReformulationError> {
    let need_stats = || {
        stats.ok_or_else(|| {
            ReformulationError::InvalidGrid(format!("{method} grid needs phase-one data"))
        })
    };
    match method {
        Method::Ro => {
            let st = need_stats()?;
            let s_hat = st.s_hat.ok_or(ReformulationError::SingularCovariance)?;
            spread(s_hat + spec.ro_pad, spec.points)
        }
        Method::Dro => {
            let st = need_stats()?;
            let df = match spec.dro_chi2_df {
                Some(df) => df,
                None => u32::try_from(st.mu.len())
                    .map_err(|_| ReformulationError::InvalidGrid("dimension too large".into()))?,
            };
            let anchor = chi_square_quantile(df, 0.95)?;
            spread(spec.dro_inflation * anchor, spec.points)
        }
        Method::So => {
            let st = need_stats()?;
            if st.n1 == 0 {
                return Err(ReformulationError::InvalidGrid(
                    "no phase-one samples".into(),
                ));
            }
            Ok((1..=st.n1).map(|s| s as f64).collect())
        }
        Method::Fast => {
            if spec.points < 2 {
                return Err(ReformulationError::InvalidGrid(
                    "FAST grid needs at least the two segment endpoints".into(),
                ));
            }
            let last = (spec.points - 1) as f64;
            Ok((0..spec.points).map(|j| j as f64 / last).collect())
        }
    }
}

/// `top·j/p` for `j = 1..=p`.
pub(super) fn spread(top: f64, points: usize) -> Result<Vec<f64>, ReformulationError> {
    if points == 0 {
        return Err(ReformulationError::InvalidGrid(
            "grid size must be at least 1".into(),
        ));
    }
    if !(top > 0.0) || !top.is_finite() {
        return Err(ReformulationError::InvalidGrid(format!(
            "grid upper end must be positive, got {top}"
        )));
    }
    let p = points as f64;
    Ok((1..=points).map(|j| top * j as f64 / p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::Provenance;

    #[test]
    fn ro_toy_anchor() {
        // distances {1..10} at α = 0.1: the 9th order statistic
        let d: Vec<f64> = (1..=10).map(f64::from).collect();
        let k = order_statistic_index(0.9, d.len());
        let s_hat = empirical_quantile(&d, k).unwrap();
        assert_eq!(s_hat, 9.0);
        let grid = spread(s_hat + 20.0, 50).unwrap();
        for (j, s) in grid.iter().enumerate() {
            assert!((s - 29.0 * (j + 1) as f64 / 50.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fast_and_so_grids() {
        let grid = build_grid(Method::Fast, None, &GridSpec::for_method(Method::Fast)).unwrap();
        assert_eq!(grid.len(), 11);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[10], 1.0);
        assert!((grid[3] - 0.3).abs() < 1e-15);

        let rows: Vec<[f64; 1]> = (0..150).map(|i| [i as f64]).collect();
        let set = SampleSet::new(Matrix::from_rows(&rows).unwrap(), Provenance::Derived).unwrap();
        let st = phase_one_stats(&set, 0.1).unwrap();
        let grid = build_grid(Method::So, Some(&st), &GridSpec::default()).unwrap();
        assert_eq!(grid, (1..=150).map(|s| s as f64).collect::<Vec<_>>());
    }

    #[test]
    fn ro_anchor_from_samples() {
        // 1-D: distances are (x - mean)² / var
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        let set = SampleSet::new(Matrix::from_rows(&rows).unwrap(), Provenance::Derived).unwrap();
        let st = phase_one_stats(&set, 0.2).unwrap();
        // var = 2, distances {2, .5, 0, .5, 2}; ⌈0.8·5⌉ = 4th → 2
        assert!((st.s_hat.unwrap() - 2.0).abs() < 1e-12);
        let grid = build_grid(Method::Ro, Some(&st), &GridSpec::default()).unwrap();
        assert!((grid[49] - 22.0).abs() < 1e-12);
    }

    #[test]
    fn dro_grid_uses_dimension_df() {
        let rows = [[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [-1.0, 0.5]];
        let set = SampleSet::new(Matrix::from_rows(&rows).unwrap(), Provenance::Derived).unwrap();
        let st = phase_one_stats(&set, 0.1).unwrap();
        let grid = build_grid(Method::Dro, Some(&st), &GridSpec::default()).unwrap();
        let top = 1.5 * (-2.0 * 0.05f64.ln());
        assert!((grid[49] - top).abs() < 1e-9);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn singular_covariance_blocks_ro() {
        let rows = [[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let set = SampleSet::new(Matrix::from_rows(&rows).unwrap(), Provenance::Derived).unwrap();
        let st = phase_one_stats(&set, 0.1).unwrap();
        assert!(st.s_hat.is_none());
        assert!(matches!(
            build_grid(Method::Ro, Some(&st), &GridSpec::default()),
            Err(ReformulationError::SingularCovariance)
        ));
    }
}
