//! Sample moments and order statistics.

use super::{MathError, Matrix, Vector};

/// Sample mean and covariance of the rows, with divisor `n` (not `n - 1`).
pub fn mean_and_cov(rows: &Matrix) -> Result<(Vector, Matrix), MathError> {
    let n = rows.rows();
    if n == 0 {
        return Err(MathError::Empty("mean_and_cov"));
    }
    let p = rows.cols();
    let inv_n = 1.0 / n as f64;
    let mut mean = vec![0.0; p];
    for r in rows.row_iter() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m *= inv_n;
    }
    let mut cov = Matrix::zeros(p, p);
    let mut centered = vec![0.0; p];
    for r in rows.row_iter() {
        for ((c, v), m) in centered.iter_mut().zip(r).zip(&mean) {
            *c = v - m;
        }
        for a in 0..p {
            let ca = centered[a];
            if ca == 0.0 {
                continue;
            }
            for b in 0..=a {
                cov[(a, b)] += ca * centered[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..=a {
            let v = cov[(a, b)] * inv_n;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok((mean, cov))
}

/// Ceiling index `⌈level · n⌉` clamped to `1..=n`, robust to representation
/// error in products like `0.9 · 100`.
pub fn order_statistic_index(level: f64, n: usize) -> usize {
    let raw = level * n as f64;
    let k = (raw - 1e-9 * raw.abs().max(1.0)).ceil();
    (k.max(1.0) as usize).min(n)
}

/// The `k`-th smallest value (1-based), duplicates kept.
pub fn empirical_quantile(values: &[f64], k: usize) -> Result<f64, MathError> {
    if k == 0 || k > values.len() {
        return Err(MathError::OutOfRange {
            what: "order statistic index",
            value: k as f64,
        });
    }
    let mut buf = values.to_vec();
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathkit::RngStream;

    #[test]
    fn hand_examples() {
        let (m, c) = mean_and_cov(&Matrix::from_rows(&[[0.0], [2.0]]).unwrap()).unwrap();
        assert_eq!(m, vec![1.0]);
        assert_eq!(c[(0, 0)], 1.0);

        let (_, c) = mean_and_cov(&Matrix::from_rows(&[[1.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(c, Matrix::zeros(2, 2));

        let same = Matrix::from_rows(&[[1.5, -2.0], [1.5, -2.0], [1.5, -2.0]]).unwrap();
        assert_eq!(mean_and_cov(&same).unwrap().1, Matrix::zeros(2, 2));

        assert!(mean_and_cov(&Matrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn matches_two_pass_oracle() {
        let mut rng = RngStream::new(123, 0);
        for case in 0..100 {
            let n = 1 + case % 50;
            let p = 1 + case % 10;
            let data: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..p).map(|_| rng.uniform_range(-5.0, 5.0)).collect())
                .collect();
            let (m, c) = mean_and_cov(&Matrix::from_rows(&data).unwrap()).unwrap();
            for a in 0..p {
                let ma: f64 = data.iter().map(|r| r[a]).sum::<f64>() / n as f64;
                assert!((ma - m[a]).abs() < 1e-12);
                for b in 0..p {
                    let mb: f64 = data.iter().map(|r| r[b]).sum::<f64>() / n as f64;
                    let cab: f64 =
                        data.iter().map(|r| (r[a] - ma) * (r[b] - mb)).sum::<f64>() / n as f64;
                    assert!((cab - c[(a, b)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn order_statistics() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(empirical_quantile(&v, 9).unwrap(), 9.0);
        assert_eq!(empirical_quantile(&[5.0], 1).unwrap(), 5.0);
        assert_eq!(empirical_quantile(&[3.0, 1.0, 2.0], 2).unwrap(), 2.0);
        assert_eq!(empirical_quantile(&[2.0, 1.0, 2.0], 3).unwrap(), 2.0);
        assert!(empirical_quantile(&v, 0).is_err());
        assert!(empirical_quantile(&v, 11).is_err());
    }

    #[test]
    fn ceiling_index() {
        assert_eq!(order_statistic_index(0.9, 100), 90);
        assert_eq!(order_statistic_index(0.9, 10), 9);
        assert_eq!(order_statistic_index(0.95, 200_000), 190_000);
        assert_eq!(order_statistic_index(0.9, 15), 14);
        assert_eq!(order_statistic_index(0.01, 5), 1);
    }
}
