//! Standard normal and chi-square distribution functions.
//!
//! Quantiles are obtained by bisection on the CDF rather than by rational
//! approximations, so their accuracy is exactly that of the CDF.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_lr;

use super::MathError;

/// Standard normal CDF Φ(x).
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse of [`std_normal_cdf`] on `(0, 1)`.
pub fn std_normal_quantile(u: f64) -> Result<f64, MathError> {
    if !(u > 0.0 && u < 1.0) {
        return Err(MathError::OutOfRange {
            what: "normal quantile level",
            value: u,
        });
    }
    if u == 0.5 {
        // Φ rounds to exactly 0.5 on a small neighbourhood of 0
        return Ok(0.0);
    }
    // Φ(-40) underflows to 0 and Φ(40) rounds to 1, so the root is bracketed
    // for every representable u in (0, 1).
    Ok(bisect_increasing(std_normal_cdf, u, -40.0, 40.0))
}

/// Regularized lower incomplete gamma P(a, x).
pub fn regularized_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma_lr(a, x)
    }
}

pub fn chi_square_cdf(df: u32, q: f64) -> f64 {
    regularized_lower_gamma(f64::from(df) / 2.0, q / 2.0)
}

/// Quantile of the χ² distribution with `df` degrees of freedom.
pub fn chi_square_quantile(df: u32, u: f64) -> Result<f64, MathError> {
    if df == 0 {
        return Err(MathError::OutOfRange {
            what: "chi-square degrees of freedom",
            value: 0.0,
        });
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(MathError::OutOfRange {
            what: "chi-square quantile level",
            value: u,
        });
    }
    let k = f64::from(df);
    let mut hi = k + 10.0 * (2.0 * k).sqrt() + 50.0;
    while chi_square_cdf(df, hi) < u {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(MathError::OutOfRange {
                what: "chi-square quantile level",
                value: u,
            });
        }
    }
    Ok(bisect_increasing(|q| chi_square_cdf(df, q), u, 0.0, hi))
}

/// Smallest grid point `x` in `[lo, hi]` (to full f64 resolution) with
/// `f(x) >= target`, for a nondecreasing `f`.
fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
