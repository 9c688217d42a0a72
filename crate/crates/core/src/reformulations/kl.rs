//! Worst-case Bernoulli mean over a KL ball, used as a diagnostic for the
//! divergence-based reformulation with an indicator constraint.

/// `KL(Bern(q) ‖ Bern(p))` with `0·ln 0 = 0`; infinite when `q` puts mass
/// where `p` has none.
pub fn binary_kl(q: f64, p: f64) -> f64 {
    term(q, p) + term(1.0 - q, 1.0 - p)
}

fn term(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a * (a / b).ln()
    }
}

/// Smallest `q ≤ p_hat` with `KL(q ‖ p_hat) ≤ s`.
///
/// Inputs outside `[0, 1] × [0, ∞)` are clamped into range.
pub fn kl_worst_case_mean(p_hat: f64, s: f64) -> f64 {
    let p = p_hat.clamp(0.0, 1.0);
    let s = s.max(0.0);
    if s == 0.0 || p == 0.0 || p == 1.0 {
        return p;
    }
    if binary_kl(0.0, p) <= s {
        return 0.0;
    }
    // KL(·‖p) decreases on [0, p]: keep lo infeasible, hi feasible
    let (mut lo, mut hi) = (0.0f64, p);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if binary_kl(mid, p) <= s {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}
