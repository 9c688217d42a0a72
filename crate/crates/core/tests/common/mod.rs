//! Brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use solpath::mathkit::{Matrix, RngStream};

/// Solves the square system `m·x = r` by Gaussian elimination with partial
/// pivoting; `None` when (numerically) singular.
pub fn solve_square(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleStatus {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// `min c'x  s.t.  Ax ≤ b, lower ≤ x ≤ upper` with every `lower` finite, so
/// the feasible set is pointed: the optimum (if any) is a vertex and
/// unboundedness shows on an extreme ray of the recession cone.
pub fn vertex_enumeration(
    c: &[f64],
    a: &Matrix,
    b: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> OracleStatus {
    let d = c.len();
    // all constraints as g'x ≤ h
    let mut g: Vec<Vec<f64>> = a.row_iter().map(|r| r.to_vec()).collect();
    let mut h: Vec<f64> = b.to_vec();
    for k in 0..d {
        let mut e = vec![0.0; d];
        e[k] = -1.0;
        g.push(e);
        h.push(-lower[k]);
        if upper[k].is_finite() {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            g.push(e);
            h.push(upper[k]);
        }
    }
    let feasible = |x: &[f64]| {
        g.iter().zip(&h).all(|(gi, hi)| {
            gi.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() <= hi + 1e-9 * (1.0 + hi.abs())
        })
    };
    let dotc = |x: &[f64]| c.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();

    let mut best: Option<f64> = None;
    for set in subsets(g.len(), d) {
        let m: Vec<Vec<f64>> = set.iter().map(|&i| g[i].clone()).collect();
        let r: Vec<f64> = set.iter().map(|&i| h[i]).collect();
        if let Some(x) = solve_square(m, r) {
            if feasible(&x) {
                let v = dotc(&x);
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
    }
    let Some(best) = best else {
        return OracleStatus::Infeasible;
    };
    // extreme rays: d-1 tight homogeneous constraints plus a normalization row
    let in_cone = |r: &[f64]| {
        g.iter()
            .all(|gi| gi.iter().zip(r).map(|(p, q)| p * q).sum::<f64>() <= 1e-9)
    };
    if d == 1 {
        for r in [[1.0], [-1.0]] {
            if in_cone(&r) && dotc(&r) < -1e-9 {
                return OracleStatus::Unbounded;
            }
        }
        return OracleStatus::Optimal(best);
    }
    for set in subsets(g.len(), d - 1) {
        for norm_row in 0..d {
            let mut m: Vec<Vec<f64>> = set.iter().map(|&i| g[i].clone()).collect();
            let mut e = vec![0.0; d];
            e[norm_row] = 1.0;
            m.push(e);
            let mut rhs = vec![0.0; d - 1];
            rhs.push(1.0);
            if let Some(r) = solve_square(m, rhs) {
                for sign in [1.0, -1.0] {
                    let rr: Vec<f64> = r.iter().map(|v| sign * v).collect();
                    let scale = rr.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let rr: Vec<f64> = rr.iter().map(|v| v / scale).collect();
                    if in_cone(&rr) && dotc(&rr) < -1e-9 {
                        return OracleStatus::Unbounded;
                    }
                }
            }
        }
    }
    OracleStatus::Optimal(best)
}

/// Random LP data with every lower bound finite and some upper bounds
/// infinite, so all three statuses occur.
pub struct RandomLp {
    pub c: Vec<f64>,
    pub a: Matrix,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub fn random_lp(rng: &mut RngStream) -> RandomLp {
    let d = 1 + (rng.next_u64() % 4) as usize;
    let m = 1 + (rng.next_u64() % 8) as usize;
    let round = |v: f64| (v * 4.0).round() / 4.0;
    let c: Vec<f64> = (0..d)
        .map(|_| round(rng.uniform_range(-2.0, 2.0)))
        .collect();
    let mut data = Vec::with_capacity(m * d);
    for _ in 0..m * d {
        data.push(round(rng.uniform_range(-2.0, 2.0)));
    }
    let a = Matrix::from_vec(m, d, data).unwrap();
    let b: Vec<f64> = (0..m)
        .map(|_| round(rng.uniform_range(-1.0, 3.0)))
        .collect();
    let lower: Vec<f64> = (0..d)
        .map(|_| round(rng.uniform_range(-3.0, 0.0)))
        .collect();
    let upper: Vec<f64> = lower
        .iter()
        .map(|&l| {
            if rng.uniform() < 0.5 {
                f64::INFINITY
            } else {
                l + round(rng.uniform_range(0.25, 4.0))
            }
        })
        .collect();
    RandomLp {
        c,
        a,
        b,
        lower,
        upper,
    }
}

/// `q·ln(q/p) + (1−q)·ln((1−q)/(1−p))` written with `ln_1p` where possible.
fn kl_alt(q: f64, p: f64) -> f64 {
    let first = if q == 0.0 { 0.0 } else { q * (q.ln() - p.ln()) };
    let second = if q == 1.0 {
        0.0
    } else {
        (1.0 - q) * ((-q).ln_1p() - (-p).ln_1p())
    };
    first + second
}

/// Smallest `q ≤ p` with `KL(q‖p) ≤ s`: a 10⁴-point scan brackets the
/// crossing, then 200 bisection steps refine it.
pub fn kl_oracle(p: f64, s: f64) -> f64 {
    if s == 0.0 || p == 0.0 || p == 1.0 {
        return p;
    }
    if kl_alt(0.0, p) <= s {
        return 0.0;
    }
    let steps = 10_000;
    let mut lo = 0.0;
    let mut hi = p;
    for i in 1..=steps {
        let q = p * i as f64 / steps as f64;
        if kl_alt(q, p) <= s {
            hi = q;
            lo = p * (i - 1) as f64 / steps as f64;
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kl_alt(mid, p) <= s {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
