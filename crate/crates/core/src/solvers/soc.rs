//! Minimizer for a linear objective under one second-order-cone constraint,
//! `min c'x  s.t.  μ'x + κ‖Lᵀx‖₂ ≤ b` with `b > 0`, via its scalar dual.
//!
//! Stationarity gives `x ∝ −Σ⁻¹(c + λμ)` with `λ > 0` solving
//! `ψ(λ) = ‖c + λμ‖_{Σ⁻¹} − λκ = 0`. `ψ` is convex with `ψ(0) > 0`, so it has
//! at most two positive roots; the KKT point is the root for which the implied
//! scale `r = ‖Lᵀx‖` is positive. Everything is computed in whitened
//! coordinates `v = Λ^{1/2} Vᵀ x` from the eigendecomposition `Σ = V Λ Vᵀ`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::mathkit::{dot, norm2, Matrix, PsdFactor, Vector};

use super::SolverError;

#[derive(Clone, Debug)]
pub struct SocProblem {
    pub c: Vector,
    pub mu: Vector,
    pub kappa: f64,
    pub factor: PsdFactor,
    pub b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SocStatus {
    Optimal,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct SocSolution {
    pub status: SocStatus,
    pub x: Vector,
    pub objective: f64,
    /// Dual multiplier λ of the cone constraint (`NaN` when unbounded).
    pub multiplier: f64,
    /// Direction `u` with `c'u < 0` and `μ'u + κ‖Lᵀu‖ ≤ 0` when unbounded.
    pub certificate: Option<Vector>,
}

/// Eigen-whitened view of `(c, μ, Σ)`, reusable across `κ` and `b`.
#[derive(Clone, Debug)]
pub struct SocGeometry {
    c: Vector,
    mu: Vector,
    factor: PsdFactor,
    /// columns `V_k / √λ_k` for the kept eigenpairs; maps whitened `v` to `x`
    unwhiten: Matrix,
    c_w: Vector,
    mu_w: Vector,
    /// `‖c‖²_{Σ⁻¹}`, `c'Σ⁻¹μ`, `‖μ‖²_{Σ⁻¹}`
    quad: (f64, f64, f64),
    /// null-space components of `c` and `μ` (zero when Σ is nonsingular)
    c_null: Vector,
    mu_null: Vector,
}

const RANK_FLOOR: f64 = 1e-12;
const NULL_TOL: f64 = 1e-9;

impl SocGeometry {
    pub fn new(c: &[f64], mu: &[f64], factor: &PsdFactor) -> Result<Self, SolverError> {
        let d = c.len();
        if mu.len() != d || factor.dim() != d {
            return Err(SolverError::InvalidInput(format!(
                "SOC dimensions: c has {d} entries, mu {}, factor {}",
                mu.len(),
                factor.dim()
            )));
        }
        if c.iter().all(|&v| v == 0.0) {
            return Err(SolverError::InvalidInput(
                "objective vector must be nonzero".into(),
            ));
        }
        let sigma = factor.reconstruct();
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, sigma.as_slice()));
        let max_eig = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v));
        let mut kept: Vec<usize> = (0..d)
            .filter(|&k| eig.eigenvalues[k] > RANK_FLOOR * max_eig)
            .collect();
        kept.sort_unstable();

        let mut unwhiten = Matrix::zeros(d, kept.len());
        let mut c_w = vec![0.0; kept.len()];
        let mut mu_w = vec![0.0; kept.len()];
        let mut c_null = c.to_vec();
        let mut mu_null = mu.to_vec();
        for (col, &k) in kept.iter().enumerate() {
            let vk: Vec<f64> = (0..d).map(|i| eig.eigenvectors[(i, k)]).collect();
            let s = eig.eigenvalues[k].sqrt();
            let (pc, pm) = (dot(&vk, c), dot(&vk, mu));
            c_w[col] = pc / s;
            mu_w[col] = pm / s;
            for i in 0..d {
                unwhiten[(i, col)] = vk[i] / s;
                c_null[i] -= pc * vk[i];
                mu_null[i] -= pm * vk[i];
            }
        }
        let quad = (dot(&c_w, &c_w), dot(&c_w, &mu_w), dot(&mu_w, &mu_w));
        Ok(Self {
            c: c.to_vec(),
            mu: mu.to_vec(),
            factor: factor.clone(),
            unwhiten,
            c_w,
            mu_w,
            quad,
            c_null,
            mu_null,
        })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// Constraint value `μ'x + κ‖Lᵀx‖`.
    pub fn constraint(&self, x: &[f64], kappa: f64) -> f64 {
        dot(&self.mu, x) + kappa * self.factor.quad_norm(x).expect("dimension checked")
    }

    pub fn solve(&self, kappa: f64, b: f64) -> Result<SocSolution, SolverError> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(SolverError::InvalidInput(format!(
                "kappa must be >= 0, got {kappa}"
            )));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(SolverError::InvalidInput(format!(
                "b must be positive, got {b}"
            )));
        }
        let c_scale = norm2(&self.c);
        let mu_scale = norm2(&self.mu).max(c_scale);
        let c_null_norm = norm2(&self.c_null);
        let mu_null_norm = norm2(&self.mu_null);

        if c_null_norm > NULL_TOL * c_scale {
            // moving along −P_null c leaves ‖Lᵀx‖ unchanged
            let u: Vector = self.c_null.iter().map(|v| -v).collect();
            if dot(&self.mu, &u) <= 0.0 {
                return Ok(self.unbounded(u));
            }
            return Err(SolverError::SingularCovariance(format!(
                "covariance is rank-deficient along the objective (null-space component {c_null_norm:e})"
            )));
        }
        if mu_null_norm > NULL_TOL * mu_scale {
            // loosen the constraint for free along −P_null μ, then push along −Σ⁺c
            let base = self.unwhiten.matvec(&self.c_w).expect("dimension");
            let base: Vector = base.iter().map(|v| -v).collect();
            let excess = self.constraint(&base, kappa).max(0.0) + 1.0;
            let t = excess / (mu_null_norm * mu_null_norm);
            let u: Vector = base
                .iter()
                .zip(&self.mu_null)
                .map(|(a, m)| a - t * m)
                .collect();
            return Ok(self.unbounded(u));
        }

        let (qa, qb, qc) = self.quad;
        if kappa == 0.0 {
            return self.solve_halfspace(b);
        }
        let psi = |lam: f64| (qa + 2.0 * qb * lam + qc * lam * lam).max(0.0).sqrt() - kappa * lam;

        let roots = find_roots(psi, qa.sqrt() / kappa, qc.sqrt() - kappa);
        let mut best: Option<SocSolution> = None;
        for lam in roots {
            let denom = kappa - (qb + qc * lam) / (lam * kappa);
            if !(denom > 0.0) {
                continue;
            }
            let r = b / denom;
            let step = -r / (lam * kappa);
            let v: Vector = self
                .c_w
                .iter()
                .zip(&self.mu_w)
                .map(|(c, m)| step * (c + lam * m))
                .collect();
            let mut x = self.unwhiten.matvec(&v).expect("dimension");
            // the constraint is positively homogeneous; land exactly on it
            let g = self.constraint(&x, kappa);
            if g > 0.0 {
                let t = b / g;
                for xi in &mut x {
                    *xi *= t;
                }
            }
            let objective = dot(&self.c, &x);
            if best.as_ref().is_none_or(|s| objective < s.objective) {
                best = Some(SocSolution {
                    status: SocStatus::Optimal,
                    x,
                    objective,
                    multiplier: lam,
                    certificate: None,
                });
            }
        }
        if let Some(sol) = best {
            return Ok(sol);
        }
        match self.cone_certificate(kappa) {
            Some(u) => Ok(self.unbounded(u)),
            None => Err(SolverError::NumericalBreakdown(
                "no admissible dual root and no recession certificate".into(),
            )),
        }
    }

    /// `κ = 0`: a single half-space `μ'x ≤ b`, bounded only when `c = −tμ`, `t > 0`.
    fn solve_halfspace(&self, b: f64) -> Result<SocSolution, SolverError> {
        let (qa, qb, qc) = self.quad;
        if qc > 0.0 && qb < 0.0 {
            let t = -qb / qc;
            let resid: f64 = self
                .c_w
                .iter()
                .zip(&self.mu_w)
                .map(|(c, m)| (c + t * m).powi(2))
                .sum::<f64>()
                .sqrt();
            if resid <= 1e-12 * qa.sqrt() {
                let v: Vector = self.mu_w.iter().map(|m| m * b / qc).collect();
                let x = self.unwhiten.matvec(&v).expect("dimension");
                let objective = dot(&self.c, &x);
                return Ok(SocSolution {
                    status: SocStatus::Optimal,
                    x,
                    objective,
                    multiplier: t,
                    certificate: None,
                });
            }
        }
        match self.cone_certificate(0.0) {
            Some(u) => Ok(self.unbounded(u)),
            None => Err(SolverError::NumericalBreakdown(
                "half-space case without certificate".into(),
            )),
        }
    }

    /// Direction inside `{v : μ̃'v + κ‖v‖ ≤ 0}` (whitened) with `c̃'v < 0`, mapped back to x.
    fn cone_certificate(&self, kappa: f64) -> Option<Vector> {
        let g: Vector = self.c_w.iter().map(|v| -v).collect();
        let g_norm = norm2(&g);
        let mu_norm = norm2(&self.mu_w);
        let v = if mu_norm == 0.0 {
            if kappa > 0.0 {
                return None;
            }
            g.clone()
        } else {
            if mu_norm < kappa {
                return None;
            }
            let axis: Vector = self.mu_w.iter().map(|m| -m / mu_norm).collect();
            // pull slightly inside the cone so rounding cannot push it out
            let cos = (kappa / mu_norm + 1e-9).min(1.0);
            let sin = (1.0 - cos * cos).max(0.0).sqrt();
            let g_axis = dot(&g, &axis);
            if g_axis >= (cos + 1e-9) * g_norm {
                g.clone()
            } else {
                let perp: Vector = g
                    .iter()
                    .zip(&axis)
                    .map(|(gi, ai)| gi - g_axis * ai)
                    .collect();
                let perp_norm = norm2(&perp);
                if perp_norm == 0.0 {
                    return None;
                }
                axis.iter()
                    .zip(&perp)
                    .map(|(a, p)| cos * a + sin * p / perp_norm)
                    .collect()
            }
        };
        if dot(&g, &v) <= 0.0 {
            return None;
        }
        let u = self.unwhiten.matvec(&v).expect("dimension");
        if dot(&self.c, &u) < 0.0 && self.constraint(&u, kappa) <= 0.0 {
            Some(u)
        } else {
            None
        }
    }

    fn unbounded(&self, certificate: Vector) -> SocSolution {
        SocSolution {
            status: SocStatus::Unbounded,
            x: vec![0.0; self.dim()],
            objective: f64::NEG_INFINITY,
            multiplier: f64::NAN,
            certificate: Some(certificate),
        }
    }
}

/// Positive roots of a convex `psi` with `psi(0) > 0`.
///
/// `scale` is a natural magnitude for λ and `tail_slope` the asymptotic slope
/// of `psi`. A point with `psi ≤ 0` is searched for by doubling (or, when the
/// doubling passes the minimum first, by golden-section search for the
/// minimizer); each side of it is then bisected.
fn find_roots(psi: impl Fn(f64) -> f64, scale: f64, tail_slope: f64) -> Vec<f64> {
    let scale = if scale.is_finite() && scale > 0.0 {
        scale
    } else {
        1.0
    };
    let mut lam = scale * 2f64.powi(-40);
    let mut negative: Option<f64> = None;
    let mut prev = psi(0.0);
    let mut bracket_hi = None;
    for _ in 0..200 {
        let v = psi(lam);
        if v <= 0.0 {
            negative = Some(lam);
            break;
        }
        if v >= prev && tail_slope >= 0.0 {
            // convexity: the minimizer lies in [0, lam]
            bracket_hi = Some(lam);
            break;
        }
        prev = v;
        lam *= 2.0;
    }
    if negative.is_none() {
        let hi = bracket_hi.unwrap_or(lam);
        let m = golden_section_min(&psi, 0.0, hi);
        if psi(m) <= 0.0 {
            negative = Some(m);
        }
    }
    let Some(neg) = negative else {
        return Vec::new();
    };
    let mut roots = vec![bisect_root(&psi, 0.0, neg)];
    if tail_slope > 0.0 {
        let mut hi = neg.max(scale) * 2.0;
        for _ in 0..400 {
            if psi(hi) > 0.0 {
                roots.push(bisect_root(&psi, neg, hi));
                break;
            }
            hi *= 2.0;
        }
    }
    roots
}

fn golden_section_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..300 {
        if b - a <= 1e-15 * b.abs().max(1e-300) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Sign change of `f` on `[a, b]`, bisected to full precision.
fn bisect_root(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa_positive = f(a) > 0.0;
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // return the endpoint with the smaller residual
            return if f(a).abs() <= f(b).abs() { a } else { b };
        }
        if (f(mid) > 0.0) == fa_positive {
            a = mid;
        } else {
            b = mid;
        }
    }
}

pub fn solve_single_soc(prob: &SocProblem) -> Result<SocSolution, SolverError> {
    SocGeometry::new(&prob.c, &prob.mu, &prob.factor)?.solve(prob.kappa, prob.b)
}
