//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `min c'x  s.t.  A x ≤ b,  lo ≤ x ≤ hi` where bounds may be infinite.
//! Variables are shifted/split into nonnegative columns, every row gets a
//! slack, and rows with a negative right-hand side get an artificial for
//! phase one.

use crate::mathkit::{dot, norm_inf, Matrix, Vector};

use super::SolverError;

#[derive(Clone, Debug)]
pub struct LpProblem {
    pub c: Vector,
    pub a: Matrix,
    pub b: Vector,
    pub lower: Vector,
    pub upper: Vector,
}

impl LpProblem {
    /// Free variables; add bounds with [`LpProblem::with_bounds`] or [`LpProblem::with_box`].
    pub fn new(c: Vector, a: Matrix, b: Vector) -> Result<Self, SolverError> {
        let d = c.len();
        if a.cols() != d || a.rows() != b.len() {
            return Err(SolverError::InvalidInput(format!(
                "LP dimensions: c has {d} entries, A is {}x{}, b has {}",
                a.rows(),
                a.cols(),
                b.len()
            )));
        }
        if !c.iter().chain(&b).all(|v| v.is_finite()) || !a.is_finite() {
            return Err(SolverError::InvalidInput("LP data must be finite".into()));
        }
        Ok(Self {
            c,
            a,
            b,
            lower: vec![f64::NEG_INFINITY; d],
            upper: vec![f64::INFINITY; d],
        })
    }

    pub fn with_bounds(mut self, lower: Vector, upper: Vector) -> Result<Self, SolverError> {
        let d = self.c.len();
        if lower.len() != d || upper.len() != d {
            return Err(SolverError::InvalidInput(
                "bound vectors must have length d".into(),
            ));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, h)| l.is_nan() || h.is_nan() || l > h)
        {
            return Err(SolverError::InvalidInput(
                "bounds must satisfy lo <= hi".into(),
            ));
        }
        if lower.iter().any(|&l| l == f64::INFINITY)
            || upper.iter().any(|&h| h == f64::NEG_INFINITY)
        {
            return Err(SolverError::InvalidInput(
                "bounds must admit a finite value".into(),
            ));
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    /// `−radius ≤ x_k ≤ radius` for every coordinate.
    pub fn with_box(self, radius: f64) -> Result<Self, SolverError> {
        let d = self.c.len();
        self.with_bounds(vec![-radius; d], vec![radius; d])
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point; for `Unbounded`, the feasible point the ray starts from.
    pub x: Vector,
    pub objective: f64,
    /// Coordinates sitting on a finite bound.
    pub at_bound: Vec<bool>,
    /// Improving recession direction when `Unbounded`.
    pub ray: Option<Vector>,
}

impl LpSolution {
    fn infeasible(d: usize) -> Self {
        Self {
            status: LpStatus::Infeasible,
            x: vec![f64::NAN; d],
            objective: f64::NAN,
            at_bound: vec![false; d],
            ray: None,
        }
    }
}

/// Tolerance on `Ax ≤ b` at an optimal return, relative to `1 + ‖b‖∞`.
pub const LP_FEASIBILITY_TOL: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
enum Column {
    /// `x_k = offset + y`
    Plus(usize),
    /// `x_k = offset − y`
    Minus(usize),
}

struct Tableau {
    rows: usize,
    width: usize, // columns + rhs
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    /// Row `rows` is the objective row (reduced costs, rhs holds −z).
    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.width;
        let p = self.data[r * w + col];
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * w + col];
            if f == 0.0 {
                continue;
            }
            for (v, pv) in self.data[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.data[i * w + col] = 0.0;
        }
        self.basis[r] = col;
    }

    /// Runs simplex iterations on columns `0..active` with Bland's rule.
    /// Returns `Ok(None)` at optimality or `Ok(Some(col))` when column `col`
    /// proves unboundedness.
    fn iterate(&mut self, active: usize, cost_tol: f64) -> Result<Option<usize>, SolverError> {
        let max_iter = 50 * (self.rows + active) + 1000;
        let obj = self.rows;
        for _ in 0..max_iter {
            let entering = (0..active).find(|&j| self.at(obj, j) < -cost_tol);
            let Some(col) = entering else {
                return Ok(None);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr || (ratio == lr && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(Some(col)),
                Some((r, _)) => self.pivot(r, col),
            }
        }
        Err(SolverError::NumericalBreakdown(
            "simplex iteration limit reached (pivots too small to make progress)".into(),
        ))
    }
}

pub fn solve_lp(prob: &LpProblem) -> Result<LpSolution, SolverError> {
    let d = prob.dim();
    let m = prob.a.rows();

    // variable substitution
    let mut columns: Vec<Column> = Vec::with_capacity(2 * d);
    let mut offset = vec![0.0; d];
    let mut extra_rows: Vec<(usize, f64)> = Vec::new(); // (column, upper limit on y)
    for k in 0..d {
        let (lo, hi) = (prob.lower[k], prob.upper[k]);
        if lo.is_finite() {
            offset[k] = lo;
            columns.push(Column::Plus(k));
            if hi.is_finite() {
                extra_rows.push((columns.len() - 1, hi - lo));
            }
        } else if hi.is_finite() {
            offset[k] = hi;
            columns.push(Column::Minus(k));
        } else {
            columns.push(Column::Plus(k));
            columns.push(Column::Minus(k));
        }
    }
    let ny = columns.len();
    let rows = m + extra_rows.len();

    // standard-form rows: A_y y + s = r
    let mut a_y = vec![0.0; rows * ny];
    let mut r = vec![0.0; rows];
    for i in 0..m {
        let arow = prob.a.row(i);
        r[i] = prob.b[i] - dot(arow, &offset);
        for (j, col) in columns.iter().enumerate() {
            a_y[i * ny + j] = match *col {
                Column::Plus(k) => arow[k],
                Column::Minus(k) => -arow[k],
            };
        }
    }
    for (e, &(j, limit)) in extra_rows.iter().enumerate() {
        a_y[(m + e) * ny + j] = 1.0;
        r[m + e] = limit;
    }

    let needs_art: Vec<bool> = r.iter().map(|&v| v < 0.0).collect();
    let n_art = needs_art.iter().filter(|&&f| f).count();
    let slack0 = ny;
    let art0 = ny + rows;
    let ncols = art0 + n_art;
    let width = ncols + 1;
    let mut t = Tableau {
        rows,
        width,
        data: vec![0.0; (rows + 1) * width],
        basis: vec![0; rows],
    };
    let mut next_art = art0;
    for i in 0..rows {
        let sign = if needs_art[i] { -1.0 } else { 1.0 };
        for j in 0..ny {
            t.data[i * width + j] = sign * a_y[i * ny + j];
        }
        t.data[i * width + slack0 + i] = sign;
        t.data[i * width + ncols] = sign * r[i];
        if needs_art[i] {
            t.data[i * width + next_art] = 1.0;
            t.basis[i] = next_art;
            next_art += 1;
        } else {
            t.basis[i] = slack0 + i;
        }
    }

    let scale = 1.0 + norm_inf(&r);
    if n_art > 0 {
        // phase one: minimize the sum of artificials
        let obj = rows;
        for i in 0..rows {
            if needs_art[i] {
                for j in 0..art0 {
                    t.data[obj * width + j] -= t.data[i * width + j];
                }
                t.data[obj * width + ncols] -= t.data[i * width + ncols];
            }
        }
        if t.iterate(ncols, 1e-11)?.is_some() {
            return Err(SolverError::NumericalBreakdown(
                "phase one reported unbounded".into(),
            ));
        }
        let infeasibility = -t.rhs(obj);
        if infeasibility > 1e-9 * scale {
            return Ok(LpSolution::infeasible(d));
        }
        // drive remaining (zero-level) artificials out of the basis
        let mut i = 0;
        while i < t.rows {
            if t.basis[i] >= art0 {
                match (0..art0).find(|&j| t.at(i, j).abs() > 1e-9) {
                    Some(col) => t.pivot(i, col),
                    None => {
                        remove_row(&mut t, i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    // phase two over the non-artificial columns
    let mut cost = vec![0.0; art0];
    for (j, col) in columns.iter().enumerate() {
        cost[j] = match *col {
            Column::Plus(k) => prob.c[k],
            Column::Minus(k) => -prob.c[k],
        };
    }
    let obj = t.rows;
    for j in 0..width {
        t.data[obj * width + j] = 0.0;
    }
    for j in 0..art0 {
        t.data[obj * width + j] = cost[j];
    }
    for i in 0..t.rows {
        let cb = cost.get(t.basis[i]).copied().unwrap_or(0.0);
        if cb != 0.0 {
            for j in 0..width {
                if j < art0 || j == width - 1 {
                    t.data[obj * width + j] -= cb * t.data[i * width + j];
                }
            }
        }
    }
    let cost_tol = 1e-11 * (1.0 + norm_inf(&prob.c));
    let unbounded_col = t.iterate(art0, cost_tol)?;

    let mut y = vec![0.0; ncols];
    for i in 0..t.rows {
        y[t.basis[i]] = t.rhs(i).max(0.0);
    }
    let to_x = |y: &[f64], with_offset: bool| -> Vector {
        let mut x = if with_offset {
            offset.clone()
        } else {
            vec![0.0; d]
        };
        for (j, col) in columns.iter().enumerate() {
            match *col {
                Column::Plus(k) => x[k] += y[j],
                Column::Minus(k) => x[k] -= y[j],
            }
        }
        x
    };
    let x = to_x(&y, true);
    let objective = dot(&prob.c, &x);
    let at_bound = (0..d)
        .map(|k| {
            let near = |bound: f64| {
                bound.is_finite() && (x[k] - bound).abs() <= 1e-9 * (1.0 + bound.abs())
            };
            near(prob.lower[k]) || near(prob.upper[k])
        })
        .collect();

    if let Some(col) = unbounded_col {
        let mut dir = vec![0.0; ncols];
        dir[col] = 1.0;
        for i in 0..t.rows {
            dir[t.basis[i]] = -t.at(i, col);
        }
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x,
            objective: f64::NEG_INFINITY,
            at_bound,
            ray: Some(to_x(&dir, false)),
        });
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        at_bound,
        ray: None,
    })
}

fn remove_row(t: &mut Tableau, i: usize) {
    let w = t.width;
    t.data.drain(i * w..(i + 1) * w);
    t.basis.remove(i);
    t.rows -= 1;
}
