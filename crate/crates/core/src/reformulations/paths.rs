use rayon::prelude::*;

use crate::instances::{DataSplit, GaussianLinearCcp, SampleSet};
use crate::mathkit::{chi_square_quantile, dot, Vector};
use crate::solvers::{line_search_fast, solve_lp, LpProblem, LpStatus, SocGeometry, SocStatus};

use super::grid::{build_grid, phase_one_stats};
use super::{Candidate, CandidateStatus, GridSpec, Method, ReformulationError, SolutionPath};

/// Radius multiplier of the moment-DRO constraint at set size `s` with `n`
/// samples: `√(s/n) + √((1−α)/α)·√(1 + s/√n)`.
pub fn dro_kappa(s: f64, n: usize, alpha: f64) -> f64 {
    let n = n as f64;
    (s / n).sqrt() + ((1.0 - alpha) / alpha).sqrt() * (1.0 + s / n.sqrt()).sqrt()
}

fn soc_candidate(geom: &SocGeometry, s: f64, kappa: f64, b: f64) -> Candidate {
    match geom.solve(kappa, b) {
        Ok(sol) if sol.status == SocStatus::Optimal => Candidate {
            s,
            objective: sol.objective,
            x: sol.x,
            status: CandidateStatus::Optimal,
            at_bound: false,
        },
        Ok(_) => Candidate::excluded(s, geom.dim(), "unbounded"),
        Err(e) => Candidate::excluded(s, geom.dim(), e.to_string()),
    }
}

/// Ellipsoidal RO at radius² `s`: `μ̂'x + √s‖Σ̂^{1/2}x‖ ≤ b`.
pub fn solve_ro_point(geom: &SocGeometry, s: f64, b: f64) -> Candidate {
    if !(s >= 0.0) {
        return Candidate::excluded(s, geom.dim(), format!("negative radius {s}"));
    }
    soc_candidate(geom, s, s.sqrt(), b)
}

/// Moment DRO at set size `s`, with moments estimated from `n1` samples.
pub fn solve_dro_point(geom: &SocGeometry, s: f64, n1: usize, alpha: f64, b: f64) -> Candidate {
    if !(s >= 0.0) {
        return Candidate::excluded(s, geom.dim(), format!("negative set size {s}"));
    }
    soc_candidate(geom, s, dro_kappa(s, n1, alpha), b)
}

/// Scenario LP on the first `s` rows of `samples`, inside `±box_radius`.
pub fn solve_so_point(
    samples: &SampleSet,
    s: usize,
    c: &[f64],
    b: f64,
    box_radius: f64,
) -> Candidate {
    let d = c.len();
    if s == 0 || s > samples.len() {
        return Candidate::excluded(
            s as f64,
            d,
            format!("scenario count {s} outside 1..={}", samples.len()),
        );
    }
    let a = samples.data().slice_rows(0, s);
    let prob = LpProblem::new(c.to_vec(), a, vec![b; s]).and_then(|p| p.with_box(box_radius));
    match prob.and_then(|p| solve_lp(&p)) {
        Ok(sol) if sol.status == LpStatus::Optimal => Candidate {
            s: s as f64,
            objective: dot(c, &sol.x),
            at_bound: sol.at_bound.iter().any(|&f| f),
            x: sol.x,
            status: CandidateStatus::Optimal,
        },
        Ok(sol) => Candidate::excluded(s as f64, d, format!("{:?}", sol.status).to_lowercase()),
        Err(e) => Candidate::excluded(s as f64, d, e.to_string()),
    }
}

/// Points `(1−s)x_o + s·x̂` along the segment.
pub fn fast_segment_points(
    c: &[f64],
    x_o: &[f64],
    x_hat: &[f64],
    grid: &[f64],
) -> Result<SolutionPath, ReformulationError> {
    if x_o.len() != c.len() || x_hat.len() != c.len() {
        return Err(ReformulationError::InvalidGrid(
            "segment endpoints disagree in dimension".into(),
        ));
    }
    if grid.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(ReformulationError::InvalidGrid(
            "FAST parameters must lie in [0, 1]".into(),
        ));
    }
    let hat_ok = x_hat.iter().all(|v| v.is_finite());
    let candidates = grid
        .iter()
        .map(|&s| {
            if !hat_ok && s > 0.0 {
                return Candidate::excluded(s, c.len(), "scenario endpoint unavailable");
            }
            let x: Vector = x_o
                .iter()
                .zip(x_hat)
                .map(|(o, h)| (1.0 - s) * o + s * h)
                .collect();
            Candidate {
                s,
                objective: dot(c, &x),
                x,
                status: CandidateStatus::Optimal,
                at_bound: false,
            }
        })
        .collect();
    SolutionPath::new(Some(Method::Fast), candidates, None)
}

/// Solution path for `method` from phase-one data.
pub fn build_path(
    method: Method,
    phase1: &SampleSet,
    c: &[f64],
    b: f64,
    alpha: f64,
    spec: &GridSpec,
) -> Result<SolutionPath, ReformulationError> {
    let d = c.len();
    if phase1.dim() != d {
        return Err(ReformulationError::InvalidGrid(format!(
            "samples have dimension {}, objective {d}",
            phase1.dim()
        )));
    }
    match method {
        Method::Ro | Method::Dro => {
            let stats = phase_one_stats(phase1, alpha)?;
            let grid = build_grid(method, Some(&stats), spec)?;
            let geom = SocGeometry::new(c, &stats.mu, &stats.factor)?;
            let candidates: Vec<Candidate> = grid
                .par_iter()
                .map(|&s| match method {
                    Method::Ro => solve_ro_point(&geom, s, b),
                    _ => solve_dro_point(&geom, s, stats.n1, alpha, b),
                })
                .collect();
            SolutionPath::new(Some(method), candidates, Some(stats))
        }
        Method::So => {
            let candidates: Vec<Candidate> = (1..=phase1.len())
                .into_par_iter()
                .map(|s| solve_so_point(phase1, s, c, b, spec.so_box))
                .collect();
            SolutionPath::new(Some(method), candidates, None)
        }
        Method::Fast => {
            let grid = build_grid(method, None, spec)?;
            let x_hat = solve_so_point(phase1, phase1.len(), c, b, spec.so_box);
            fast_segment_points(c, &vec![0.0; d], &x_hat.x, &grid)
        }
    }
}

/// Reference solution each method is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Benchmark {
    /// Safe convex approximation on the true moments.
    Sca,
    /// Moment DRO with the set size at the 95% χ² quantile.
    DroChi2,
    /// Scenario LP on every sample.
    SoFull,
    /// Scenario solution on phase one, line search on phase two.
    FastTwoStage,
}

impl Benchmark {
    pub fn for_method(method: Method) -> Self {
        match method {
            Method::Ro => Benchmark::Sca,
            Method::Dro => Benchmark::DroChi2,
            Method::So => Benchmark::SoFull,
            Method::Fast => Benchmark::FastTwoStage,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Sca => "sca",
            Benchmark::DroChi2 => "dro_chi2",
            Benchmark::SoFull => "so_full",
            Benchmark::FastTwoStage => "fast_two_stage",
        }
    }

    pub fn solve(
        self,
        inst: &GaussianLinearCcp,
        all: &SampleSet,
        split: &DataSplit,
        spec: &GridSpec,
    ) -> Result<Candidate, ReformulationError> {
        match self {
            Benchmark::Sca => solve_sca_benchmark(inst),
            Benchmark::DroChi2 => solve_dro_benchmark(all, inst.c(), inst.b(), inst.alpha(), spec),
            Benchmark::SoFull => Ok(solve_so_benchmark(all, inst.c(), inst.b(), spec.so_box)),
            Benchmark::FastTwoStage => solve_fast_benchmark(split, inst.c(), inst.b(), spec.so_box),
        }
    }
}

/// `μ'x + √(2 ln(1/α))‖Σ^{1/2}x‖ ≤ b` on the instance's true moments.
pub fn solve_sca_benchmark(inst: &GaussianLinearCcp) -> Result<Candidate, ReformulationError> {
    let geom = SocGeometry::new(inst.c(), inst.mu(), inst.factor())?;
    let s = 2.0 * (1.0 / inst.alpha()).ln();
    Ok(soc_candidate(&geom, s, s.sqrt(), inst.b()))
}

/// Moment DRO on all samples at the 95% χ² quantile (df as in the grid).
pub fn solve_dro_benchmark(
    samples: &SampleSet,
    c: &[f64],
    b: f64,
    alpha: f64,
    spec: &GridSpec,
) -> Result<Candidate, ReformulationError> {
    let stats = phase_one_stats(samples, alpha)?;
    let df = spec.dro_chi2_df.unwrap_or(c.len() as u32);
    let s = chi_square_quantile(df, 0.95)?;
    let geom = SocGeometry::new(c, &stats.mu, &stats.factor)?;
    Ok(solve_dro_point(&geom, s, samples.len(), alpha, b))
}

/// Scenario LP with every sample imposed.
pub fn solve_so_benchmark(samples: &SampleSet, c: &[f64], b: f64, box_radius: f64) -> Candidate {
    solve_so_point(samples, samples.len(), c, b, box_radius)
}

/// Two-stage FAST from the zero anchor; `s` of the result is the step taken.
pub fn solve_fast_benchmark(
    split: &DataSplit,
    c: &[f64],
    b: f64,
    box_radius: f64,
) -> Result<Candidate, ReformulationError> {
    let x_hat = solve_so_benchmark(&split.phase1, c, b, box_radius);
    if !x_hat.status.is_optimal() {
        return Ok(x_hat);
    }
    let x_o = vec![0.0; c.len()];
    let (step, x) = line_search_fast(c, &x_o, &x_hat.x, split.phase2.data(), b)?;
    Ok(Candidate {
        s: step,
        objective: dot(c, &x),
        x,
        status: CandidateStatus::Optimal,
        at_bound: false,
    })
}
