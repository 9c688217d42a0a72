//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

mod common;

use std::io::Write;
use std::time::Instant;

use solpath::harness::{run_experiment, ExperimentConfig, ExperimentOutput, InstanceSource};
use solpath::instances::{draw_samples, generate_canonical_instance, split_data};
use solpath::mathkit::{
    cholesky_psd, dot, norm2, std_normal_quantile, Matrix, PsdFactor, RepairPolicy, RngStream,
};
use solpath::reformulations::{build_path, kl_worst_case_mean, GridSpec, Method};
use solpath::solvers::{solve_lp, LpProblem, LpStatus, SocGeometry, SocStatus};
use solpath::validators::{gaussian_sup_quantile, select_candidate, HMatrix, MarginRule, RuleKind};

use common::{kl_oracle, random_lp, vertex_enumeration, OracleStatus};

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn canonical_run(method: Method, reps: usize) -> ExperimentOutput {
    let cfg = ExperimentConfig {
        instance: InstanceSource::Canonical { d: 10, seed: 1 },
        method,
        n: 200,
        replications: reps,
        seed: 1,
        beta: 0.05,
        ..ExperimentConfig::default()
    };
    run_experiment(&cfg).expect("experiment runs")
}

const MARGIN_RULES: [RuleKind; 3] = [
    RuleKind::UnnormalizedGs,
    RuleKind::NormalizedGs,
    RuleKind::Univariate,
];

fn coverage(out: &ExperimentOutput) -> Outcome {
    let t = &out.summary.table;
    let level = |r: RuleKind| t.rule(r).expect("rule ran").feasibility_level;
    let levels: Vec<f64> = MARGIN_RULES.iter().map(|&r| level(r)).collect();
    let min = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let plain = level(RuleKind::Plain);
    let msg = format!(
        "levels unnorm {:.3}, norm {:.3}, uni {:.3}, plain {:.3}",
        levels[0], levels[1], levels[2], plain
    );
    check(min >= 0.93 && plain < min, msg.clone(), msg)
}

fn dominance(out: &ExperimentOutput) -> Outcome {
    let mut violations = Vec::new();
    let mut compared = 0;
    for rec in &out.records {
        let get = |r: RuleKind| rec.outcome(r).expect("rule ran");
        let obj = |r: RuleKind| get(r).objective;
        let pairs = [
            (RuleKind::Plain, RuleKind::Univariate),
            (RuleKind::Univariate, RuleKind::NormalizedGs),
            (RuleKind::Univariate, RuleKind::UnnormalizedGs),
        ];
        for (lo, hi) in pairs {
            if let (Some(a), Some(b)) = (obj(lo), obj(hi)) {
                compared += 1;
                if a > b {
                    violations.push(format!("rep {}: {lo} {a} > {hi} {b}", rec.rep));
                }
            }
        }
        let pass = |r: RuleKind| get(r).report.as_ref().expect("report kept").pass_set();
        let (plain, uni) = (pass(RuleKind::Plain), pass(RuleKind::Univariate));
        for gs in [RuleKind::NormalizedGs, RuleKind::UnnormalizedGs] {
            let g = pass(gs);
            for j in 0..g.len() {
                if (g[j] && !uni[j]) || (uni[j] && !plain[j]) {
                    violations.push(format!(
                        "rep {}: pass sets not nested at {j} ({gs})",
                        rec.rep
                    ));
                }
            }
        }
    }
    check(
        violations.is_empty(),
        format!("{compared} objective comparisons, pass sets nested in every replication"),
        format!(
            "{} violations, first: {}",
            violations.len(),
            violations.first().cloned().unwrap_or_default()
        ),
    )
}

fn sca_feasibility(out: &ExperimentOutput) -> Outcome {
    let feasible = out.records.iter().filter(|r| r.benchmark.feasible).count();
    let total = out.records.len();
    let msg = format!("{feasible}/{total} SCA solutions feasible");
    check(feasible == total, msg.clone(), msg)
}

fn path_monotonicity() -> Outcome {
    let spec_for = |m| GridSpec::for_method(m);
    let mut bad = Vec::new();
    for k in 0..50u64 {
        let inst = generate_canonical_instance(10, 100 + k).unwrap();
        let mut rng = RngStream::new(k, 0);
        let samples = draw_samples(&inst, 200, &mut rng).unwrap();
        let split = split_data(&samples, 100, 100).unwrap();
        for m in [Method::Ro, Method::Dro, Method::So] {
            let path = build_path(
                m,
                &split.phase1,
                inst.c(),
                inst.b(),
                inst.alpha(),
                &spec_for(m),
            )
            .unwrap();
            let objs: Vec<f64> = path
                .candidates
                .iter()
                .filter(|c| c.status.is_optimal())
                .map(|c| c.objective)
                .collect();
            if objs.is_empty() || objs.windows(2).any(|w| w[1] < w[0] - 1e-8) {
                bad.push(format!("instance {k} {m}"));
            }
        }
    }
    check(
        bad.is_empty(),
        "RO, DRO and SO paths nondecreasing on 50 instances".into(),
        format!("{} non-monotone paths: {:?}", bad.len(), bad),
    )
}

fn quantile_engine() -> Outcome {
    let target = std_normal_quantile(0.95f64.sqrt()).unwrap();
    let mut rng = RngStream::new(2024, 0);
    let q2 = gaussian_sup_quantile(
        &Matrix::identity(2),
        &[1.0, 1.0],
        0.05,
        1_000_000,
        &mut rng,
        false,
    )
    .unwrap();

    let z = std_normal_quantile(0.95).unwrap();
    let cov = Matrix::from_rows(&[[0.04]]).unwrap();
    let q1 = gaussian_sup_quantile(&cov, &[0.2], 0.05, 1_000_000, &mut rng, false).unwrap();

    let mut gen = RngStream::new(77, 0);
    let mut mismatches = 0;
    for t in 0..100u64 {
        let n2 = 20 + (gen.next_u64() % 200) as usize;
        let p_one = gen.uniform_range(0.6, 1.0);
        let mut values = Matrix::zeros(1, n2);
        for i in 0..n2 {
            values[(0, i)] = if gen.uniform() < p_one { 1.0 } else { 0.0 };
        }
        let h = HMatrix::new(values, vec![true]).unwrap();
        let path = solpath::reformulations::SolutionPath::new(
            None,
            vec![solpath::reformulations::Candidate {
                s: 1.0,
                x: vec![0.0],
                status: solpath::reformulations::CandidateStatus::Optimal,
                objective: gen.uniform_range(-5.0, 0.0),
                at_bound: false,
            }],
            None,
        )
        .unwrap();
        let gamma = gen.uniform_range(0.5, 0.95);
        let beta = gen.uniform_range(0.01, 0.2);
        let rule = |k| MarginRule::new(k, beta, 10_000, RngStream::new(t, 0)).unwrap();
        let a = select_candidate(&path, &h, gamma, &rule(RuleKind::NormalizedGs)).unwrap();
        let b = select_candidate(&path, &h, gamma, &rule(RuleKind::Univariate)).unwrap();
        if a.candidates != b.candidates || a.selected != b.selected {
            mismatches += 1;
        }
    }
    let msg = format!(
        "p=2 q {q2:.4} vs {target:.4}; p=1 q-zσ {:.1e}; {mismatches} normalized/univariate mismatches",
        q1 - z * 0.2
    );
    check(
        (q2 - target).abs() <= 0.01 && q1 == z * 0.2 && mismatches == 0,
        msg.clone(),
        msg,
    )
}

fn lp_oracle() -> Outcome {
    let mut rng = RngStream::new(6, 0);
    let mut mismatches = Vec::new();
    let mut counts = [0usize; 3];
    for case in 0..200 {
        let lp = random_lp(&mut rng);
        let prob = LpProblem::new(lp.c.clone(), lp.a.clone(), lp.b.clone())
            .unwrap()
            .with_bounds(lp.lower.clone(), lp.upper.clone())
            .unwrap();
        let sol = solve_lp(&prob).unwrap();
        let oracle = vertex_enumeration(&lp.c, &lp.a, &lp.b, &lp.lower, &lp.upper);
        let ok = match (sol.status, oracle) {
            (LpStatus::Optimal, OracleStatus::Optimal(v)) => {
                counts[0] += 1;
                (sol.objective - v).abs() <= 1e-8
            }
            (LpStatus::Infeasible, OracleStatus::Infeasible) => {
                counts[1] += 1;
                true
            }
            (LpStatus::Unbounded, OracleStatus::Unbounded) => {
                counts[2] += 1;
                true
            }
            _ => false,
        };
        if !ok {
            mismatches.push(format!("case {case}: {:?} vs {oracle:?}", sol.status));
        }
    }
    check(
        mismatches.is_empty(),
        format!(
            "200 LPs agree ({} optimal, {} infeasible, {} unbounded)",
            counts[0], counts[1], counts[2]
        ),
        format!("{} mismatches: {:?}", mismatches.len(), mismatches),
    )
}

fn random_spd(d: usize, rng: &mut RngStream) -> (Matrix, PsdFactor) {
    let mut a = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] = rng.standard_normal();
        }
    }
    let mut sigma = a.gram().scale(1.0 / d as f64);
    for i in 0..d {
        sigma[(i, i)] += 0.05;
    }
    let f = cholesky_psd(&sigma, RepairPolicy::Bounded).unwrap();
    (sigma, f)
}

fn soc_solver() -> Outcome {
    let id = cholesky_psd(&Matrix::identity(2), RepairPolicy::Bounded).unwrap();
    let g = SocGeometry::new(&[-1.0, 0.0], &[1.0, 0.0], &id).unwrap();
    let a = g.solve(2.0, 1.0).unwrap();
    let b = g.solve(0.5, 1.0).unwrap();
    let hand = (a.x[0] - 1.0 / 3.0).abs() <= 1e-8
        && a.x[1].abs() <= 1e-8
        && (b.x[0] - 2.0 / 3.0).abs() <= 1e-8
        && b.x[1].abs() <= 1e-8
        && (b.multiplier - 2.0 / 3.0).abs() <= 1e-8;

    let mut rng = RngStream::new(31, 0);
    let (mut worst_con, mut worst_stat) = (0.0f64, 0.0f64);
    let mut solved = 0;
    while solved < 500 {
        let d = 2 + (rng.next_u64() % 5) as usize;
        let (sigma, f) = random_spd(d, &mut rng);
        let mu: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let c: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let b = rng.uniform_range(0.5, 3.0);
        let mu_norm = f.mahalanobis(&mu).unwrap().sqrt();
        // κ above ‖μ‖_{Σ⁻¹} keeps the problem bounded
        let kappa = mu_norm + rng.uniform_range(0.1, 2.0);
        let g = SocGeometry::new(&c, &mu, &f).unwrap();
        let sol = g.solve(kappa, b).unwrap();
        if sol.status != SocStatus::Optimal {
            return Err(format!(
                "bounded instance {solved} reported {:?}",
                sol.status
            ));
        }
        let r = f.quad_norm(&sol.x).unwrap();
        worst_con = worst_con.max((dot(&mu, &sol.x) + kappa * r - b).abs() / (1.0 + b));
        let sx = sigma.matvec(&sol.x).unwrap();
        let resid: Vec<f64> = (0..d)
            .map(|i| c[i] + sol.multiplier * (mu[i] + kappa * sx[i] / r))
            .collect();
        worst_stat = worst_stat.max(norm2(&resid) / norm2(&c));
        solved += 1;
    }

    let mut certs = 0;
    let mut cert_bad = 0;
    while certs < 100 {
        let d = 2 + (rng.next_u64() % 4) as usize;
        let (_, f) = random_spd(d, &mut rng);
        let mu: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let c: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let kappa = 0.5 * f.mahalanobis(&mu).unwrap().sqrt();
        let sol = SocGeometry::new(&c, &mu, &f)
            .unwrap()
            .solve(kappa, 1.0)
            .unwrap();
        if sol.status != SocStatus::Unbounded {
            continue;
        }
        certs += 1;
        let u = sol.certificate.expect("unbounded carries a certificate");
        if !(dot(&c, &u) < 0.0 && dot(&mu, &u) + kappa * f.quad_norm(&u).unwrap() <= 0.0) {
            cert_bad += 1;
        }
    }
    let msg = format!(
        "hand cases {}; 500 bounded: constraint {worst_con:.1e}, stationarity {worst_stat:.1e}; {cert_bad}/100 bad certificates",
        if hand { "ok" } else { "WRONG" }
    );
    check(
        hand && worst_con <= 1e-8 && worst_stat <= 1e-8 && cert_bad == 0,
        msg.clone(),
        msg,
    )
}

fn kl_diagnostic() -> Outcome {
    let mut rng = RngStream::new(8, 0);
    let mut pairs: Vec<(f64, f64)> = vec![
        (0.0, 0.2),
        (1.0, 0.2),
        (0.7, 0.0),
        (0.0, 0.0),
        (1.0, 0.0),
        (0.9, 0.01),
    ];
    while pairs.len() < 100 {
        pairs.push((rng.uniform(), rng.uniform_range(0.0, 1.0).powi(3)));
    }
    let worst = pairs
        .iter()
        .map(|&(p, s)| (kl_worst_case_mean(p, s) - kl_oracle(p, s)).abs())
        .fold(0.0f64, f64::max);
    let msg = format!(
        "max deviation from oracle {worst:.1e} over {} pairs",
        pairs.len()
    );
    check(worst <= 1e-10, msg.clone(), msg)
}

fn determinism() -> Outcome {
    let outputs: Vec<(String, String)> = [1usize, 4, 8]
        .iter()
        .map(|&t| {
            let cfg = ExperimentConfig {
                instance: InstanceSource::Canonical { d: 10, seed: 1 },
                method: Method::Ro,
                n: 200,
                replications: 12,
                seed: 99,
                threads: Some(t),
                ..ExperimentConfig::default()
            };
            let out = run_experiment(&cfg).unwrap();
            (out.summary_json(), out.records_csv())
        })
        .collect();
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    check(
        same,
        "summary JSON and records CSV byte-identical for 1, 4 and 8 threads".into(),
        "outputs differ across thread counts".into(),
    )
}

fn fast_pipeline(out: &ExperimentOutput) -> Outcome {
    let t = &out.summary.table;
    let uni = t
        .rule(RuleKind::Univariate)
        .unwrap()
        .mean_objective
        .unwrap_or(f64::INFINITY);
    let bench = t.benchmark.mean_objective.unwrap_or(f64::NEG_INFINITY);
    let levels: Vec<f64> = MARGIN_RULES
        .iter()
        .map(|&r| t.rule(r).unwrap().feasibility_level)
        .collect();
    let msg = format!(
        "uni mean obj {uni:.4} vs FAST {bench:.4}; levels unnorm {:.3}, norm {:.3}, uni {:.3}",
        levels[0], levels[1], levels[2]
    );
    check(
        uni <= bench && levels.iter().all(|&l| l >= 0.93),
        msg.clone(),
        msg,
    )
}

fn report(stderr: &mut impl Write, id: usize, name: &str, started: Instant, outcome: &Outcome) {
    let secs = started.elapsed().as_secs_f64();
    let (tag, detail) = match outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    writeln!(
        stderr,
        "criterion {id:>2} {tag} [{secs:6.1}s] {name}: {detail}"
    )
    .unwrap();
}

fn main() {
    let mut err = std::io::stderr();
    let mut failed = 0;
    let mut tally = |o: &Outcome| {
        if o.is_err() {
            failed += 1;
        }
    };

    let t = Instant::now();
    let ro = canonical_run(Method::Ro, 500);
    let o = coverage(&ro);
    report(&mut err, 1, "coverage", t, &o);
    tally(&o);
    let t = Instant::now();
    let o = dominance(&ro);
    report(&mut err, 2, "objective dominance", t, &o);
    tally(&o);
    let t = Instant::now();
    let o = sca_feasibility(&ro);
    report(&mut err, 3, "SCA feasibility", t, &o);
    tally(&o);
    drop(ro);

    let cases: [(usize, &str, fn() -> Outcome); 6] = [
        (4, "path monotonicity", path_monotonicity),
        (5, "quantile engine", quantile_engine),
        (6, "LP oracle equivalence", lp_oracle),
        (7, "SOC solver", soc_solver),
        (8, "KL diagnostic", kl_diagnostic),
        (9, "determinism", determinism),
    ];
    for (id, name, f) in cases {
        let t = Instant::now();
        let o = f();
        report(&mut err, id, name, t, &o);
        tally(&o);
    }

    let t = Instant::now();
    let fast = canonical_run(Method::Fast, 500);
    let o = fast_pipeline(&fast);
    report(&mut err, 10, "FAST pipeline", t, &o);
    tally(&o);

    if failed > 0 {
        writeln!(err, "{failed} acceptance criteria failed").unwrap();
        std::process::exit(1);
    }
    writeln!(err, "all acceptance criteria passed").unwrap();
}
