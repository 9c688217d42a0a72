use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::instances::{
    draw_samples, split_data, true_satisfaction_probability, GaussianLinearCcp,
};
use crate::mathkit::{std_normal_quantile, RngStream};
use crate::reformulations::{build_path, Benchmark, Candidate, Method, SolutionPath};
use crate::solvers::{SocGeometry, SocStatus};
use crate::validators::{evaluate_h_matrix, select_candidate, HMatrix, MarginRule, RuleKind};

use super::records::{summarize, write_records};
use super::{
    BenchmarkOutcome, ExperimentConfig, HarnessError, ReplicationRecord, RuleOutcome, SummaryTable,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config_hash: String,
    pub method: Method,
    pub benchmark: String,
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub alpha: f64,
    pub beta: f64,
    pub table: SummaryTable,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    pub records: Vec<ReplicationRecord>,
}

impl ExperimentOutput {
    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes") + "\n"
    }

    pub fn records_csv(&self) -> String {
        let mut buf = Vec::new();
        write_records(&mut buf, &self.records).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

fn score(inst: &GaussianLinearCcp, x: &[f64]) -> (f64, bool) {
    let p = true_satisfaction_probability(inst, x);
    (p, p >= inst.gamma())
}

fn benchmark_outcome(
    inst: &GaussianLinearCcp,
    result: Result<Candidate, String>,
) -> BenchmarkOutcome {
    match result {
        Ok(c) if c.status.is_optimal() => {
            let (p, ok) = score(inst, &c.x);
            BenchmarkOutcome {
                s: Some(c.s),
                objective: Some(c.objective),
                true_prob: Some(p),
                feasible: ok,
                error: None,
            }
        }
        Ok(c) => BenchmarkOutcome {
            s: None,
            objective: None,
            true_prob: None,
            feasible: false,
            error: Some(c.status.label()),
        },
        Err(e) => BenchmarkOutcome {
            s: None,
            objective: None,
            true_prob: None,
            feasible: false,
            error: Some(e),
        },
    }
}

fn validate_rule(
    config: &ExperimentConfig,
    inst: &GaussianLinearCcp,
    path: &SolutionPath,
    h: &HMatrix,
    rule: RuleKind,
    rng: &RngStream,
) -> RuleOutcome {
    let report = MarginRule::new(
        rule,
        config.beta,
        config.mc_budget,
        rng.derive(rule.stream_id()),
    )
    .and_then(|m| select_candidate(path, h, inst.gamma(), &m));
    match report {
        Ok(rep) => {
            let mut out = RuleOutcome {
                rule,
                index: None,
                s_star: None,
                objective: None,
                true_prob: None,
                feasible: false,
                none_feasible: rep.none_feasible(),
                error: None,
                report: None,
            };
            if let Some(sel) = &rep.selected {
                let (p, ok) = score(inst, &path.candidates[sel.index].x);
                out.index = Some(sel.index);
                out.s_star = Some(sel.s);
                out.objective = Some(sel.objective);
                out.true_prob = Some(p);
                out.feasible = ok;
            }
            out.report = Some(rep);
            out
        }
        Err(e) => RuleOutcome::failed(rule, e.to_string()),
    }
}

/// One replication, fully determined by `(config, rep)`. Failures end up in
/// the record rather than aborting.
pub fn run_replication(
    config: &ExperimentConfig,
    inst: &GaussianLinearCcp,
    rep: u64,
) -> ReplicationRecord {
    let mut rng = RngStream::new(config.seed, rep);
    let (n1, n2) = config.split();
    let spec = config.grid_spec();
    let fail_all = |msg: String, benchmark: BenchmarkOutcome| ReplicationRecord {
        rep,
        outcomes: config
            .validators
            .iter()
            .map(|&r| RuleOutcome::failed(r, msg.clone()))
            .collect(),
        benchmark,
    };
    let no_benchmark = |msg: &str| BenchmarkOutcome {
        s: None,
        objective: None,
        true_prob: None,
        feasible: false,
        error: Some(msg.to_string()),
    };

    let samples = match draw_samples(inst, config.n, &mut rng) {
        Ok(s) => s,
        Err(e) => return fail_all(e.to_string(), no_benchmark("no data")),
    };
    let split = match split_data(&samples, n1, n2) {
        Ok(s) => s,
        Err(e) => return fail_all(e.to_string(), no_benchmark("no data")),
    };
    let benchmark = benchmark_outcome(
        inst,
        Benchmark::for_method(config.method)
            .solve(inst, &samples, &split, &spec)
            .map_err(|e| e.to_string()),
    );
    let path = match build_path(
        config.method,
        &split.phase1,
        inst.c(),
        inst.b(),
        inst.alpha(),
        &spec,
    ) {
        Ok(p) => p,
        Err(e) => return fail_all(e.to_string(), benchmark),
    };
    let h = match evaluate_h_matrix(&path, &split.phase2, inst.b()) {
        Ok(h) => h,
        Err(e) => return fail_all(e.to_string(), benchmark),
    };
    let outcomes = config
        .validators
        .iter()
        .map(|&rule| validate_rule(config, inst, &path, &h, rule, &rng))
        .collect();
    ReplicationRecord {
        rep,
        outcomes,
        benchmark,
    }
}

/// All replications on a pool of `config.threads` workers. The output does
/// not depend on the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    config.validate()?;
    let inst = config.load_instance()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t);
    }
    if let Some(false) = chance_problem_bounded(&inst) {
        tracing::warn!("the true chance-constrained problem is unbounded below on this instance");
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    tracing::info!(
        method = %config.method,
        reps = config.replications,
        threads = pool.current_num_threads(),
        "running experiment"
    );
    let records: Vec<ReplicationRecord> = pool.install(|| {
        (0..config.replications as u64)
            .into_par_iter()
            .map(|rep| {
                let rec = run_replication(config, &inst, rep);
                if rec.has_failure() {
                    tracing::warn!(rep, "replication recorded a failure");
                }
                rec
            })
            .collect()
    });
    let table = summarize(&records)?;
    let (n1, n2) = config.split();
    Ok(ExperimentOutput {
        summary: ExperimentSummary {
            config_hash: config.hash(),
            method: config.method,
            benchmark: Benchmark::for_method(config.method).name().to_string(),
            n: config.n,
            n1,
            n2,
            alpha: inst.alpha(),
            beta: config.beta,
            table,
        },
        records,
    })
}

/// Whether `min c'x` over the exact feasible set `μ'x + z_{1−α}‖Σ^{1/2}x‖ ≤ b`
/// is bounded; `None` if that cannot be decided numerically.
pub fn chance_problem_bounded(inst: &GaussianLinearCcp) -> Option<bool> {
    let z = std_normal_quantile(inst.gamma()).ok()?;
    let geom = SocGeometry::new(inst.c(), inst.mu(), inst.factor()).ok()?;
    geom.solve(z, inst.b())
        .ok()
        .map(|s| s.status == SocStatus::Optimal)
}

/// Writes `summary.json` and `records.csv` into `dir`.
pub fn write_outputs(
    dir: &Path,
    out: &ExperimentOutput,
) -> Result<(PathBuf, PathBuf), HarnessError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |e: std::io::Error| HarnessError::Io { path, source: e }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let summary = dir.join("summary.json");
    let records = dir.join("records.csv");
    std::fs::write(&summary, out.summary_json()).map_err(io(&summary))?;
    std::fs::write(&records, out.records_csv()).map_err(io(&records))?;
    Ok((summary, records))
}

/// Most frequently selected grid index for `rule` (ties to the smaller index).
pub fn modal_selected_index(records: &[ReplicationRecord], rule: RuleKind) -> Option<usize> {
    let mut counts: Vec<usize> = Vec::new();
    for idx in records
        .iter()
        .filter_map(|r| r.outcome(rule).and_then(|o| o.index))
    {
        if counts.len() <= idx {
            counts.resize(idx + 1, 0);
        }
        counts[idx] += 1;
    }
    let best = *counts.iter().max()?;
    (best > 0).then(|| counts.iter().position(|&c| c == best).expect("max exists"))
}
