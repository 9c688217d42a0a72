//! Per-replication records, their CSV form, and aggregation.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::validators::{RuleKind, ValidationReport};

use super::HarnessError;

pub const RECORDS_HEADER: [&str; 9] = [
    "rep",
    "rule",
    "s_star",
    "objective",
    "true_prob",
    "feasible",
    "none_feasible",
    "benchmark_obj",
    "benchmark_feasible",
];

/// Outcome of one validator in one replication.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleOutcome {
    pub rule: RuleKind,
    /// Selected grid index.
    pub index: Option<usize>,
    pub s_star: Option<f64>,
    pub objective: Option<f64>,
    pub true_prob: Option<f64>,
    pub feasible: bool,
    pub none_feasible: bool,
    /// Set when the pipeline failed before this validator could select.
    pub error: Option<String>,
    /// Full report when validation ran.
    pub report: Option<ValidationReport>,
}

impl RuleOutcome {
    pub fn failed(rule: RuleKind, error: String) -> Self {
        Self {
            rule,
            index: None,
            s_star: None,
            objective: None,
            true_prob: None,
            feasible: false,
            none_feasible: false,
            error: Some(error),
            report: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkOutcome {
    pub s: Option<f64>,
    pub objective: Option<f64>,
    pub true_prob: Option<f64>,
    pub feasible: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationRecord {
    pub rep: u64,
    pub outcomes: Vec<RuleOutcome>,
    pub benchmark: BenchmarkOutcome,
}

impl ReplicationRecord {
    pub fn outcome(&self, rule: RuleKind) -> Option<&RuleOutcome> {
        self.outcomes.iter().find(|o| o.rule == rule)
    }

    pub fn has_failure(&self) -> bool {
        self.outcomes.iter().any(|o| o.error.is_some()) || self.benchmark.error.is_some()
    }
}

/// One row of the records CSV.
#[derive(Clone, Debug, PartialEq)]
struct Row {
    rep: u64,
    rule: RuleKind,
    s_star: Option<f64>,
    objective: Option<f64>,
    true_prob: Option<f64>,
    feasible: bool,
    none_feasible: bool,
    benchmark_obj: Option<f64>,
    benchmark_feasible: bool,
}

fn rows_of(records: &[ReplicationRecord]) -> Vec<Row> {
    records
        .iter()
        .flat_map(|r| {
            r.outcomes.iter().map(move |o| Row {
                rep: r.rep,
                rule: o.rule,
                s_star: o.s_star,
                objective: o.objective,
                true_prob: o.true_prob,
                feasible: o.feasible,
                none_feasible: o.none_feasible,
                benchmark_obj: r.benchmark.objective,
                benchmark_feasible: r.benchmark.feasible,
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_records<W: Write>(out: W, records: &[ReplicationRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORDS_HEADER)?;
    for row in rows_of(records) {
        w.write_record([
            row.rep.to_string(),
            row.rule.to_string(),
            opt(row.s_star),
            opt(row.objective),
            opt(row.true_prob),
            flag(row.feasible).into(),
            flag(row.none_feasible).into(),
            opt(row.benchmark_obj),
            flag(row.benchmark_feasible).into(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn parse_rows<R: Read>(input: R) -> Result<Vec<Row>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(RECORDS_HEADER) {
        return Err(HarnessError::Parse {
            line: 1,
            message: format!("expected header {}", RECORDS_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |message: String| HarnessError::Parse { line, message };
        let num = |k: usize| -> Result<Option<f64>, HarnessError> {
            if rec[k].is_empty() {
                return Ok(None);
            }
            rec[k]
                .parse::<f64>()
                .map(Some)
                .map_err(|_| err(format!("{}: cannot parse {:?}", RECORDS_HEADER[k], &rec[k])))
        };
        let bit = |k: usize| -> Result<bool, HarnessError> {
            match &rec[k] {
                "1" | "true" => Ok(true),
                "0" | "false" => Ok(false),
                other => Err(err(format!(
                    "{}: expected 0 or 1, found {other:?}",
                    RECORDS_HEADER[k]
                ))),
            }
        };
        rows.push(Row {
            rep: rec[0]
                .parse()
                .map_err(|_| err(format!("rep: cannot parse {:?}", &rec[0])))?,
            rule: rec[1].parse().map_err(err)?,
            s_star: num(2)?,
            objective: num(3)?,
            true_prob: num(4)?,
            feasible: bit(5)?,
            none_feasible: bit(6)?,
            benchmark_obj: num(7)?,
            benchmark_feasible: bit(8)?,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleSummary {
    pub rule: RuleKind,
    pub replications: usize,
    /// Replications where the rule selected a candidate.
    pub selected: usize,
    pub none_feasible: usize,
    /// Replications where the pipeline failed before selection.
    pub failed: usize,
    /// Mean objective over replications that selected.
    pub mean_objective: Option<f64>,
    /// Fraction of all replications with a truly feasible selection.
    pub feasibility_level: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub mean_objective: Option<f64>,
    pub feasibility_level: f64,
    pub failed: usize,
}

/// Aggregates that can be recomputed from the records CSV alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub replications: usize,
    pub rules: Vec<RuleSummary>,
    pub benchmark: BenchmarkSummary,
}

impl SummaryTable {
    pub fn rule(&self, rule: RuleKind) -> Option<&RuleSummary> {
        self.rules.iter().find(|r| r.rule == rule)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

fn summarize_rows(mut rows: Vec<Row>) -> Result<SummaryTable, HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    // rule order as first seen, aggregation in replication order
    let mut rules: Vec<RuleKind> = Vec::new();
    for r in &rows {
        if !rules.contains(&r.rule) {
            rules.push(r.rule);
        }
    }
    rows.sort_by_key(|r| (r.rep, rules.iter().position(|&k| k == r.rule)));
    let mut reps: Vec<u64> = rows.iter().map(|r| r.rep).collect();
    reps.dedup();
    for w in rows.windows(2) {
        if w[0].rep == w[1].rep && w[0].rule == w[1].rule {
            return Err(HarnessError::Parse {
                line: 0,
                message: format!("replication {} lists rule {} twice", w[0].rep, w[0].rule),
            });
        }
    }
    let total = reps.len();
    let rule_rows = |k: RuleKind| rows.iter().filter(move |r| r.rule == k);
    let rule_summaries = rules
        .iter()
        .map(|&k| {
            let count = rule_rows(k).count();
            if count != total {
                return Err(HarnessError::Parse {
                    line: 0,
                    message: format!("rule {k} appears in {count} of {total} replications"),
                });
            }
            Ok(RuleSummary {
                rule: k,
                replications: count,
                selected: rule_rows(k).filter(|r| r.objective.is_some()).count(),
                none_feasible: rule_rows(k).filter(|r| r.none_feasible).count(),
                failed: rule_rows(k)
                    .filter(|r| r.objective.is_none() && !r.none_feasible)
                    .count(),
                mean_objective: mean(rule_rows(k).filter_map(|r| r.objective)),
                feasibility_level: rule_rows(k).filter(|r| r.feasible).count() as f64
                    / count as f64,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    // benchmark values repeat on every row of a replication; take the first
    let firsts: Vec<&Row> = reps
        .iter()
        .map(|&rep| {
            rows.iter()
                .find(|r| r.rep == rep)
                .expect("rep came from rows")
        })
        .collect();
    let benchmark = BenchmarkSummary {
        mean_objective: mean(firsts.iter().filter_map(|r| r.benchmark_obj)),
        feasibility_level: firsts.iter().filter(|r| r.benchmark_feasible).count() as f64
            / total as f64,
        failed: firsts.iter().filter(|r| r.benchmark_obj.is_none()).count(),
    };
    Ok(SummaryTable {
        replications: total,
        rules: rule_summaries,
        benchmark,
    })
}

pub fn summarize(records: &[ReplicationRecord]) -> Result<SummaryTable, HarnessError> {
    summarize_rows(rows_of(records))
}

pub fn summarize_records_from<R: Read>(input: R) -> Result<SummaryTable, HarnessError> {
    summarize_rows(parse_rows(input)?)
}

/// Re-aggregate a records CSV written by a previous run.
pub fn summarize_records(path: &Path) -> Result<SummaryTable, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    summarize_records_from(file)
}
