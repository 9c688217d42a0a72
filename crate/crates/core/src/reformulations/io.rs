//! Candidate path CSV: `s,status,objective,x_1..x_d`.

use std::fs::File;
use std::path::Path;

use crate::instances::InstanceError;

use super::{Candidate, CandidateStatus, ReformulationError, SolutionPath};

pub fn write_path_csv(path: &Path, sol: &SolutionPath) -> Result<(), ReformulationError> {
    let io_err = |e: std::io::Error| InstanceError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let file = File::create(path).map_err(io_err)?;
    write_path(file, sol).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(e) => ReformulationError::Instance(io_err(e)),
        other => ReformulationError::PathFile {
            line: 0,
            message: format!("{other:?}"),
        },
    })
}

fn write_path<W: std::io::Write>(out: W, sol: &SolutionPath) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["s".to_string(), "status".into(), "objective".into()];
    header.extend((1..=sol.dim()).map(|k| format!("x_{k}")));
    w.write_record(&header)?;
    for cand in &sol.candidates {
        let mut rec = vec![
            cand.s.to_string(),
            cand.status.label(),
            cand.objective.to_string(),
        ];
        rec.extend(cand.x.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path_csv(path: &Path) -> Result<SolutionPath, ReformulationError> {
    let file = File::open(path).map_err(|e| InstanceError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_path_csv(file)
}

/// Parses a path file; rows may come in any order and are sorted by `s`.
pub fn parse_path_csv<R: std::io::Read>(input: R) -> Result<SolutionPath, ReformulationError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let bad = |line: u64, message: String| ReformulationError::PathFile { line, message };
    let header = reader.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < 4 || names[..3] != ["s", "status", "objective"] {
        return Err(bad(
            1,
            "header must start with s,status,objective followed by x columns".into(),
        ));
    }
    let d = names.len() - 3;
    let mut candidates = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != d + 3 {
            return Err(bad(
                line,
                format!("expected {} fields, found {}", d + 3, rec.len()),
            ));
        }
        let status = CandidateStatus::parse(&rec[1])
            .ok_or_else(|| bad(line, format!("unknown status {:?}", &rec[1])))?;
        // excluded rows may leave objective and decision cells empty
        let num = |k: usize| -> Result<f64, ReformulationError> {
            if rec[k].is_empty() && k > 0 && !status.is_optimal() {
                return Ok(f64::NAN);
            }
            rec[k].parse::<f64>().map_err(|_| {
                bad(
                    line,
                    format!("column {}: cannot parse {:?}", k + 1, &rec[k]),
                )
            })
        };
        let s = num(0)?;
        let x = (3..d + 3).map(num).collect::<Result<Vec<_>, _>>()?;
        if status.is_optimal() && !x.iter().all(|v| v.is_finite()) {
            return Err(bad(
                line,
                "optimal candidate with non-finite decision".into(),
            ));
        }
        candidates.push(Candidate {
            s,
            objective: num(2)?,
            x,
            status,
            at_bound: false,
        });
    }
    if candidates.is_empty() {
        return Err(bad(1, "no candidates".into()));
    }
    candidates.sort_by(|a, b| a.s.total_cmp(&b.s));
    SolutionPath::new(None, candidates, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cands = vec![
            Candidate {
                s: 0.5,
                x: vec![0.1, -1.0 / 3.0],
                status: CandidateStatus::Optimal,
                objective: -0.25,
                at_bound: false,
            },
            Candidate::excluded(1.5, 2, "unbounded"),
        ];
        let sol = SolutionPath::new(None, cands, None).unwrap();
        let mut buf = Vec::new();
        write_path(&mut buf, &sol).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,status,objective,x_1,x_2\n"));
        let back = parse_path_csv(text.as_bytes()).unwrap();
        assert_eq!(back.candidates[0], sol.candidates[0]);
        assert_eq!(
            back.candidates[1].status,
            CandidateStatus::Excluded("unbounded".into())
        );
        assert!(back.candidates[1].x[0].is_nan());
    }

    #[test]
    fn rejects_bad_rows() {
        let dup = "s,status,objective,x_1\n1,optimal,0,0\n1,optimal,0,0\n";
        assert!(matches!(
            parse_path_csv(dup.as_bytes()),
            Err(ReformulationError::InvalidGrid(_))
        ));
        let short = "s,status,objective,x_1\n1,optimal,0\n";
        assert!(matches!(
            parse_path_csv(short.as_bytes()),
            Err(ReformulationError::PathFile { line: 2, .. })
        ));
        let status = "s,status,objective,x_1\n1,great,0,1\n";
        assert!(parse_path_csv(status.as_bytes()).is_err());
        assert!(parse_path_csv("s,status,objective,x_1\n".as_bytes()).is_err());
        let empty_optimal = "s,status,objective,x_1\n1,optimal,,1\n";
        assert!(parse_path_csv(empty_optimal.as_bytes()).is_err());
    }

    #[test]
    fn excluded_rows_may_be_blank() {
        let text = "s,status,objective,x_1,x_2\n2,excluded:unbounded,,,\n1,optimal,-1,1,0\n";
        let sol = parse_path_csv(text.as_bytes()).unwrap();
        assert_eq!(sol.candidates[0].s, 1.0);
        assert!(sol.candidates[1].objective.is_nan());
        assert!(!sol.candidates[1].status.is_optimal());
    }
}
