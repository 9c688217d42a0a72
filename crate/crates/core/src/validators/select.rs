use serde::{Deserialize, Serialize};

use crate::mathkit::{mean_and_cov, std_normal_quantile};
use crate::reformulations::SolutionPath;

use super::{gaussian_sup_quantile, HMatrix, MarginRule, RuleKind, ValidationError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedCandidate {
    pub index: usize,
    pub s: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub s: f64,
    /// `None` for excluded candidates.
    pub h_mean: Option<f64>,
    pub sigma: Option<f64>,
    pub margin: Option<f64>,
    pub pass: bool,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rule: RuleKind,
    pub beta: f64,
    /// Supremum quantile (supremum rules only).
    pub q: Option<f64>,
    /// `None` means no candidate passed.
    pub selected: Option<SelectedCandidate>,
    pub candidates: Vec<CandidateReport>,
    pub excluded: usize,
}

impl ValidationReport {
    pub fn none_feasible(&self) -> bool {
        self.selected.is_none()
    }

    pub fn pass_set(&self) -> Vec<bool> {
        self.candidates.iter().map(|c| c.pass).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields serialize")
    }
}

/// Select the lowest-objective candidate whose held-out mean clears `γ` plus
/// the rule's margin; ties go to the smaller `s`, then the smaller index.
pub fn select_candidate(
    path: &SolutionPath,
    h: &HMatrix,
    gamma: f64,
    rule: &MarginRule,
) -> Result<ValidationReport, ValidationError> {
    if h.candidates() != path.len() {
        return Err(ValidationError::DimensionMismatch {
            path: path.len(),
            samples: h.candidates(),
        });
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(ValidationError::InvalidRule(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    let active = h.active_indices();
    let (means, cov) = mean_and_cov(&h.observations())?;
    let sigmas: Vec<f64> = (0..active.len())
        .map(|k| cov[(k, k)].max(0.0).sqrt())
        .collect();
    let root_n2 = (h.samples() as f64).sqrt();
    let z = std_normal_quantile(1.0 - rule.beta())?;
    let mut rng = rule.rng().clone();

    let q = match rule.kind() {
        RuleKind::UnnormalizedGs => Some(gaussian_sup_quantile(
            &cov,
            &sigmas,
            rule.beta(),
            rule.budget(),
            &mut rng,
            false,
        )?),
        RuleKind::NormalizedGs => {
            match gaussian_sup_quantile(&cov, &sigmas, rule.beta(), rule.budget(), &mut rng, true) {
                Ok(q) => Some(q),
                // every margin is q·0 = 0 then, whatever q is
                Err(ValidationError::AllDegenerate) => Some(z),
                Err(e) => return Err(e),
            }
        }
        RuleKind::Univariate | RuleKind::Plain => None,
    };
    let margin = |sigma: f64| -> f64 {
        match rule.kind() {
            RuleKind::UnnormalizedGs => q.expect("set above") / root_n2,
            RuleKind::NormalizedGs => q.expect("set above") * sigma / root_n2,
            RuleKind::Univariate => z * sigma / root_n2,
            RuleKind::Plain => 0.0,
        }
    };

    let mut candidates = Vec::with_capacity(path.len());
    let mut best: Option<usize> = None;
    let mut k = 0;
    for (j, cand) in path.candidates.iter().enumerate() {
        if !h.is_active(j) {
            candidates.push(CandidateReport {
                s: cand.s,
                h_mean: None,
                sigma: None,
                margin: None,
                pass: false,
                status: cand.status.label(),
            });
            continue;
        }
        let (mean, sigma) = (means[k], sigmas[k]);
        k += 1;
        let m = margin(sigma);
        let pass = mean >= gamma + m;
        candidates.push(CandidateReport {
            s: cand.s,
            h_mean: Some(mean),
            sigma: Some(sigma),
            margin: Some(m),
            pass,
            status: cand.status.label(),
        });
        if pass {
            let better = best.is_none_or(|b| {
                let cb = &path.candidates[b];
                cand.objective
                    .total_cmp(&cb.objective)
                    .then(cand.s.total_cmp(&cb.s))
                    .then(j.cmp(&b))
                    .is_lt()
            });
            if better {
                best = Some(j);
            }
        }
    }
    let selected = best.map(|j| SelectedCandidate {
        index: j,
        s: path.candidates[j].s,
        objective: path.candidates[j].objective,
    });
    Ok(ValidationReport {
        rule: rule.kind(),
        beta: rule.beta(),
        q,
        selected,
        candidates,
        excluded: path.len() - active.len(),
    })
}
