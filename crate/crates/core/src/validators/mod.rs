//! Phase-two selection: evaluate the constraint indicator on held-out data,
//! estimate its mean and covariance across candidates, and pick the
//! cheapest candidate that clears a margin.

mod hmatrix;
mod quantile;
mod select;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mathkit::{MathError, RngStream};

pub use hmatrix::{evaluate_h_matrix, HMatrix};
pub use quantile::gaussian_sup_quantile;
pub use select::{select_candidate, CandidateReport, SelectedCandidate, ValidationReport};

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error("solution path has no optimal candidate")]
    EmptyPath,
    #[error("phase-two sample is empty")]
    EmptySample,
    #[error("dimension mismatch: path has {path}, samples have {samples}")]
    DimensionMismatch { path: usize, samples: usize },
    #[error("every candidate has zero sample variance; the normalized maximum is undefined")]
    AllDegenerate,
    #[error("invalid margin rule: {0}")]
    InvalidRule(String),
}

/// Default Monte Carlo budget for the supremum quantile.
pub const DEFAULT_MC_BUDGET: usize = 200_000;
/// Smallest budget accepted by the supremum rules.
pub const MIN_MC_BUDGET: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    UnnormalizedGs,
    NormalizedGs,
    Univariate,
    Plain,
}

impl RuleKind {
    pub const ALL: [RuleKind; 4] = [
        RuleKind::UnnormalizedGs,
        RuleKind::NormalizedGs,
        RuleKind::Univariate,
        RuleKind::Plain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::UnnormalizedGs => "unnormalized_gs",
            RuleKind::NormalizedGs => "normalized_gs",
            RuleKind::Univariate => "univariate",
            RuleKind::Plain => "plain",
        }
    }

    /// Uses a Gaussian margin (every rule but `Plain`).
    pub fn has_margin(self) -> bool {
        self != RuleKind::Plain
    }

    pub fn needs_monte_carlo(self) -> bool {
        matches!(self, RuleKind::UnnormalizedGs | RuleKind::NormalizedGs)
    }

    /// Fixed small id used to derive the rule's random stream.
    pub fn stream_id(self) -> u64 {
        match self {
            RuleKind::UnnormalizedGs => 1,
            RuleKind::NormalizedGs => 2,
            RuleKind::Univariate => 3,
            RuleKind::Plain => 4,
        }
    }
}

impl std::fmt::Display for RuleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RuleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "unnormalized_gs" | "unnorm_gs" | "unnormalized" => Ok(RuleKind::UnnormalizedGs),
            "normalized_gs" | "norm_gs" | "normalized" => Ok(RuleKind::NormalizedGs),
            "univariate" | "uni" => Ok(RuleKind::Univariate),
            "plain" => Ok(RuleKind::Plain),
            other => Err(format!(
                "unknown rule {other:?} (expected unnormalized_gs, normalized_gs, univariate or plain)"
            )),
        }
    }
}

/// A validator: rule, confidence `1−β`, Monte Carlo budget and random stream.
#[derive(Clone, Debug)]
pub struct MarginRule {
    kind: RuleKind,
    beta: f64,
    budget: usize,
    rng: RngStream,
}

impl MarginRule {
    pub fn new(
        kind: RuleKind,
        beta: f64,
        budget: usize,
        rng: RngStream,
    ) -> Result<Self, ValidationError> {
        if !(beta > 0.0 && beta < 0.5) {
            return Err(ValidationError::InvalidRule(format!(
                "beta must lie in (0, 0.5), got {beta}"
            )));
        }
        if kind.needs_monte_carlo() && budget < MIN_MC_BUDGET {
            return Err(ValidationError::InvalidRule(format!(
                "Monte Carlo budget {budget} below the minimum {MIN_MC_BUDGET}"
            )));
        }
        Ok(Self {
            kind,
            beta,
            budget,
            rng,
        })
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn rng(&self) -> &RngStream {
        &self.rng
    }
}
