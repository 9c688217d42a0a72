use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::instances::{generate_canonical_instance, read_instance, GaussianLinearCcp};
use crate::reformulations::{GridSpec, Method};
use crate::validators::{RuleKind, DEFAULT_MC_BUDGET, MIN_MC_BUDGET};

use super::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InstanceSource {
    Canonical { d: usize, seed: u64 },
    File { path: PathBuf },
}

impl Default for InstanceSource {
    fn default() -> Self {
        InstanceSource::Canonical { d: 10, seed: 1 }
    }
}

/// Experiment description, read from TOML. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    pub method: Method,
    /// Grid parameters; method defaults when absent.
    pub grid: Option<GridSpec>,
    pub n: usize,
    /// Phase-one size; `n - n2` or half of `n` when absent.
    pub n1: Option<usize>,
    /// Phase-two size; `n - n1` or half of `n` when absent.
    pub n2: Option<usize>,
    /// Overrides the instance's `α`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub validators: Vec<RuleKind>,
    pub replications: usize,
    pub seed: u64,
    pub mc_budget: usize,
    /// Worker threads; does not affect any output.
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            instance: InstanceSource::default(),
            method: Method::Ro,
            grid: None,
            n: 200,
            n1: None,
            n2: None,
            alpha: None,
            beta: 0.05,
            validators: RuleKind::ALL.to_vec(),
            replications: 100,
            seed: 1,
            mc_budget: DEFAULT_MC_BUDGET,
            threads: None,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.grid
            .clone()
            .unwrap_or_else(|| GridSpec::for_method(self.method))
    }

    /// `(n1, n2)` after defaults.
    pub fn split(&self) -> (usize, usize) {
        match (self.n1, self.n2) {
            (Some(a), Some(b)) => (a, b),
            (Some(a), None) => (a, self.n.saturating_sub(a)),
            (None, Some(b)) => (self.n.saturating_sub(b), b),
            (None, None) => (self.n - self.n / 2, self.n / 2),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let (n1, n2) = self.split();
        if n1 == 0 || n2 == 0 || n1 + n2 != self.n {
            return bad(format!(
                "split n1={n1}, n2={n2} must be positive and sum to n={}",
                self.n
            ));
        }
        if self.method != Method::So && n1.abs_diff(n2) > 1 {
            return bad(format!(
                "unequal split n1={n1}, n2={n2} is only allowed for the scenario method"
            ));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return bad(format!("beta must lie in (0, 0.5), got {}", self.beta));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 0.5) {
                return bad(format!("alpha must lie in (0, 0.5), got {a}"));
            }
        }
        if self.validators.is_empty() {
            return bad("at least one validator is required".into());
        }
        for (i, r) in self.validators.iter().enumerate() {
            if self.validators[..i].contains(r) {
                return bad(format!("validator {r} listed twice"));
            }
        }
        if self.validators.iter().any(|r| r.needs_monte_carlo()) && self.mc_budget < MIN_MC_BUDGET {
            return bad(format!("mc_budget must be at least {MIN_MC_BUDGET}"));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        let grid = self.grid_spec();
        if grid.points == 0 || (self.method == Method::Fast && grid.points < 2) {
            return bad(format!(
                "grid size {} too small for {}",
                grid.points, self.method
            ));
        }
        if !(grid.so_box > 0.0) {
            return bad("so_box must be positive".into());
        }
        if let InstanceSource::Canonical { d, .. } = self.instance {
            if d == 0 {
                return bad("instance dimension must be positive".into());
            }
        }
        Ok(())
    }

    pub fn load_instance(&self) -> Result<GaussianLinearCcp, HarnessError> {
        let inst = match &self.instance {
            InstanceSource::Canonical { d, seed } => generate_canonical_instance(*d, *seed),
            InstanceSource::File { path } => read_instance(path),
        }
        .map_err(|e| HarnessError::Config(e.to_string()))?;
        match self.alpha {
            Some(a) => inst
                .with_alpha(a)
                .map_err(|e| HarnessError::Config(e.to_string())),
            None => Ok(inst),
        }
    }

    /// SHA-256 over every field that influences results (threads and the
    /// output directory are left out).
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.threads = None;
        canon.out_dir = None;
        canon.grid = Some(self.grid_spec());
        let (n1, n2) = self.split();
        canon.n1 = Some(n1);
        canon.n2 = Some(n2);
        let text = serde_json::to_string(&canon).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
method = "so"
n = 200
n1 = 150
replications = 3
validators = ["univariate", "plain"]

[instance]
kind = "canonical"
d = 4
seed = 9
"#,
        )
        .unwrap();
        assert_eq!(cfg.split(), (150, 50));
        assert_eq!(cfg.method, Method::So);
        cfg.validate().unwrap();
        assert_eq!(cfg.grid_spec(), GridSpec::for_method(Method::So));
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ExperimentConfig::from_toml_str("colour = 3").is_err());
        assert!(ExperimentConfig::from_toml_str(
            "[instance]\nkind = \"canonical\"\nd = 2\nseed = 1\nextra = 1"
        )
        .is_err());
        let mut cfg = ExperimentConfig::default();
        assert_eq!(cfg.split(), (100, 100));
        cfg.n1 = Some(150);
        assert!(cfg.validate().is_err());
        cfg.n1 = None;
        cfg.replications = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_ignores_threads() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.threads = Some(8);
        b.out_dir = Some("x".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }
}
