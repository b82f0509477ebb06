//! Experiment configuration, read from a flat JSON object.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{calibrate_intercept, LogisticScenario, CALIBRATION_TOL};
use crate::error::{invalid_config, Result};
use crate::forest::DEFAULT_TREES;
use crate::rebalance::RebalanceMode;

/// Which estimator a replicate evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Forest on the original data.
    Icrf,
    /// Forest on rebalanced data; targets `mu'(x)`.
    RbIcrf,
    /// Rebalanced forest mapped back through the importance-sampling correction.
    IsIcrf,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Icrf => "icrf",
            Estimator::RbIcrf => "rb_icrf",
            Estimator::IsIcrf => "is_icrf",
        }
    }

    pub fn is_rebalanced(self) -> bool {
        !matches!(self, Estimator::Icrf)
    }
}

/// Logistic scenario: coefficients plus either a fixed intercept or a target
/// class probability to calibrate it from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_p: Option<f64>,
}

impl ScenarioSpec {
    /// The imbalanced two-dimensional scenario, `beta = (3, 2)`, `P(Y=1) = 0.1`.
    pub fn imbalanced() -> Self {
        Self { beta: vec![3.0, 2.0], beta0: None, target_p: Some(0.1) }
    }

    pub fn resolve(&self) -> Result<LogisticScenario> {
        let beta0 = match (self.beta0, self.target_p) {
            (Some(b0), None) => b0,
            (None, Some(p)) => calibrate_intercept(p, &self.beta, CALIBRATION_TOL)?,
            _ => return Err(invalid_config("scenario needs exactly one of `beta0` and `target_p`")),
        };
        LogisticScenario::new(beta0, self.beta.clone())
    }
}

/// How the rebalanced forest's depth relates to the plain forest's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RbDepthRule {
    /// Use the plain forest's depth `k` unchanged.
    Same,
    /// Pick the depth so that the expected number of training rows per leaf
    /// matches the plain forest: `2^{k'} / s' = 2^k / s`.
    #[default]
    MatchedOccupancy,
}

fn default_p_prime() -> f64 {
    0.5
}

fn default_trees() -> usize {
    DEFAULT_TREES
}

fn default_bins() -> usize {
    30
}

/// A Monte Carlo experiment: estimator, scenario, sample-size grid and
/// forest growth exponents (`s = n^alpha`, `k = beta log2 n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub estimator: Estimator,
    pub n_grid: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_p_prime")]
    pub p_prime: f64,
    #[serde(default = "default_trees")]
    pub b_trees: usize,
    pub replicates: usize,
    pub query_point: Vec<f64>,
    pub seed: u64,
    #[serde(default)]
    pub rebalance_mode: RebalanceMode,
    /// Rebalanced sample size in dataset mode; defaults to the minority count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_prime: Option<usize>,
    #[serde(default)]
    pub rb_depth: RbDepthRule,
    #[serde(default = "default_bins")]
    pub hist_bins: usize,
}

impl ExperimentConfig {
    /// Defaults of the imbalanced experiments: `d = 2`, `x = (0.7, 0.7)`,
    /// 500 trees, `p' = 0.5`.
    pub fn imbalanced(estimator: Estimator, n_grid: Vec<usize>, alpha: f64, beta: f64, replicates: usize, seed: u64) -> Self {
        Self {
            scenario: ScenarioSpec::imbalanced(),
            estimator,
            n_grid,
            alpha,
            beta,
            p_prime: default_p_prime(),
            b_trees: DEFAULT_TREES,
            replicates,
            query_point: vec![0.7, 0.7],
            seed,
            rebalance_mode: RebalanceMode::default(),
            n_prime: None,
            rb_depth: RbDepthRule::default(),
            hist_bins: default_bins(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(invalid_config("n_grid is empty"));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid_config("n_grid must be positive and strictly increasing"));
        }
        if self.replicates < 2 {
            return Err(invalid_config("need at least two replicates"));
        }
        if self.b_trees == 0 {
            return Err(invalid_config("b_trees must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) || !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(invalid_config("alpha and beta must lie in (0, 1]"));
        }
        if !(self.p_prime > 0.0 && self.p_prime < 1.0) {
            return Err(invalid_config("p_prime must lie in (0, 1)"));
        }
        if self.query_point.len() != self.scenario.beta.len() {
            return Err(invalid_config("query_point dimension differs from the scenario's"));
        }
        if self.query_point.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid_config("query_point must lie in [0,1]^d"));
        }
        if self.n_prime == Some(0) {
            return Err(invalid_config("n_prime must be positive"));
        }
        if self.hist_bins < 2 {
            return Err(invalid_config("hist_bins must be at least 2"));
        }
        Ok(())
    }
}
