//! Variational EM for the power-law-degree block model.

mod ascent;
mod estep;
mod fit;
mod mstep;
mod objective;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{LabeledAssignment, ModelParams, VariationalState};

pub use ascent::{projected_ascent, MAX_HALVINGS};
pub use estep::{e_step_delta, e_step_phi, membership_log_weights};
pub use fit::{fit, predict};
pub use mstep::{m_step_b, m_step_pi};
pub use objective::{elbo, elbo_with_form, grad_b, grad_delta, linked_pair_term, unlinked_pair_term, NonEdgeForm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("invalid fit config: {field} {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("K = {k} exceeds the number of nodes ({n_nodes})")]
    TooManyClusters { k: usize, n_nodes: usize },
    #[error("cannot fit a graph with no nodes")]
    EmptyGraph,
    #[error("objective became non-finite at iteration {iteration} (restart {restart})")]
    NonFinite { iteration: usize, restart: usize },
}

fn default_max_iters() -> usize {
    500
}
fn default_restarts() -> usize {
    5
}
fn default_step() -> f64 {
    0.1
}
fn default_inner_iters() -> usize {
    20
}
fn default_lambda() -> f64 {
    0.01
}

/// Optimizer settings. `epsilon = None` means `1e-6 * N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_step")]
    pub step_delta: f64,
    #[serde(default = "default_step")]
    pub step_b: f64,
    #[serde(default = "default_inner_iters")]
    pub inner_iters: usize,
    /// Fix every decay at zero: a classic variational block model.
    #[serde(default)]
    pub sbm_baseline: bool,
    /// Use `log(1 - b)` for unlinked pairs instead of `-b`. Baseline only.
    #[serde(default)]
    pub exact_nonedge_log: bool,
    /// Estimate each node's unlinked sums from this many sampled non-neighbors.
    #[serde(default)]
    pub nonedge_sample: Option<usize>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub seed: u64,
}

impl FitConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            epsilon: None,
            max_iters: default_max_iters(),
            restarts: default_restarts(),
            step_delta: default_step(),
            step_b: default_step(),
            inner_iters: default_inner_iters(),
            sbm_baseline: false,
            exact_nonedge_log: false,
            nonedge_sample: None,
            lambda: default_lambda(),
            seed: 0,
        }
    }

    pub fn baseline(mut self) -> Self {
        self.sbm_baseline = true;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn epsilon_for(&self, n_nodes: usize) -> f64 {
        self.epsilon.unwrap_or(1e-6 * n_nodes as f64)
    }

    pub fn nonedge_form(&self) -> NonEdgeForm {
        if self.sbm_baseline && self.exact_nonedge_log {
            NonEdgeForm::ExactLog
        } else {
            NonEdgeForm::Taylor
        }
    }

    pub fn validate(&self, n_nodes: usize) -> Result<(), FitError> {
        let invalid = |field, reason: &str| {
            Err(FitError::InvalidConfig {
                field,
                reason: reason.to_string(),
            })
        };
        if self.k == 0 {
            return invalid("K", "must be at least 1");
        }
        if let Some(eps) = self.epsilon {
            if eps.is_nan() || eps <= 0.0 {
                return invalid("epsilon", "must be positive");
            }
        }
        if self.max_iters == 0 {
            return invalid("max_iters", "must be at least 1");
        }
        if self.restarts == 0 {
            return invalid("restarts", "must be at least 1");
        }
        if self.inner_iters == 0 {
            return invalid("inner_iters", "must be at least 1");
        }
        if [self.step_delta, self.step_b].iter().any(|s| s.is_nan() || *s <= 0.0) {
            return invalid("step_delta/step_b", "must be positive");
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 || !self.lambda.is_finite() {
            return invalid("lambda", "must be positive and finite");
        }
        if self.exact_nonedge_log && !self.sbm_baseline {
            return invalid("exact_nonedge_log", "requires sbm_baseline");
        }
        if self.nonedge_sample == Some(0) {
            return invalid("nonedge_sample", "must be at least 1");
        }
        if n_nodes == 0 {
            return Err(FitError::EmptyGraph);
        }
        if self.k > n_nodes {
            return Err(FitError::TooManyClusters { k: self.k, n_nodes });
        }
        Ok(())
    }
}

/// Outcome of the best restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub state: VariationalState,
    pub z_star: LabeledAssignment,
    /// Objective after each completed iteration.
    pub elbo_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Index of the restart that produced this result.
    pub restart: usize,
}

impl FitResult {
    pub fn final_elbo(&self) -> f64 {
        self.elbo_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_from_json() {
        let cfg: FitConfig = serde_json::from_str(r#"{"K": 3}"#).unwrap();
        assert_eq!(cfg, FitConfig::new(3));
        assert_eq!(cfg.epsilon_for(2000), 2e-3);
        let cfg: FitConfig = serde_json::from_str(r#"{"k": 2, "restarts": 1, "sbm_baseline": true}"#).unwrap();
        assert_eq!(cfg.restarts, 1);
        assert!(serde_json::from_str::<FitConfig>(r#"{"K": 2, "bogus": 1}"#).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig::new(2).validate(5).is_ok());
        assert_eq!(
            FitConfig::new(6).validate(5),
            Err(FitError::TooManyClusters { k: 6, n_nodes: 5 })
        );
        assert_eq!(FitConfig::new(1).validate(0), Err(FitError::EmptyGraph));
        let mut cfg = FitConfig::new(2);
        cfg.epsilon = Some(0.0);
        assert!(matches!(
            cfg.validate(5),
            Err(FitError::InvalidConfig { field: "epsilon", .. })
        ));
        let mut cfg = FitConfig::new(2);
        cfg.restarts = 0;
        assert!(matches!(
            cfg.validate(5),
            Err(FitError::InvalidConfig { field: "restarts", .. })
        ));
        let mut cfg = FitConfig::new(2);
        cfg.exact_nonedge_log = true;
        assert!(cfg.validate(5).is_err());
        assert!(cfg.baseline().validate(5).is_ok());
    }
}
