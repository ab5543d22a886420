use serde::{Deserialize, Serialize};

use crate::manifold::DescentOptions;

/// Settings shared by every multi-start optimizer in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Ensemble cardinality; `None` means `min(r², 16)` for a rank-`r` state.
    pub ensemble_size: Option<usize>,
    pub seed: u64,
    /// Use central-difference gradients instead of the analytic ones.
    pub finite_difference: bool,
    /// Largest total dimension accepted by composite-system checks.
    pub composite_cap: usize,
    /// Largest dimension accepted by the nested biconjugate maximization.
    pub biconjugate_cap: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 16,
            max_iters: 2000,
            grad_tol: 1e-7,
            ensemble_size: None,
            seed: 0,
            finite_difference: false,
            composite_cap: 16,
            biconjugate_cap: 4,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub(crate) fn descent_options(&self) -> DescentOptions {
        DescentOptions {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            finite_difference: self.finite_difference.then_some(1e-6),
            ..DescentOptions::default()
        }
    }
}
