//! Convex-roof minimization over ensembles parameterized by isometries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{average_entanglement, Reduced};
use crate::config::OptimizerConfig;
use crate::error::{Error, Result};
use crate::linalg::{c64, BipartiteDims, ComplexMatrix, DEFAULT_LOG_FLOOR};
use crate::manifold::{self, Objective, StopReason};
use crate::rng;
use crate::states::{
    default_ensemble_size, ensemble_from_support, reshape_matrix_vector, reshape_vector_matrix, DensityMatrix,
    Ensemble, IsometryParameter, SpectralSupport,
};

/// Average entanglement of the ensemble induced by an isometry `U`, as a
/// function of `U`.
///
/// Member `i` is column `i` of `Φ = W U†` where `W` holds `√λ_j e_j`, so the
/// gradient with respect to `Ū` follows from the per-member derivative
/// `−log₂(σ_i) φ_i` by the chain rule: `∇_U = 2 G† W`.
pub struct RoofObjective {
    dims: BipartiteDims,
    weighted: ComplexMatrix,
}

impl RoofObjective {
    pub fn new(rho: &DensityMatrix, support: &SpectralSupport) -> Self {
        RoofObjective {
            dims: rho.dims(),
            weighted: support.weighted_vectors(),
        }
    }

    fn members(&self, u: &ComplexMatrix) -> ComplexMatrix {
        &self.weighted * u.adjoint()
    }
}

impl Objective for RoofObjective {
    fn value(&self, u: &ComplexMatrix) -> f64 {
        let phi = self.members(u);
        phi.column_iter()
            .map(|col| {
                let red = Reduced::new(&reshape_vector_matrix(self.dims, &col.clone_owned()));
                red.norm_sq * red.entropy(DEFAULT_LOG_FLOOR)
            })
            .sum()
    }

    fn value_and_gradient(&self, u: &ComplexMatrix) -> (f64, ComplexMatrix) {
        let phi = self.members(u);
        let mut grads = ComplexMatrix::zeros(phi.nrows(), phi.ncols());
        let mut total = 0.0;
        for (i, col) in phi.column_iter().enumerate() {
            let m = reshape_vector_matrix(self.dims, &col.clone_owned());
            let red = Reduced::new(&m);
            if red.norm_sq == 0.0 {
                continue;
            }
            total += red.norm_sq * red.entropy(DEFAULT_LOG_FLOOR);
            grads.set_column(i, &reshape_matrix_vector(&red.gradient(&m, DEFAULT_LOG_FLOOR)));
        }
        (total, grads.adjoint() * &self.weighted * c64(2.0, 0.0))
    }
}

/// Best ensemble found by the convex-roof minimizer.
#[derive(Debug, Clone)]
pub struct EoFResult {
    /// Average entanglement of `ensemble`; an upper bound on `E_F(ρ)`.
    pub value: f64,
    pub ensemble: Ensemble,
    pub isometry: IsometryParameter,
    pub restarts: usize,
    pub best_restart: usize,
    pub restart_values: Vec<f64>,
    pub converged_gradient_norm: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub non_converged: bool,
    pub seed: u64,
}

/// Serializable summary of an [`EoFResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EoFSummary {
    pub value: f64,
    pub ensemble_size: usize,
    pub restarts: usize,
    pub best_restart: usize,
    pub restart_values: Vec<f64>,
    pub converged_gradient_norm: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub non_converged: bool,
    pub seed: u64,
}

impl EoFResult {
    pub fn summary(&self) -> EoFSummary {
        EoFSummary {
            value: self.value,
            ensemble_size: self.ensemble.len(),
            restarts: self.restarts,
            best_restart: self.best_restart,
            restart_values: self.restart_values.clone(),
            converged_gradient_norm: self.converged_gradient_norm,
            iterations: self.iterations,
            stop: self.stop,
            non_converged: self.non_converged,
            seed: self.seed,
        }
    }
}

/// Minimizes the average entanglement over ensembles of `rho`.
///
/// Runs `cfg.restarts` descents from Haar-random isometries; restart `i`
/// draws from stream `(seed, "eof-restart", i)`, so the result does not depend
/// on execution order. The lowest value wins, ties within `1e-12` going to the
/// lowest restart index.
pub fn eof_minimize(rho: &DensityMatrix, cfg: &OptimizerConfig) -> Result<EoFResult> {
    eof_minimize_from(rho, cfg, &[])
}

/// As [`eof_minimize`], with extra descents started from the given ensembles.
///
/// Warm starts are numbered after the random restarts and may use a different
/// ensemble size.
pub fn eof_minimize_from(rho: &DensityMatrix, cfg: &OptimizerConfig, warm: &[Ensemble]) -> Result<EoFResult> {
    let support = rho.support(DEFAULT_LOG_FLOOR);
    let rank = support.rank();
    if rank == 0 {
        return Err(Error::validation(
            "state has no support above the eigenvalue floor",
            0.0,
        ));
    }
    let k = cfg.ensemble_size.unwrap_or_else(|| default_ensemble_size(rank));
    if k < rank {
        return Err(Error::dimension(format!("ensemble size {k} is below the rank {rank}")));
    }
    if cfg.restarts == 0 && warm.is_empty() {
        return Err(Error::validation("at least one restart is required", 0.0));
    }
    let mut starts = Vec::with_capacity(cfg.restarts + warm.len());
    for i in 0..cfg.restarts {
        let mut g = rng::stream(cfg.seed, "eof-restart", i as u64);
        starts.push(IsometryParameter::random(k, rank, &mut g)?.into_matrix());
    }
    for ens in warm {
        starts.push(IsometryParameter::from_ensemble(&support, ens)?.into_matrix());
    }

    let objective = RoofObjective::new(rho, &support);
    let opts = cfg.descent_options();
    let runs: Vec<manifold::Descent> = starts
        .par_iter()
        .map(|u0| manifold::minimize(&objective, u0, &opts))
        .collect();

    let best = pick_lowest(runs.iter().map(|r| r.value));
    let run = &runs[best];
    let isometry = IsometryParameter::from_qr(&run.point)?;
    let ensemble = ensemble_from_support(rho, &support, &isometry)?;
    Ok(EoFResult {
        value: average_entanglement(&ensemble),
        ensemble,
        isometry,
        restarts: runs.len(),
        best_restart: best,
        restart_values: runs.iter().map(|r| r.value).collect(),
        converged_gradient_norm: run.grad_norm,
        iterations: run.iterations,
        stop: run.stop,
        non_converged: !run.converged(),
        seed: cfg.seed,
    })
}

/// Index of the smallest value; values within `1e-12` of the minimum tie to the lowest index.
pub(crate) fn pick_lowest(values: impl Iterator<Item = f64>) -> usize {
    let values: Vec<f64> = values.collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().position(|&v| v <= min + 1e-12).unwrap_or(0)
}
