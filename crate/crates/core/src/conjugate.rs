//! The conjugate function `E*(H) = max_ψ ⟨ψ|H|ψ⟩ − E(ψ)` and the machinery
//! around it: optimal vectors, their stationarity equation, weak duality and
//! the biconjugate `max_H Tr(ρH) − E*(H)`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::OptimizerConfig;
use crate::entanglement::{pick_lowest, Reduced};
use crate::error::{Error, Result};
use crate::linalg::{c64, BipartiteDims, ComplexMatrix, ComplexVector, DEFAULT_LOG_FLOOR};
use crate::manifold::{self, Objective, StopReason};
use crate::rng;
use crate::states::{
    haar_pure_with, reshape_matrix_vector, reshape_vector_matrix, DensityMatrix, HermitianObservable, PureState,
};

/// `f(ψ) = ⟨ψ|H|ψ⟩ − E(ψ)`, whose maximum over unit vectors is `E*(H)`.
#[derive(Debug, Clone)]
pub struct DualObjective {
    pub observable: HermitianObservable,
    pub dims: BipartiteDims,
}

impl DualObjective {
    pub fn new(observable: HermitianObservable) -> Self {
        let dims = observable.dims();
        DualObjective { observable, dims }
    }
}

/// `⟨ψ|H|ψ⟩ − E(ψ)`.
pub fn dual_objective_value(obj: &DualObjective, psi: &PureState) -> f64 {
    let red = Reduced::new(&psi.matrix_view());
    obj.observable.expectation(psi.amplitudes()) - red.entropy(DEFAULT_LOG_FLOOR)
}

/// `∂E/∂ψ̄ = −log₂(ψψ†) ψ`, flattened back to a vector. The log is restricted
/// to the support of the reduced state.
pub fn entanglement_gradient(psi: &PureState) -> ComplexVector {
    let m = psi.matrix_view();
    reshape_matrix_vector(&Reduced::new(&m).gradient(&m, DEFAULT_LOG_FLOOR))
}

/// `log₂(ψψ†) ψ` in vector form.
fn log_term(psi: &PureState) -> ComplexVector {
    -entanglement_gradient(psi)
}

/// Minimizes `−f` on the sphere; points are `d × 1` matrices.
struct NegatedDual<'a> {
    h: &'a ComplexMatrix,
    dims: BipartiteDims,
}

impl Objective for NegatedDual<'_> {
    fn value(&self, x: &ComplexMatrix) -> f64 {
        let v = x.column(0).clone_owned();
        let red = Reduced::new(&reshape_vector_matrix(self.dims, &v));
        -(v.dotc(&(self.h * &v)).re - red.norm_sq * red.entropy(DEFAULT_LOG_FLOOR))
    }

    fn value_and_gradient(&self, x: &ComplexMatrix) -> (f64, ComplexMatrix) {
        let v = x.column(0).clone_owned();
        let m = reshape_vector_matrix(self.dims, &v);
        let red = Reduced::new(&m);
        let hv = self.h * &v;
        let value = -(v.dotc(&hv).re - red.norm_sq * red.entropy(DEFAULT_LOG_FLOOR));
        let e_grad = reshape_matrix_vector(&red.gradient(&m, DEFAULT_LOG_FLOOR));
        let grad = (hv - e_grad) * c64(-2.0, 0.0);
        (value, ComplexMatrix::from_column_slice(grad.len(), 1, grad.as_slice()))
    }
}

/// Best vector found for `E*(H)` with its optimality diagnostics.
#[derive(Debug, Clone)]
pub struct ConjugateResult {
    /// `f(ψ̃)`; a lower bound on `E*(H)`.
    pub value: f64,
    pub optimizer: PureState,
    /// `‖Hψ̃ + log₂(ψ̃ψ̃†)ψ̃ − value·ψ̃‖`.
    pub stationarity_residual: f64,
    /// `⟨ψ̃|Hψ̃ + log₂(ψ̃ψ̃†)ψ̃⟩`.
    pub multiplier: f64,
    pub restarts: usize,
    pub best_restart: usize,
    pub restart_values: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub non_converged: bool,
    pub seed: u64,
}

/// Serializable summary of a [`ConjugateResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConjugateSummary {
    pub value: f64,
    pub stationarity_residual: f64,
    pub multiplier: f64,
    pub restarts: usize,
    pub best_restart: usize,
    pub restart_values: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub non_converged: bool,
    pub seed: u64,
}

impl ConjugateResult {
    pub fn summary(&self) -> ConjugateSummary {
        ConjugateSummary {
            value: self.value,
            stationarity_residual: self.stationarity_residual,
            multiplier: self.multiplier,
            restarts: self.restarts,
            best_restart: self.best_restart,
            restart_values: self.restart_values.clone(),
            grad_norm: self.grad_norm,
            iterations: self.iterations,
            stop: self.stop,
            non_converged: self.non_converged,
            seed: self.seed,
        }
    }
}

/// Maximizes `f` over unit vectors from `cfg.restarts` Haar-random starts plus
/// the top eigenvector of `H`.
pub fn conjugate_value(h: &HermitianObservable, cfg: &OptimizerConfig) -> Result<ConjugateResult> {
    conjugate_value_from(h, cfg, &[])
}

/// As [`conjugate_value`], with extra ascents started from the given vectors.
///
/// Restart `i < cfg.restarts` draws from stream `(seed, "conjugate-restart", i)`;
/// the eigenvector start comes next, then the warm starts in order.
pub fn conjugate_value_from(
    h: &HermitianObservable,
    cfg: &OptimizerConfig,
    warm: &[PureState],
) -> Result<ConjugateResult> {
    let dims = h.dims();
    let d = dims.total();
    let mut starts: Vec<ComplexVector> = (0..cfg.restarts)
        .map(|i| haar_pure_with(dims, &mut rng::stream(cfg.seed, "conjugate-restart", i as u64)).into_amplitudes())
        .collect();
    let eig = crate::linalg::hermitian_eig(h.matrix())?;
    starts.push(eig.vectors.column(0).clone_owned());
    for psi in warm {
        if psi.dims() != dims {
            return Err(Error::dimension("warm start dims differ from the observable"));
        }
        starts.push(psi.amplitudes().clone());
    }

    let objective = NegatedDual { h: h.matrix(), dims };
    let opts = cfg.descent_options();
    let runs: Vec<manifold::Descent> = starts
        .par_iter()
        .map(|v| manifold::minimize(&objective, &ComplexMatrix::from_column_slice(d, 1, v.as_slice()), &opts))
        .collect();

    let best = pick_lowest(runs.iter().map(|r| r.value));
    let run = &runs[best];
    let optimizer = PureState::normalized(dims, run.point.column(0).clone_owned())?;
    let value = dual_objective_value(&DualObjective::new(h.clone()), &optimizer);
    Ok(ConjugateResult {
        value,
        stationarity_residual: stationarity_residual(&optimizer, h, value),
        multiplier: multiplier(&optimizer, h),
        optimizer,
        restarts: runs.len(),
        best_restart: best,
        restart_values: runs.iter().map(|r| -r.value).collect(),
        grad_norm: run.grad_norm,
        iterations: run.iterations,
        stop: run.stop,
        non_converged: !run.converged(),
        seed: cfg.seed,
    })
}

/// `‖Hψ + log₂(ψψ†)ψ − estar·ψ‖₂`.
pub fn stationarity_residual(psi: &PureState, h: &HermitianObservable, estar: f64) -> f64 {
    let v = psi.amplitudes();
    (h.matrix() * v + log_term(psi) - v * c64(estar, 0.0)).norm()
}

/// The Lagrange multiplier `C = ⟨ψ|Hψ + log₂(ψψ†)ψ⟩` of the normalization constraint.
pub fn multiplier(psi: &PureState, h: &HermitianObservable) -> f64 {
    let v = psi.amplitudes();
    v.dotc(&(h.matrix() * v + log_term(psi))).re
}

/// `|Tr[ψ_α ψ_β† (log₂(ψ_αψ_α†) − log₂(ψ_βψ_β†))]|` in matrix form.
pub fn pairwise_hermiticity_residual(a: &PureState, b: &PureState) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::dimension("pairwise residual needs equal dims"));
    }
    let (ma, mb) = (a.matrix_view(), b.matrix_view());
    let la = full_log(&ma);
    let lb = full_log(&mb);
    Ok((&ma * mb.adjoint() * (la - lb)).trace().norm())
}

/// `log₂(MM†)` on the A side, support-restricted.
fn full_log(m: &ComplexMatrix) -> ComplexMatrix {
    let r = m * m.adjoint();
    crate::linalg::eig_unchecked(crate::linalg::symmetrize(&r)).map_values(|x| {
        if x > DEFAULT_LOG_FLOOR {
            x.log2()
        } else {
            0.0
        }
    })
}

/// Weak-duality bound `Tr(ρH) − E*(H) ≤ E_F(ρ)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DualityBound {
    pub bound: f64,
    pub trace_term: f64,
    pub conjugate: ConjugateSummary,
}

pub fn duality_lower_bound(
    rho: &DensityMatrix,
    h: &HermitianObservable,
    cfg: &OptimizerConfig,
) -> Result<DualityBound> {
    if rho.dims() != h.dims() {
        return Err(Error::dimension("state and observable dims differ"));
    }
    let conj = conjugate_value(h, cfg)?;
    let trace_term = h.trace_with(rho.matrix());
    Ok(DualityBound {
        bound: trace_term - conj.value,
        trace_term,
        conjugate: conj.summary(),
    })
}

/// Outcome of the nested maximization `max_H Tr(ρH) − E*(H)`.
#[derive(Debug, Clone)]
pub struct BiconjugateResult {
    /// Best lower bound on `E_F(ρ)`.
    pub value: f64,
    pub observable: HermitianObservable,
    pub outer_iterations: usize,
    pub evaluations: usize,
    /// Norm of the last ascent direction.
    pub direction_norm: f64,
    pub seed: u64,
}

const BUNDLE_CAP: usize = 60;
const MAX_OUTER: usize = 300;
const MAX_EVALUATIONS: usize = 800;
/// Below this the inner optimizer cannot separate near-optimal vectors reliably.
const EPS_FLOOR: f64 = 1e-7;

struct Bundle<'a> {
    rho: &'a DensityMatrix,
    cfg: OptimizerConfig,
    vectors: Vec<PureState>,
    evaluations: usize,
}

impl Bundle<'_> {
    /// `(Tr(ρH) − E*(H), E*(H))`, warm-started from the vectors best for `H`.
    ///
    /// When the bundle is full, the vector furthest from optimal for `center` is dropped.
    fn evaluate(
        &mut self,
        h: &HermitianObservable,
        center: &HermitianObservable,
        restarts: usize,
    ) -> Result<(f64, f64)> {
        let obj = DualObjective::new(h.clone());
        let mut scored: Vec<(f64, &PureState)> = self
            .vectors
            .iter()
            .map(|v| (dual_objective_value(&obj, v), v))
            .collect();
        scored.sort_by(|x, y| y.0.total_cmp(&x.0));
        let warm: Vec<PureState> = scored.iter().take(6).map(|(_, v)| (*v).clone()).collect();
        let cfg = OptimizerConfig {
            restarts,
            seed: rng::derive_seed(self.cfg.seed, "biconjugate-inner", self.evaluations as u64),
            ..self.cfg.clone()
        };
        self.evaluations += 1;
        let res = conjugate_value_from(h, &cfg, &warm)?;
        self.vectors.push(res.optimizer.clone());
        if self.vectors.len() > BUNDLE_CAP {
            let obj = DualObjective::new(center.clone());
            let worst = pick_lowest(self.vectors.iter().map(|v| dual_objective_value(&obj, v)));
            self.vectors.remove(worst);
        }
        Ok((h.trace_with(self.rho.matrix()) - res.value, res.value))
    }

    /// `ρ − Σ q_a ψ_aψ_a†` for the min-norm convex combination over vectors
    /// within `eps` of optimal for `H`.
    fn direction(&self, h: &HermitianObservable, estar: f64, eps: f64) -> ComplexMatrix {
        let obj = DualObjective::new(h.clone());
        let active: Vec<&PureState> = self
            .vectors
            .iter()
            .filter(|v| dual_objective_value(&obj, v) >= estar - eps)
            .collect();
        let n = active.len();
        let gram = DMatrix::from_fn(n, n, |a, b| {
            active[a].amplitudes().dotc(active[b].amplitudes()).norm_sqr()
        });
        let lin: Vec<f64> = active
            .iter()
            .map(|v| v.amplitudes().dotc(&(self.rho.matrix() * v.amplitudes())).re)
            .collect();
        let q = min_norm_on_simplex(&gram, &lin);
        let mut dir = self.rho.matrix().clone();
        for (w, v) in q.iter().zip(&active) {
            dir -= v.projector() * c64(*w, 0.0);
        }
        dir
    }
}

/// Minimizes `qᵀKq − 2lᵀq` over the probability simplex by projected gradient.
fn min_norm_on_simplex(k: &DMatrix<f64>, l: &[f64]) -> Vec<f64> {
    let n = l.len();
    if n == 0 {
        return Vec::new();
    }
    let lip = k.norm().max(1e-12);
    let mut q = vec![1.0 / n as f64; n];
    for _ in 0..5000 {
        let kq = k * nalgebra::DVector::from_column_slice(&q);
        let next: Vec<f64> = (0..n).map(|a| q[a] - (kq[a] - l[a]) / lip).collect();
        let next = project_simplex(&next);
        let moved: f64 = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
        q = next;
        if moved < 1e-15 {
            break;
        }
    }
    q
}

fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        cumulative += x;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Observables for which the members of a minimizing ensemble of `ρ` are
/// stationary: the Hermitian part of the least-squares solution of
/// `Hψ_i = −log₂(σ_i)ψ_i`, minus a penalty `λ` on the kernel of `ρ`.
fn primal_starts(rho: &DensityMatrix, cfg: &OptimizerConfig) -> Result<Vec<HermitianObservable>> {
    let dims = rho.dims();
    let d = dims.total();
    let eof = crate::entanglement::eof_minimize(
        rho,
        &OptimizerConfig {
            seed: rng::derive_seed(cfg.seed, "biconjugate-primal", 0),
            ..cfg.clone()
        },
    )?;
    let ens = &eof.ensemble;
    let psi = ComplexMatrix::from_fn(d, ens.len(), |r, c| ens.states()[c].amplitudes()[r]);
    let rhs = ComplexMatrix::from_fn(d, ens.len(), |r, c| entanglement_gradient(&ens.states()[c])[r]);
    let fit = rhs * crate::linalg::pseudo_inverse(&psi, 1e-10);
    let fit = crate::linalg::symmetrize(&fit);
    let support = crate::linalg::orthonormal_span(&psi, 1e-10);
    let kernel = ComplexMatrix::identity(d, d) - &support * support.adjoint();
    [1.0, 10.0, 100.0, 1e3, 1e4]
        .iter()
        .map(|&lambda| HermitianObservable::new(&fit - &kernel * c64(lambda, 0.0), dims))
        .collect()
}

/// Lower bound on `E_F(ρ)` from `max_H Tr(ρH) − E*(H)`.
///
/// The concave outer function is climbed by ε-steepest ascent: the direction is
/// the shortest convex combination of the supergradients `ρ − ψψ†` over the
/// tracked near-optimal vectors of the current `H`, with backtracking; failed
/// trial points contribute their optimal vectors to the bundle. The ascent
/// starts from `H = 0` or from an observable fitted to a minimizing ensemble,
/// whichever scores higher, and the final `H` is re-evaluated with the full
/// restart budget.
pub fn biconjugate_eof(rho: &DensityMatrix, cfg: &OptimizerConfig) -> Result<BiconjugateResult> {
    let dims = rho.dims();
    if dims.total() > cfg.biconjugate_cap {
        return Err(Error::Unsupported(format!(
            "biconjugate needs dimension at most {}, got {}",
            cfg.biconjugate_cap,
            dims.total()
        )));
    }
    let inner_restarts = cfg.restarts.clamp(1, 4);
    let mut bundle = Bundle {
        rho,
        cfg: cfg.clone(),
        vectors: Vec::new(),
        evaluations: 0,
    };
    let mut h = HermitianObservable::zero(dims);
    let (mut g, mut estar) = bundle.evaluate(&h, &h, inner_restarts)?;
    for candidate in primal_starts(rho, cfg)? {
        let (gc, ec) = bundle.evaluate(&candidate, &candidate, inner_restarts)?;
        if gc > g {
            (h, g, estar) = (candidate, gc, ec);
        }
    }
    let mut eps = 1e-1;
    let mut step = 1.0;
    let mut direction_norm = f64::INFINITY;
    let mut outer = 0;

    while outer < MAX_OUTER && bundle.evaluations < MAX_EVALUATIONS {
        outer += 1;
        let dir = bundle.direction(&h, estar, eps);
        direction_norm = dir.norm();
        if direction_norm < 1e-7 {
            if eps <= EPS_FLOOR {
                break;
            }
            eps = (eps * 0.1).max(EPS_FLOOR);
            continue;
        }
        let mut t = step;
        let mut accepted = false;
        for _ in 0..12 {
            let trial = HermitianObservable::new(h.matrix() + &dir * c64(t, 0.0), dims)?;
            let (gt, et) = bundle.evaluate(&trial, &h, inner_restarts)?;
            if gt >= g + 1e-4 * t * direction_norm * direction_norm {
                h = trial;
                g = gt;
                estar = et;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if accepted {
            step = (t * 2.0).min(1e3);
        } else {
            // the bundle has been enriched by the trial points; tighten ε
            eps = (eps * 0.7).max(EPS_FLOOR);
            step = t.max(1e-3);
        }
    }

    let final_cfg = OptimizerConfig {
        seed: rng::derive_seed(cfg.seed, "biconjugate-final", 0),
        ..cfg.clone()
    };
    let warm = bundle.vectors.clone();
    let res = conjugate_value_from(&h, &final_cfg, &warm)?;
    Ok(BiconjugateResult {
        value: h.trace_with(rho.matrix()) - res.value,
        observable: h,
        outer_iterations: outer,
        evaluations: bundle.evaluations + 1,
        direction_norm,
        seed: cfg.seed,
    })
}
