//! Gap computations for additivity, strong superadditivity and conjugate
//! additivity, and a step-by-step numerical replay of the theorem that
//! additivity for `ρ₁, ρ₂` implies strong superadditivity for `ρ`.
//!
//! Four-party operators are in storage order `(1A, 1B, 2A, 2B)`; every
//! entanglement quantity on the composite is taken across `(1A, 2A) | (1B, 2B)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codec::Document;
use crate::config::OptimizerConfig;
use crate::conjugate::{conjugate_value, conjugate_value_from, entanglement_gradient};
use crate::entanglement::{eof_minimize, eof_minimize_from, pure_entanglement, EoFResult};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, max_abs, ComplexMatrix, ComplexVector};
use crate::rng::derive_seed;
use crate::states::{DensityMatrix, Ensemble, FourPartyDims, HermitianObservable, PureState};

/// Basis vectors closer than this to the span of earlier ones are dropped.
pub const SPAN_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapKind {
    Additivity,
    StrongSuperadditivity,
    ConjugateAdditivity,
    Convexity,
    PureReduction,
}

/// A conjectured or proved relation `lhs ≤ rhs`, evaluated numerically.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GapReport {
    pub kind: GapKind,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub gap: f64,
    /// SHA-256 digests of the canonical encodings of the inputs.
    pub inputs: Vec<String>,
    pub seed: u64,
    pub non_converged: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

impl GapReport {
    fn new(kind: GapKind, lhs: f64, rhs: f64, inputs: Vec<String>, seed: u64) -> Self {
        GapReport {
            kind,
            lhs,
            rhs,
            gap: rhs - lhs,
            inputs,
            seed,
            non_converged: false,
            diagnostics: BTreeMap::new(),
        }
    }

    fn note(&mut self, key: &str, value: f64) {
        self.diagnostics.insert(key.to_string(), value);
    }
}

fn sub_config(cfg: &OptimizerConfig, purpose: &str, index: u64) -> OptimizerConfig {
    cfg.clone().with_seed(derive_seed(cfg.seed, purpose, index))
}

fn check_cap(dim: usize, cfg: &OptimizerConfig) -> Result<()> {
    if dim > cfg.composite_cap {
        return Err(Error::Unsupported(format!(
            "composite dimension {dim} exceeds the cap {}",
            cfg.composite_cap
        )));
    }
    Ok(())
}

fn digest_density(rho: &DensityMatrix) -> String {
    Document::density(rho.clone()).digest()
}

fn digest_four_party(rho: &DensityMatrix, dims: FourPartyDims) -> Result<String> {
    Ok(Document::density(rho.clone()).with_four_party(dims)?.digest())
}

/// Four-party dims of `ρ₁ ⊗ ρ₂`.
fn joint_dims(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<FourPartyDims> {
    let (d1, d2) = (rho1.dims(), rho2.dims());
    FourPartyDims::new(d1.a, d1.b, d2.a, d2.b)
}

/// The ensemble `{p_m q_n, ψ_m ⊗ χ_n}` of `ρ₁ ⊗ ρ₂`, across the cut.
pub fn product_ensemble(ens1: &Ensemble, ens2: &Ensemble, dims: FourPartyDims) -> Result<Ensemble> {
    let target = dims.cut_density(&ens1.target().tensor(ens2.target())?)?;
    let mut weights = Vec::with_capacity(ens1.len() * ens2.len());
    let mut states = Vec::with_capacity(ens1.len() * ens2.len());
    for (p, psi) in ens1.iter() {
        for (q, chi) in ens2.iter() {
            weights.push(p * q);
            states.push(dims.cut_product(psi, chi));
        }
    }
    Ensemble::new(weights, states, target)
}

/// `E_F(ρ₁ ⊗ ρ₂)`, with the product of the factor ensembles as an extra start.
fn product_eof(e1: &EoFResult, e2: &EoFResult, dims: FourPartyDims, cfg: &OptimizerConfig) -> Result<EoFResult> {
    let trial = product_ensemble(&e1.ensemble, &e2.ensemble, dims)?;
    eof_minimize_from(trial.target(), cfg, std::slice::from_ref(&trial))
}

/// `E_F(ρ₁ ⊗ ρ₂)` against `E_F(ρ₁) + E_F(ρ₂)`.
///
/// The product of the factor ensembles is one of the composite starts, so the
/// reported gap is non-negative up to round-off.
pub fn additivity_gap(rho1: &DensityMatrix, rho2: &DensityMatrix, cfg: &OptimizerConfig) -> Result<GapReport> {
    let dims = joint_dims(rho1, rho2)?;
    check_cap(dims.total(), cfg)?;
    let e1 = eof_minimize(rho1, &sub_config(cfg, "additivity", 0))?;
    let e2 = eof_minimize(rho2, &sub_config(cfg, "additivity", 1))?;
    let joint = product_eof(&e1, &e2, dims, &sub_config(cfg, "additivity", 2))?;
    let mut report = GapReport::new(
        GapKind::Additivity,
        joint.value,
        e1.value + e2.value,
        vec![digest_density(rho1), digest_density(rho2)],
        cfg.seed,
    );
    report.non_converged = e1.non_converged || e2.non_converged || joint.non_converged;
    report.note("eofRho1", e1.value);
    report.note("eofRho2", e2.value);
    report.note("compositeBestRestart", joint.best_restart as f64);
    report.note("compositeGradientNorm", joint.converged_gradient_norm);
    report.note("compositeEnsembleSize", joint.ensemble.len() as f64);
    Ok(report)
}

fn check_four_party(rho: &DensityMatrix, dims: FourPartyDims, cfg: &OptimizerConfig) -> Result<()> {
    if rho.dims() != dims.system_split()? {
        return Err(Error::dimension("state dims do not match the four-party split"));
    }
    check_cap(dims.total(), cfg)
}

/// `E_F(ρ)` across the cut against `E_F(ρ₁) + E_F(ρ₂)`.
pub fn strong_superadditivity_gap(
    rho: &DensityMatrix,
    dims: FourPartyDims,
    cfg: &OptimizerConfig,
) -> Result<GapReport> {
    check_four_party(rho, dims, cfg)?;
    let (rho1, rho2) = dims.reductions(rho)?;
    let e1 = eof_minimize(&rho1, &sub_config(cfg, "superadditivity", 0))?;
    let e2 = eof_minimize(&rho2, &sub_config(cfg, "superadditivity", 1))?;
    let whole = eof_minimize(&dims.cut_density(rho)?, &sub_config(cfg, "superadditivity", 2))?;
    let mut report = GapReport::new(
        GapKind::StrongSuperadditivity,
        e1.value + e2.value,
        whole.value,
        vec![digest_four_party(rho, dims)?],
        cfg.seed,
    );
    report.non_converged = e1.non_converged || e2.non_converged || whole.non_converged;
    report.note("eofRho1", e1.value);
    report.note("eofRho2", e2.value);
    report.note("eofComposite", whole.value);
    Ok(report)
}

/// The reduction of strong superadditivity to pure states, link by link.
///
/// With a minimizing ensemble `{p_i, φ_i}` of `ρ` across the cut:
/// `Σ p_i E(φ_i) ≥ Σ p_i [E_F(Tr₂ φ_i) + E_F(Tr₁ φ_i)] ≥ E_F(ρ₁) + E_F(ρ₂)`.
/// The first link is the pure-state statement, the second is convexity.
pub fn pure_reduction_check(rho: &DensityMatrix, dims: FourPartyDims, cfg: &OptimizerConfig) -> Result<GapReport> {
    check_four_party(rho, dims, cfg)?;
    let (rho1, rho2) = dims.reductions(rho)?;
    let e1 = eof_minimize(&rho1, &sub_config(cfg, "pure-reduction", 0))?;
    let e2 = eof_minimize(&rho2, &sub_config(cfg, "pure-reduction", 1))?;
    let whole = eof_minimize(&dims.cut_density(rho)?, &sub_config(cfg, "pure-reduction", 2))?;
    let split = dims.system_split()?;
    let mut member_sum = 0.0;
    let mut non_converged = e1.non_converged || e2.non_converged || whole.non_converged;
    for (i, (p, phi)) in whole.ensemble.iter().enumerate() {
        let stored = PureState::new(split, dims.from_cut_vector(phi.amplitudes()))?;
        let (r1, r2) = dims.reductions(&stored.density())?;
        let f1 = eof_minimize(&r1, &sub_config(cfg, "pure-reduction-member", 2 * i as u64))?;
        let f2 = eof_minimize(&r2, &sub_config(cfg, "pure-reduction-member", 2 * i as u64 + 1))?;
        non_converged |= f1.non_converged || f2.non_converged;
        member_sum += p * (f1.value + f2.value);
    }
    let lhs = e1.value + e2.value;
    let mut report = GapReport::new(
        GapKind::PureReduction,
        lhs,
        whole.value,
        vec![digest_four_party(rho, dims)?],
        cfg.seed,
    );
    report.non_converged = non_converged;
    report.note("memberReductionSum", member_sum);
    report.note("pureLinkSlack", whole.value - member_sum);
    report.note("convexityLinkSlack", member_sum - lhs);
    report.note("ensembleSize", whole.ensemble.len() as f64);
    Ok(report)
}

/// `H₁ ⊗ 1 + 1 ⊗ H₂` in storage order.
pub fn local_sum(h1: &ComplexMatrix, h2: &ComplexMatrix) -> Result<ComplexMatrix> {
    let i1 = ComplexMatrix::identity(h1.nrows(), h1.nrows());
    let i2 = ComplexMatrix::identity(h2.nrows(), h2.nrows());
    Ok(linalg::tensor_product(h1, &i2)? + linalg::tensor_product(&i1, h2)?)
}

/// `E*(H₁) + E*(H₂)` against `E*(H₁ ⊗ 1 + 1 ⊗ H₂)` across the cut.
///
/// The product of the two factor optima is one of the composite starts.
pub fn conjugate_additivity_gap(
    h1: &HermitianObservable,
    h2: &HermitianObservable,
    cfg: &OptimizerConfig,
) -> Result<GapReport> {
    let (d1, d2) = (h1.dims(), h2.dims());
    let dims = FourPartyDims::new(d1.a, d1.b, d2.a, d2.b)?;
    check_cap(dims.total(), cfg)?;
    let c1 = conjugate_value(h1, &sub_config(cfg, "conjugate-additivity", 0))?;
    let c2 = conjugate_value(h2, &sub_config(cfg, "conjugate-additivity", 1))?;
    let joint = HermitianObservable::new(dims.to_cut_operator(&local_sum(h1.matrix(), h2.matrix())?), dims.cut())?;
    let trial = dims.cut_product(&c1.optimizer, &c2.optimizer);
    let c = conjugate_value_from(&joint, &sub_config(cfg, "conjugate-additivity", 2), &[trial])?;
    let mut report = GapReport::new(
        GapKind::ConjugateAdditivity,
        c1.value + c2.value,
        c.value,
        vec![
            Document::hermitian(h1.clone()).digest(),
            Document::hermitian(h2.clone()).digest(),
        ],
        cfg.seed,
    );
    report.non_converged = c1.non_converged || c2.non_converged || c.non_converged;
    report.note("conjugateH1", c1.value);
    report.note("conjugateH2", c2.value);
    report.note("compositeStationarityResidual", c.stationarity_residual);
    report.note("compositeBestRestart", c.best_restart as f64);
    Ok(report)
}

/// Convexity of `E_F` as a gap report: `E_F(Σ p_i ρ_i) ≤ Σ p_i E_F(ρ_i)`.
pub fn convexity_report(components: &[(f64, DensityMatrix)], cfg: &OptimizerConfig) -> Result<GapReport> {
    let gap = crate::entanglement::convexity_gap(components, cfg)?;
    let mut report = GapReport::new(
        GapKind::Convexity,
        gap.mixture_eof,
        gap.average_component_eof,
        components.iter().map(|(_, r)| digest_density(r)).collect(),
        cfg.seed,
    );
    for (i, e) in gap.component_eofs.iter().enumerate() {
        report.note(&format!("componentEof{i}"), *e);
    }
    Ok(report)
}

/// Orthonormal bases of the spans `V₁`, `V₂` of two ensembles.
#[derive(Debug, Clone)]
pub struct SupportSubspaces {
    pub basis1: ComplexMatrix,
    pub basis2: ComplexMatrix,
}

impl SupportSubspaces {
    pub fn projector1(&self) -> ComplexMatrix {
        &self.basis1 * self.basis1.adjoint()
    }

    pub fn projector2(&self) -> ComplexMatrix {
        &self.basis2 * self.basis2.adjoint()
    }
}

fn state_columns(ens: &Ensemble) -> ComplexMatrix {
    let d = ens.target().dims().total();
    ComplexMatrix::from_fn(d, ens.len(), |r, c| ens.states()[c].amplitudes()[r])
}

pub fn support_subspaces(ens1: &Ensemble, ens2: &Ensemble) -> Result<SupportSubspaces> {
    if ens1.is_empty() || ens2.is_empty() {
        return Err(Error::validation("support of an empty ensemble", 0.0));
    }
    Ok(SupportSubspaces {
        basis1: linalg::orthonormal_span(&state_columns(ens1), SPAN_CUTOFF),
        basis2: linalg::orthonormal_span(&state_columns(ens2), SPAN_CUTOFF),
    })
}

/// `Tr[(1 − P)ρ(1 − P)]` with `P` the projector onto `V₁ ⊗ V₂`; `ρ` in storage order.
pub fn support_leakage(rho: &DensityMatrix, sub: &SupportSubspaces) -> Result<f64> {
    let p = linalg::tensor_product(&sub.projector1(), &sub.projector2())?;
    let n = p.nrows();
    if rho.matrix().nrows() != n {
        return Err(Error::dimension(format!(
            "state has side {} but the subspaces act on {n}",
            rho.matrix().nrows()
        )));
    }
    let q = ComplexMatrix::identity(n, n) - p;
    Ok((&q * rho.matrix() * &q).trace().re.max(0.0))
}

/// An observable on one factor reconstructed from its matrix elements between ensemble states.
#[derive(Debug, Clone)]
pub struct LocalBlock {
    /// Hermitian operator on the factor, zero on the complement of the span.
    pub operator: ComplexMatrix,
    /// The operator in the orthonormal basis of the span.
    pub block: ComplexMatrix,
    /// `⟨ψ_m|K|ψ_s⟩ = −Tr[ψ_s ψ_m† log₂(ψ_s ψ_s†)] + c⟨ψ_m|ψ_s⟩` as requested.
    pub elements: ComplexMatrix,
    /// `max |elements − elements†|`.
    pub hermiticity_residual: f64,
    /// `max |Ψ†KΨ − elements|` for the fitted Hermitian `K`.
    pub fit_residual: f64,
}

/// `−Tr[ψ_s ψ_m† log₂(ψ_s ψ_s†)] = ⟨ψ_m| −log₂(σ_s) ⊗ 1 |ψ_s⟩`.
fn log_elements(ens: &Ensemble) -> ComplexMatrix {
    let k = ens.len();
    let grads: Vec<ComplexVector> = ens.states().iter().map(entanglement_gradient).collect();
    ComplexMatrix::from_fn(k, k, |m, s| ens.states()[m].amplitudes().dotc(&grads[s]))
}

fn gram(ens: &Ensemble) -> ComplexMatrix {
    let cols = state_columns(ens);
    cols.adjoint() * cols
}

/// Hermitian `K` with `Ψ†KΨ ≈ elements`, supported on the column span of `Ψ`.
fn fit_operator(psi: &ComplexMatrix, elements: &ComplexMatrix) -> ComplexMatrix {
    let pinv = linalg::pseudo_inverse(psi, SPAN_CUTOFF);
    linalg::symmetrize(&(pinv.adjoint() * linalg::symmetrize(elements) * pinv))
}

fn local_block(ens: &Ensemble, constant: f64, basis: &ComplexMatrix) -> LocalBlock {
    let elements = log_elements(ens) + gram(ens) * c64(constant, 0.0);
    let psi = state_columns(ens);
    let operator = fit_operator(&psi, &elements);
    LocalBlock {
        block: basis.adjoint() * &operator * basis,
        hermiticity_residual: max_abs(&(&elements - elements.adjoint())),
        fit_residual: max_abs(&(psi.adjoint() * &operator * &psi - &elements)),
        operator,
        elements,
    }
}

/// Local observables on `V₁` and `V₂` from optimal-ensemble matrix elements.
///
/// `H₁` carries the constant `split` and `H₂` carries `estar − split`, so
/// `H₁ ⊗ 1 + 1 ⊗ H₂` has the constant `estar` on `V₁ ⊗ V₂` for any split.
pub fn local_observable_from_ensembles(
    ens1: &Ensemble,
    ens2: &Ensemble,
    estar: f64,
    split: f64,
) -> Result<(LocalBlock, LocalBlock)> {
    let sub = support_subspaces(ens1, ens2)?;
    Ok((
        local_block(ens1, split, &sub.basis1),
        local_block(ens2, estar - split, &sub.basis2),
    ))
}

/// Tolerances the theorem pipeline judges its residuals against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct TheoremTolerances {
    /// Largest additivity gap for which the premise counts as satisfied.
    pub premise: f64,
    pub support_leakage: f64,
    pub product_optimality: f64,
    pub trace_identity: f64,
    /// Most negative strong-superadditivity gap still counted as holding.
    pub conclusion: f64,
}

impl Default for TheoremTolerances {
    fn default() -> Self {
        TheoremTolerances {
            premise: 1e-4,
            support_leakage: 1e-8,
            product_optimality: 1e-5,
            trace_identity: 1e-6,
            conclusion: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conclusion {
    Holds,
    Violated,
    /// The additivity premise failed, so nothing follows.
    NotImplied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TheoremVerdicts {
    pub premise: bool,
    pub product_optimality: bool,
    pub support_contained: bool,
    pub trace_identity: bool,
    pub conclusion: Conclusion,
}

/// Every intermediate quantity of the theorem replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TheoremReport {
    pub dims: FourPartyDims,
    pub input: String,
    pub seed: u64,
    pub eof_rho1: f64,
    pub eof_rho2: f64,
    /// `E_F(ρ₁ ⊗ ρ₂)` across the cut.
    pub product_eof: f64,
    /// `E_F(ρ₁) + E_F(ρ₂) − E_F(ρ₁ ⊗ ρ₂)`.
    pub premise_gap: f64,
    /// `E_F(ρ)` across the cut.
    pub eof_composite: f64,
    /// `E_F(ρ) − E_F(ρ₁) − E_F(ρ₂)`.
    pub superadditivity_gap: f64,
    /// Constant of the reconstructed `H`, fixed by `E_F(ρ₁⊗ρ₂) = Tr[H(ρ₁⊗ρ₂)] − E*`.
    pub estar: f64,
    pub split_constant: f64,
    pub ensemble_sizes: [usize; 2],
    pub support_dims: [usize; 2],
    pub support_leakage: f64,
    /// `max_mn |f_H(ψ_m ⊗ χ_n) − E*|`.
    pub l2_max_deviation: f64,
    /// Largest difference between composite matrix elements and the local form.
    pub local_form_residual: f64,
    pub hermiticity_residual: f64,
    pub fit_residual: f64,
    /// `|Tr[(ρ₁⊗ρ₂)H] − Tr(Hρ)|`, worst of the composite and local-form `H`.
    pub trace_identity_residual: f64,
    pub trace_identity_local: f64,
    pub trace_identity_composite: f64,
    /// `E*(H_i) − f_{H_i}(ψ)` for the factor observables; zero when the
    /// ensemble members are global maximizers.
    pub factor_certificate_gaps: [f64; 2],
    pub tolerances: TheoremTolerances,
    pub verdicts: TheoremVerdicts,
    pub non_converged: bool,
}

/// Options for [`theorem_pipeline_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct PipelineOptions {
    /// Constant assigned to `H₁`; defaults to `E*/2`.
    pub split: Option<f64>,
    pub tolerances: TheoremTolerances,
}

pub fn theorem_pipeline(rho: &DensityMatrix, dims: FourPartyDims, cfg: &OptimizerConfig) -> Result<TheoremReport> {
    theorem_pipeline_with(rho, dims, cfg, &PipelineOptions::default())
}

/// Penalty placed on the complement of a support when certifying factor optima.
const COMPLEMENT_PENALTY: f64 = 1e3;

fn factor_certificate(
    block: &LocalBlock,
    basis: &ComplexMatrix,
    constant: f64,
    ens: &Ensemble,
    cfg: &OptimizerConfig,
) -> Result<(f64, bool)> {
    let n = block.operator.nrows();
    let complement = ComplexMatrix::identity(n, n) - basis * basis.adjoint();
    let h = HermitianObservable::new(
        &block.operator - complement * c64(COMPLEMENT_PENALTY, 0.0),
        ens.target().dims(),
    )?;
    let warm: Vec<PureState> = ens.states().to_vec();
    let res = conjugate_value_from(&h, cfg, &warm)?;
    Ok((res.value - constant, res.non_converged))
}

/// Replays the theorem on `ρ`:
/// (a) optimal ensembles of `ρ₁`, `ρ₂`; (b) the additivity premise;
/// (c) `E*` and the composite observable from matrix elements between products
/// of ensemble states; (d) equal dual values on all products; (e) containment
/// of `ρ` in `V₁ ⊗ V₂`; (f) the trace identity; (g) the superadditivity gap.
pub fn theorem_pipeline_with(
    rho: &DensityMatrix,
    dims: FourPartyDims,
    cfg: &OptimizerConfig,
    options: &PipelineOptions,
) -> Result<TheoremReport> {
    check_four_party(rho, dims, cfg)?;
    let tol = options.tolerances;

    // (a)
    let (rho1, rho2) = dims.reductions(rho)?;
    let e1 = eof_minimize(&rho1, &sub_config(cfg, "theorem", 0))?;
    let e2 = eof_minimize(&rho2, &sub_config(cfg, "theorem", 1))?;
    let (ens1, ens2) = (&e1.ensemble, &e2.ensemble);

    // (b)
    let joint = product_eof(&e1, &e2, dims, &sub_config(cfg, "theorem", 2))?;
    let premise_gap = e1.value + e2.value - joint.value;

    // (c) factor blocks without constants give Tr[H⁰(ρ₁⊗ρ₂)]; E* closes the first identity
    let sub = support_subspaces(ens1, ens2)?;
    let (k1, k2) = (local_block(ens1, 0.0, &sub.basis1), local_block(ens2, 0.0, &sub.basis2));
    let trace0 = (rho1.matrix() * &k1.operator).trace().re + (rho2.matrix() * &k2.operator).trace().re;
    let estar = trace0 - joint.value;
    let split = options.split.unwrap_or(estar / 2.0);
    let (h1, h2) = local_observable_from_ensembles(ens1, ens2, estar, split)?;

    let psi1 = state_columns(ens1);
    let psi2 = state_columns(ens2);
    let (n1, n2) = (ens1.len(), ens2.len());
    let products = linalg::tensor_product(&psi1, &psi2)?;
    let split_dims = dims.system_split()?;
    let mut log_columns = ComplexMatrix::zeros(products.nrows(), products.ncols());
    let mut product_entanglement = vec![0.0; products.ncols()];
    for c in 0..products.ncols() {
        let stored = PureState::new(split_dims, products.column(c).clone_owned())?;
        let cut = PureState::new(dims.cut(), dims.to_cut_vector(stored.amplitudes()))?;
        product_entanglement[c] = pure_entanglement(&cut);
        log_columns.set_column(c, &dims.from_cut_vector(&entanglement_gradient(&cut)));
    }
    let overlaps = products.adjoint() * &products;
    let direct = products.adjoint() * &log_columns + &overlaps * c64(estar, 0.0);
    // ⟨mn|H|st⟩ = A¹_ms⟨n|t⟩ + A²_nt⟨m|s⟩ + E*⟨m|s⟩⟨n|t⟩
    let (a1, a2) = (log_elements(ens1), log_elements(ens2));
    let (g1, g2) = (gram(ens1), gram(ens2));
    let local = linalg::tensor_product(&a1, &g2)? + linalg::tensor_product(&g1, &a2)? + &overlaps * c64(estar, 0.0);
    let local_form_residual = max_abs(&(&direct - &local));
    let composite_hermiticity = max_abs(&(&direct - direct.adjoint()));
    let h_direct = fit_operator(&products, &direct);
    let fit_residual = max_abs(&(products.adjoint() * &h_direct * &products - &direct))
        .max(h1.fit_residual)
        .max(h2.fit_residual);

    // (d)
    let mut l2_max_deviation: f64 = 0.0;
    for c in 0..products.ncols() {
        let v = products.column(c);
        let f = v.dotc(&(&h_direct * v)).re - product_entanglement[c];
        l2_max_deviation = l2_max_deviation.max((f - estar).abs());
    }

    // (e)
    let leakage = support_leakage(rho, &sub)?;

    // (f)
    let p1 = sub.projector1();
    let p2 = sub.projector2();
    let h_local = linalg::tensor_product(&h1.operator, &p2)? + linalg::tensor_product(&p1, &h2.operator)?;
    let product_state = rho1.tensor(&rho2)?;
    let trace_gap = |h: &ComplexMatrix| ((product_state.matrix() - rho.matrix()) * h).trace().re.abs();
    let trace_identity_local = trace_gap(&h_local);
    let trace_identity_composite = trace_gap(&h_direct);

    // factor certificates: members should maximize f for their own block
    let (gap1, nc1) = factor_certificate(&h1, &sub.basis1, split, ens1, &sub_config(cfg, "theorem", 3))?;
    let (gap2, nc2) = factor_certificate(&h2, &sub.basis2, estar - split, ens2, &sub_config(cfg, "theorem", 4))?;

    // (g)
    let whole = eof_minimize(&dims.cut_density(rho)?, &sub_config(cfg, "theorem", 5))?;
    let superadditivity_gap = whole.value - e1.value - e2.value;

    let premise = premise_gap <= tol.premise;
    let conclusion = if !premise {
        Conclusion::NotImplied
    } else if superadditivity_gap >= -tol.conclusion {
        Conclusion::Holds
    } else {
        Conclusion::Violated
    };
    let trace_identity_residual = trace_identity_local.max(trace_identity_composite);
    Ok(TheoremReport {
        dims,
        input: digest_four_party(rho, dims)?,
        seed: cfg.seed,
        eof_rho1: e1.value,
        eof_rho2: e2.value,
        product_eof: joint.value,
        premise_gap,
        eof_composite: whole.value,
        superadditivity_gap,
        estar,
        split_constant: split,
        ensemble_sizes: [n1, n2],
        support_dims: [sub.basis1.ncols(), sub.basis2.ncols()],
        support_leakage: leakage,
        l2_max_deviation,
        local_form_residual,
        hermiticity_residual: composite_hermiticity
            .max(h1.hermiticity_residual)
            .max(h2.hermiticity_residual),
        fit_residual,
        trace_identity_residual,
        trace_identity_local,
        trace_identity_composite,
        factor_certificate_gaps: [gap1, gap2],
        tolerances: tol,
        verdicts: TheoremVerdicts {
            premise,
            product_optimality: l2_max_deviation <= tol.product_optimality,
            support_contained: leakage <= tol.support_leakage,
            trace_identity: trace_identity_residual <= tol.trace_identity,
            conclusion,
        },
        non_converged: e1.non_converged || e2.non_converged || joint.non_converged || whole.non_converged || nc1 || nc2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::BipartiteDims;
    use crate::rng::stream;
    use crate::states::{density_with, haar_pure_with, hermitian_with, sample_density};
    use approx::assert_abs_diff_eq;

    fn d22() -> BipartiteDims {
        BipartiteDims::new(2, 2).unwrap()
    }

    fn four() -> FourPartyDims {
        FourPartyDims::new(2, 2, 2, 2).unwrap()
    }

    fn cfg(seed: u64) -> OptimizerConfig {
        OptimizerConfig::default().with_seed(seed).with_restarts(4)
    }

    fn pure_product(seed: u64) -> (PureState, PureState, DensityMatrix) {
        let mut rng = stream(seed, "test", 0);
        let a = haar_pure_with(d22(), &mut rng);
        let b = haar_pure_with(d22(), &mut rng);
        let v = PureState::product(a.amplitudes(), b.amplitudes()).unwrap();
        (a, b, v.density().with_dims(four().system_split().unwrap()).unwrap())
    }

    #[test]
    fn additivity_of_pure_states_is_tight() {
        let (a, b, _) = pure_product(1);
        let g = additivity_gap(&a.density(), &b.density(), &cfg(1)).unwrap();
        assert_abs_diff_eq!(g.gap, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(g.rhs, pure_entanglement(&a) + pure_entanglement(&b), epsilon = 1e-9);
        assert_eq!(g.kind, GapKind::Additivity);
        assert_eq!(g.inputs.len(), 2);
    }

    #[test]
    fn additivity_gap_is_nonnegative_for_mixed_factors() {
        let r1 = sample_density(d22(), 2, 5).unwrap();
        let r2 = sample_density(d22(), 3, 6).unwrap();
        let g = additivity_gap(&r1, &r2, &cfg(2)).unwrap();
        assert!(g.gap >= -1e-10, "gap {}", g.gap);
        assert_abs_diff_eq!(g.gap, g.rhs - g.lhs, epsilon = 0.0);
    }

    #[test]
    fn composite_over_the_cap_is_rejected() {
        let r = sample_density(BipartiteDims::new(2, 3).unwrap(), 2, 0).unwrap();
        assert!(matches!(additivity_gap(&r, &r, &cfg(0)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn superadditivity_of_a_product_state_is_tight() {
        let (a, b, rho) = pure_product(3);
        let g = strong_superadditivity_gap(&rho, four(), &cfg(3)).unwrap();
        assert_abs_diff_eq!(g.lhs, pure_entanglement(&a) + pure_entanglement(&b), epsilon = 1e-9);
        assert_abs_diff_eq!(g.gap, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn superadditivity_rejects_mismatched_dims() {
        let rho = sample_density(d22(), 2, 0).unwrap();
        assert!(matches!(
            strong_superadditivity_gap(&rho, four(), &cfg(0)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn pure_reduction_links_sum_to_the_gap() {
        let rho = sample_density(four().system_split().unwrap(), 1, 4).unwrap();
        let g = pure_reduction_check(&rho, four(), &cfg(4)).unwrap();
        let total = g.diagnostics["pureLinkSlack"] + g.diagnostics["convexityLinkSlack"];
        assert_abs_diff_eq!(total, g.gap, epsilon = 1e-12);
        assert!(g.diagnostics["convexityLinkSlack"] >= -1e-8);
    }

    #[test]
    fn conjugate_additivity_product_trial_bounds_the_composite() {
        let mut rng = stream(7, "test", 0);
        let h1 = hermitian_with(d22(), &mut rng);
        let h2 = hermitian_with(d22(), &mut rng);
        let g = conjugate_additivity_gap(&h1, &h2, &cfg(7)).unwrap();
        assert!(g.gap >= -1e-10, "gap {}", g.gap);
    }

    #[test]
    fn local_sum_acts_factorwise() {
        let a = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c64(1.0, 0.0), c64(2.0, 0.0)]));
        let b = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c64(10.0, 0.0), c64(20.0, 0.0)]));
        let s = local_sum(&a, &b).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| s[(i, i)].re).collect();
        assert_eq!(diag, vec![11.0, 21.0, 12.0, 22.0]);
    }

    #[test]
    fn leakage_counts_weight_outside_the_support() {
        let e0 = ComplexVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        let sub = SupportSubspaces {
            basis1: ComplexMatrix::from_columns(std::slice::from_ref(&e0)),
            basis2: ComplexMatrix::identity(2, 2),
        };
        // ρ = ½|00⟩⟨00| + ½|10⟩⟨10| has half its weight on |1⟩ of the first factor
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = c64(0.5, 0.0);
        m[(2, 2)] = c64(0.5, 0.0);
        let rho = crate::states::validate_density(m, BipartiteDims::new(2, 2).unwrap()).unwrap();
        assert_abs_diff_eq!(support_leakage(&rho, &sub).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rank_one_factor_gives_a_one_by_one_block() {
        let mut rng = stream(8, "test", 0);
        let psi = haar_pure_with(d22(), &mut rng);
        let chi = haar_pure_with(d22(), &mut rng);
        let (e1, e2) = (Ensemble::pure(psi.clone()), Ensemble::pure(chi.clone()));
        let (h1, h2) = local_observable_from_ensembles(&e1, &e2, 0.3, 0.1).unwrap();
        assert_eq!(h1.block.shape(), (1, 1));
        assert_abs_diff_eq!(h1.block[(0, 0)].re, pure_entanglement(&psi) + 0.1, epsilon = 1e-10);
        assert_abs_diff_eq!(h2.block[(0, 0)].re, pure_entanglement(&chi) + 0.2, epsilon = 1e-10);
        assert!(h1.fit_residual < 1e-12 && h1.hermiticity_residual < 1e-12);
    }

    #[test]
    fn optimal_ensemble_elements_are_hermitian() {
        let rho = density_with(d22(), 2, &mut stream(9, "test", 0)).unwrap();
        let ens = eof_minimize(&rho, &cfg(9)).unwrap().ensemble;
        let (h1, _) = local_observable_from_ensembles(&ens, &ens, 0.0, 0.0).unwrap();
        assert!(h1.hermiticity_residual < 1e-5, "{}", h1.hermiticity_residual);
    }

    #[test]
    fn pipeline_on_a_correlated_mixture() {
        let mut rng = stream(10, "test", 0);
        let mut m = ComplexMatrix::zeros(16, 16);
        for w in [0.3, 0.7] {
            let a = haar_pure_with(d22(), &mut rng);
            let b = haar_pure_with(d22(), &mut rng);
            let v = a.amplitudes().kronecker(b.amplitudes());
            m += &v * v.adjoint() * c64(w, 0.0);
        }
        let rho = crate::states::validate_density(m, four().system_split().unwrap()).unwrap();
        let r = theorem_pipeline(&rho, four(), &cfg(10)).unwrap();
        assert!(r.verdicts.premise);
        assert!(r.verdicts.support_contained && r.verdicts.product_optimality && r.verdicts.trace_identity);
        assert_eq!(r.verdicts.conclusion, Conclusion::Holds);
        assert_eq!(r.support_dims, [2, 2]);
    }

    #[test]
    fn trace_identity_does_not_depend_on_the_split() {
        let rho = sample_density(four().system_split().unwrap(), 2, 11).unwrap();
        let at = |split| {
            let opts = PipelineOptions {
                split: Some(split),
                ..Default::default()
            };
            theorem_pipeline_with(&rho, four(), &cfg(11), &opts).unwrap()
        };
        let (a, b) = (at(-2.0), at(5.0));
        assert_abs_diff_eq!(a.trace_identity_local, b.trace_identity_local, epsilon = 1e-10);
        assert_abs_diff_eq!(a.estar, b.estar, epsilon = 0.0);
    }

    #[test]
    fn report_serializes_in_camel_case() {
        let (a, b, _) = pure_product(12);
        let g = additivity_gap(&a.density(), &b.density(), &cfg(12)).unwrap();
        let json = serde_json::to_value(&g).unwrap();
        assert!(json.get("nonConverged").is_some());
        assert_eq!(json["kind"], "additivity");
    }
}
