//! States, observables and ensembles.
//!
//! All types validate their invariants at construction and are immutable
//! afterwards.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, c64, hermiticity_residual, max_abs, symmetrize, BipartiteDims, ComplexMatrix, ComplexVector, C64,
    DEFAULT_LOG_FLOOR, HERMITIAN_TOLERANCE, PSD_SLACK,
};
use crate::rng;

/// Tolerance on `‖ψ‖ = 1` and `Tr ρ = 1`.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Ensemble members with weight at or below this are dropped.
pub const WEIGHT_PRUNE_THRESHOLD: f64 = 1e-14;

/// Allowed `‖Σ p_i |ψ_i⟩⟨ψ_i| − ρ‖_max` for an ensemble of `ρ`.
pub const ENSEMBLE_TOLERANCE: f64 = 1e-8;

/// Tolerance on `Σ p_i = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-10;

/// Tolerance on `U†U = I` for isometries.
pub const ISOMETRY_TOLERANCE: f64 = 1e-9;

/// Default upper bound on ensemble cardinality.
pub const DEFAULT_ENSEMBLE_CAP: usize = 16;

/// Default ensemble size for a state of rank `r`: `min(r², 16)`, never below `r`.
pub fn default_ensemble_size(rank: usize) -> usize {
    rank.saturating_mul(rank).min(DEFAULT_ENSEMBLE_CAP).max(rank)
}

/// A normalized bipartite pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: BipartiteDims,
    amplitudes: ComplexVector,
}

impl PureState {
    pub fn new(dims: BipartiteDims, amplitudes: ComplexVector) -> Result<Self> {
        check_length(dims, amplitudes.len())?;
        let norm = amplitudes.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::validation("state is not normalized", (norm - 1.0).abs()));
        }
        Ok(PureState { dims, amplitudes })
    }

    /// Normalizes `amplitudes` first; fails only on a zero or non-finite vector.
    pub fn normalized(dims: BipartiteDims, amplitudes: ComplexVector) -> Result<Self> {
        check_length(dims, amplitudes.len())?;
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::validation("cannot normalize a zero or non-finite vector", norm));
        }
        Ok(PureState {
            dims,
            amplitudes: amplitudes.unscale(norm),
        })
    }

    /// `|a⟩ ⊗ |b⟩` for local vectors `a` (on A) and `b` (on B).
    pub fn product(a: &ComplexVector, b: &ComplexVector) -> Result<Self> {
        let dims = BipartiteDims::new(a.len(), b.len())?;
        PureState::normalized(dims, linalg::tensor_vector(a, b))
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> ComplexVector {
        self.amplitudes
    }

    /// The `dim_a × dim_b` coefficient matrix `ψ_ij`.
    pub fn matrix_view(&self) -> ComplexMatrix {
        reshape_vector_matrix(self.dims, &self.amplitudes)
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            dims: self.dims,
            matrix: self.projector(),
        }
    }
}

fn check_length(dims: BipartiteDims, len: usize) -> Result<()> {
    if len != dims.total() {
        return Err(Error::dimension(format!(
            "vector of length {len} does not match dims ({}, {})",
            dims.a, dims.b
        )));
    }
    Ok(())
}

/// Reshapes a vector into its `dim_a × dim_b` coefficient matrix (A-major).
pub fn reshape_vector_matrix(dims: BipartiteDims, v: &ComplexVector) -> ComplexMatrix {
    debug_assert_eq!(v.len(), dims.total());
    ComplexMatrix::from_fn(dims.a, dims.b, |i, j| v[i * dims.b + j])
}

/// Inverse of [`reshape_vector_matrix`].
pub fn reshape_matrix_vector(m: &ComplexMatrix) -> ComplexVector {
    let (a, b) = m.shape();
    ComplexVector::from_fn(a * b, |g, _| m[(g / b, g % b)])
}

/// A validated density matrix on a bipartite space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: BipartiteDims,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Reduced state on one factor.
    pub fn reduce(&self, keep: linalg::Subsystem) -> DensityMatrix {
        let matrix = linalg::partial_trace(&self.matrix, self.dims, keep).expect("dims checked at construction");
        let d = matrix.nrows();
        DensityMatrix {
            // single-party states carry a trivial second factor
            dims: BipartiteDims { a: d, b: 1 },
            matrix,
        }
    }

    /// Same matrix viewed under a different factorization of the same dimension.
    pub fn with_dims(&self, dims: BipartiteDims) -> Result<DensityMatrix> {
        dims.check_square(&self.matrix)?;
        Ok(DensityMatrix {
            dims,
            matrix: self.matrix.clone(),
        })
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let matrix = linalg::tensor_product(&self.matrix, &other.matrix)?;
        let dims = BipartiteDims::new(self.dims.total(), other.dims.total())?;
        Ok(DensityMatrix { dims, matrix })
    }

    /// Eigenpairs with eigenvalue above `floor`, descending.
    pub fn support(&self, floor: f64) -> SpectralSupport {
        let eig = linalg::eig_unchecked(symmetrize(&self.matrix));
        let rank = eig.values.iter().take_while(|&&x| x > floor).count();
        SpectralSupport {
            values: eig.values[..rank].to_vec(),
            vectors: eig.vectors.columns(0, rank).clone_owned(),
        }
    }
}

/// Positive part of a spectral decomposition `ρ = Σ_j λ_j |e_j⟩⟨e_j|`.
#[derive(Debug, Clone)]
pub struct SpectralSupport {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl SpectralSupport {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// Columns `√λ_j e_j`.
    pub fn weighted_vectors(&self) -> ComplexMatrix {
        let mut w = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            w.column_mut(j).scale_mut(lambda.sqrt());
        }
        w
    }
}

/// Checks Hermiticity, unit trace and positivity, reporting the measured residual.
pub fn validate_density(matrix: ComplexMatrix, dims: BipartiteDims) -> Result<DensityMatrix> {
    dims.check_square(&matrix)?;
    linalg::ensure_finite(&matrix)?;
    let herm = hermiticity_residual(&matrix);
    if herm > HERMITIAN_TOLERANCE {
        return Err(Error::validation("density matrix is not Hermitian", herm));
    }
    let matrix = symmetrize(&matrix);
    let trace = matrix.trace().re;
    if (trace - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::validation(
            "density matrix trace differs from 1",
            (trace - 1.0).abs(),
        ));
    }
    let eig = linalg::eig_unchecked(matrix.clone());
    let lowest = eig.values.last().copied().unwrap_or(0.0);
    if lowest < -PSD_SLACK {
        return Err(Error::NotPositive { eigenvalue: lowest });
    }
    Ok(DensityMatrix { dims, matrix })
}

/// A Hermitian operator on a bipartite space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianObservable {
    dims: BipartiteDims,
    matrix: ComplexMatrix,
}

impl HermitianObservable {
    pub fn new(matrix: ComplexMatrix, dims: BipartiteDims) -> Result<Self> {
        dims.check_square(&matrix)?;
        linalg::ensure_finite(&matrix)?;
        let herm = hermiticity_residual(&matrix);
        if herm > HERMITIAN_TOLERANCE * max_abs(&matrix).max(1.0) {
            return Err(Error::validation("observable is not Hermitian", herm));
        }
        Ok(HermitianObservable {
            dims,
            matrix: symmetrize(&matrix),
        })
    }

    pub fn zero(dims: BipartiteDims) -> Self {
        HermitianObservable {
            dims,
            matrix: ComplexMatrix::zeros(dims.total(), dims.total()),
        }
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `H + c·1`.
    pub fn shifted(&self, c: f64) -> Self {
        let n = self.dims.total();
        HermitianObservable {
            dims: self.dims,
            matrix: &self.matrix + ComplexMatrix::identity(n, n) * c64(c, 0.0),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        HermitianObservable {
            dims: self.dims,
            matrix: &self.matrix * c64(s, 0.0),
        }
    }

    pub fn expectation(&self, psi: &ComplexVector) -> f64 {
        psi.dotc(&(&self.matrix * psi)).re
    }

    pub fn trace_with(&self, rho: &ComplexMatrix) -> f64 {
        (&self.matrix * rho).trace().re
    }
}

/// Dimensions of a four-party system `1A, 1B, 2A, 2B`.
///
/// Operators on the whole system are stored in the order `(1A, 1B, 2A, 2B)`,
/// so `ρ₁ ⊗ ρ₂` is a plain Kronecker product. Entanglement is always measured
/// across the cut `(1A, 2A) | (1B, 2B)`; [`FourPartyDims::to_cut_operator`]
/// reorders into that bipartition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FourPartyDims {
    pub d1a: usize,
    pub d1b: usize,
    pub d2a: usize,
    pub d2b: usize,
}

impl FourPartyDims {
    pub fn new(d1a: usize, d1b: usize, d2a: usize, d2b: usize) -> Result<Self> {
        let dims = FourPartyDims { d1a, d1b, d2a, d2b };
        dims.system_split()?;
        Ok(dims)
    }

    pub fn total(&self) -> usize {
        self.d1a * self.d1b * self.d2a * self.d2b
    }

    /// Subsystem 1 (`1A ⊗ 1B`) against subsystem 2.
    pub fn system_split(&self) -> Result<BipartiteDims> {
        BipartiteDims::new(self.d1a, self.d1b)?;
        BipartiteDims::new(self.d2a, self.d2b)?;
        BipartiteDims::new(self.d1a * self.d1b, self.d2a * self.d2b)
    }

    pub fn factor1(&self) -> BipartiteDims {
        BipartiteDims {
            a: self.d1a,
            b: self.d1b,
        }
    }

    pub fn factor2(&self) -> BipartiteDims {
        BipartiteDims {
            a: self.d2a,
            b: self.d2b,
        }
    }

    /// The entanglement cut `(1A, 2A) | (1B, 2B)`.
    pub fn cut(&self) -> BipartiteDims {
        BipartiteDims {
            a: self.d1a * self.d2a,
            b: self.d1b * self.d2b,
        }
    }

    /// `perm[k]` is the cut-order index of storage-order index `k`.
    pub fn cut_permutation(&self) -> Vec<usize> {
        let mut perm = Vec::with_capacity(self.total());
        for i1a in 0..self.d1a {
            for i1b in 0..self.d1b {
                for i2a in 0..self.d2a {
                    for i2b in 0..self.d2b {
                        perm.push(((i1a * self.d2a + i2a) * self.d1b + i1b) * self.d2b + i2b);
                    }
                }
            }
        }
        perm
    }

    pub fn to_cut_vector(&self, v: &ComplexVector) -> ComplexVector {
        let perm = self.cut_permutation();
        let mut out = ComplexVector::zeros(v.len());
        for (k, &p) in perm.iter().enumerate() {
            out[p] = v[k];
        }
        out
    }

    pub fn from_cut_vector(&self, v: &ComplexVector) -> ComplexVector {
        let perm = self.cut_permutation();
        ComplexVector::from_fn(v.len(), |k, _| v[perm[k]])
    }

    pub fn to_cut_operator(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let perm = self.cut_permutation();
        let mut out = ComplexMatrix::zeros(m.nrows(), m.ncols());
        for (r, &pr) in perm.iter().enumerate() {
            for (c, &pc) in perm.iter().enumerate() {
                out[(pr, pc)] = m[(r, c)];
            }
        }
        out
    }

    pub fn from_cut_operator(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let perm = self.cut_permutation();
        ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(perm[r], perm[c])])
    }

    /// A four-party density matrix (storage order) as a bipartite state across the cut.
    pub fn cut_density(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.system_split()?.check_square(rho.matrix())?;
        Ok(DensityMatrix {
            dims: self.cut(),
            matrix: self.to_cut_operator(rho.matrix()),
        })
    }

    /// `ψ₁ ⊗ ψ₂` as a pure state across the cut.
    pub fn cut_product(&self, psi1: &PureState, psi2: &PureState) -> PureState {
        let v = linalg::tensor_vector(psi1.amplitudes(), psi2.amplitudes());
        PureState {
            dims: self.cut(),
            amplitudes: self.to_cut_vector(&v),
        }
    }

    /// Reduced states `ρ₁ = Tr₂ ρ` and `ρ₂ = Tr₁ ρ` with their own A|B dims.
    pub fn reductions(&self, rho: &DensityMatrix) -> Result<(DensityMatrix, DensityMatrix)> {
        let split = self.system_split()?;
        let r1 = linalg::partial_trace(rho.matrix(), split, linalg::Subsystem::A)?;
        let r2 = linalg::partial_trace(rho.matrix(), split, linalg::Subsystem::B)?;
        Ok((
            DensityMatrix {
                dims: self.factor1(),
                matrix: symmetrize(&r1),
            },
            DensityMatrix {
                dims: self.factor2(),
                matrix: symmetrize(&r2),
            },
        ))
    }
}

/// Weighted pure states realizing a target density matrix.
#[derive(Debug, Clone)]
pub struct Ensemble {
    weights: Vec<f64>,
    states: Vec<PureState>,
    target: DensityMatrix,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, states: Vec<PureState>, target: DensityMatrix) -> Result<Self> {
        if weights.is_empty() || weights.len() != states.len() {
            return Err(Error::validation(
                format!(
                    "ensemble needs matching non-empty weights and states, got {} and {}",
                    weights.len(),
                    states.len()
                ),
                f64::NAN,
            ));
        }
        if let Some(&w) = weights.iter().find(|&&w| !(w > 0.0)) {
            return Err(Error::validation("ensemble weight is not positive", w));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::validation(
                "ensemble weights do not sum to 1",
                (total - 1.0).abs(),
            ));
        }
        if let Some(s) = states.iter().find(|s| s.dims() != target.dims()) {
            return Err(Error::dimension(format!(
                "ensemble member dims ({}, {}) differ from target ({}, {})",
                s.dims().a,
                s.dims().b,
                target.dims().a,
                target.dims().b
            )));
        }
        let ens = Ensemble {
            weights,
            states,
            target,
        };
        let residual = ens.reconstruction_residual();
        if residual > ENSEMBLE_TOLERANCE {
            return Err(Error::validation("ensemble does not reproduce its target", residual));
        }
        Ok(ens)
    }

    /// The trivial one-member ensemble of a pure state.
    pub fn pure(psi: PureState) -> Self {
        let target = psi.density();
        Ensemble {
            weights: vec![1.0],
            states: vec![psi],
            target,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn target(&self) -> &DensityMatrix {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &PureState)> {
        self.weights.iter().copied().zip(self.states.iter())
    }

    /// `Σ p_i |ψ_i⟩⟨ψ_i|`.
    pub fn average(&self) -> ComplexMatrix {
        let n = self.target.dims().total();
        self.iter().fold(ComplexMatrix::zeros(n, n), |acc, (p, s)| {
            acc + s.projector() * c64(p, 0.0)
        })
    }

    pub fn reconstruction_residual(&self) -> f64 {
        max_abs(&(self.average() - self.target.matrix()))
    }
}

/// A `k × r` matrix with orthonormal columns, parameterizing ensembles of a rank-`r` state.
#[derive(Debug, Clone, PartialEq)]
pub struct IsometryParameter {
    matrix: ComplexMatrix,
}

impl IsometryParameter {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let (k, r) = matrix.shape();
        if r == 0 || k < r {
            return Err(Error::dimension(format!(
                "isometry must be k x r with k >= r >= 1, got {k}x{r}"
            )));
        }
        linalg::ensure_finite(&matrix)?;
        let residual = max_abs(&(matrix.adjoint() * &matrix - ComplexMatrix::identity(r, r)));
        if residual > ISOMETRY_TOLERANCE {
            return Err(Error::validation("columns are not orthonormal", residual));
        }
        Ok(IsometryParameter { matrix })
    }

    /// Orthonormalizes the columns of `m` (Q factor of its QR decomposition).
    pub fn from_qr(m: &ComplexMatrix) -> Result<Self> {
        IsometryParameter::new(linalg::orthonormalize_columns(m))
    }

    /// The first `r` columns of the `k × k` identity.
    pub fn identity(k: usize, r: usize) -> Result<Self> {
        IsometryParameter::new(ComplexMatrix::identity(k, r))
    }

    /// Haar-distributed isometry.
    pub fn random(k: usize, r: usize, rng: &mut impl Rng) -> Result<Self> {
        IsometryParameter::from_qr(&gaussian_matrix(k, r, rng))
    }

    /// The isometry whose induced ensemble is `ensemble`, for a state with the given support.
    ///
    /// Inverts `√p_i ψ_i = Σ_j U*_ij √λ_j e_j`; members must lie in the support.
    pub fn from_ensemble(support: &SpectralSupport, ensemble: &Ensemble) -> Result<Self> {
        let k = ensemble.len();
        let r = support.rank();
        let mut u = ComplexMatrix::zeros(k, r);
        for (i, (p, psi)) in ensemble.iter().enumerate() {
            for j in 0..r {
                let overlap = support.vectors.column(j).dotc(psi.amplitudes());
                u[(i, j)] = (overlap * (p / support.values[j]).sqrt()).conj();
            }
        }
        IsometryParameter::new(u)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn ensemble_size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn target_rank(&self) -> usize {
        self.matrix.ncols()
    }
}

/// The ensemble `√p_i |ψ_i⟩ = Σ_j U*_ij √λ_j |e_j⟩` of `ρ` induced by an isometry.
///
/// Members of weight at most [`WEIGHT_PRUNE_THRESHOLD`] are dropped and the
/// remaining weights renormalized.
pub fn ensemble_from_isometry(rho: &DensityMatrix, u: &IsometryParameter) -> Result<Ensemble> {
    let support = rho.support(DEFAULT_LOG_FLOOR);
    ensemble_from_support(rho, &support, u)
}

pub(crate) fn ensemble_from_support(
    rho: &DensityMatrix,
    support: &SpectralSupport,
    u: &IsometryParameter,
) -> Result<Ensemble> {
    if u.target_rank() != support.rank() {
        return Err(Error::dimension(format!(
            "isometry has {} columns but the state has rank {}",
            u.target_rank(),
            support.rank()
        )));
    }
    let phi = support.weighted_vectors() * u.matrix().adjoint();
    let mut weights = Vec::with_capacity(phi.ncols());
    let mut states = Vec::with_capacity(phi.ncols());
    for col in phi.column_iter() {
        let p = col.norm_squared();
        if p > WEIGHT_PRUNE_THRESHOLD {
            weights.push(p);
            states.push(PureState {
                dims: rho.dims(),
                amplitudes: col.unscale(p.sqrt()),
            });
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ensemble::new(weights, states, rho.clone())
}

/// Standard complex Gaussian `(x + iy)/√2` with `E|z|² = 1`.
pub fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    c64(x, y) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    // fill row by row so the draw order matches row-major reading
    let entries: Vec<C64> = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    ComplexMatrix::from_row_slice(rows, cols, &entries)
}

pub fn haar_pure_with(dims: BipartiteDims, rng: &mut impl Rng) -> PureState {
    let v = ComplexVector::from_iterator(dims.total(), (0..dims.total()).map(|_| complex_gaussian(rng)));
    PureState::normalized(dims, v).expect("Gaussian vector is almost surely nonzero")
}

/// Haar-random pure state, deterministic in `seed`.
pub fn sample_haar_pure(dims: BipartiteDims, seed: u64) -> PureState {
    haar_pure_with(dims, &mut rng::stream(seed, "haar-pure", 0))
}

pub fn density_with(dims: BipartiteDims, rank: usize, rng: &mut impl Rng) -> Result<DensityMatrix> {
    let d = dims.total();
    if rank == 0 || rank > d {
        return Err(Error::dimension(format!("rank must lie in 1..={d}, got {rank}")));
    }
    let g = gaussian_matrix(d, rank, rng);
    let gg = &g * g.adjoint();
    let t = gg.trace().re;
    Ok(DensityMatrix {
        dims,
        matrix: symmetrize(&(gg / c64(t, 0.0))),
    })
}

/// Hilbert–Schmidt-induced random density matrix `GG†/Tr(GG†)` of the given rank.
pub fn sample_density(dims: BipartiteDims, rank: usize, seed: u64) -> Result<DensityMatrix> {
    density_with(dims, rank, &mut rng::stream(seed, "density", 0))
}

pub fn hermitian_with(dims: BipartiteDims, rng: &mut impl Rng) -> HermitianObservable {
    let d = dims.total();
    let g = gaussian_matrix(d, d, rng);
    let matrix = (&g + g.adjoint()) * c64(0.5 / (d as f64).sqrt(), 0.0);
    HermitianObservable { dims, matrix }
}

/// GUE sample `(G + G†)/2`, scaled by `1/√d`.
pub fn sample_hermitian(dims: BipartiteDims, seed: u64) -> HermitianObservable {
    hermitian_with(dims, &mut rng::stream(seed, "hermitian", 0))
}

/// Haar-random `n × n` unitary.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    linalg::orthonormalize_columns(&gaussian_matrix(n, n, rng))
}
