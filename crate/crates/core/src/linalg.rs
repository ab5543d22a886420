//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. Bipartite vectors
//! use the A-major index convention: the amplitude of `|i⟩_A |j⟩_B` lives at
//! global index `i * dim_b + j`.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use num_complex::Complex64 as C64;

pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Largest side length any constructed matrix may have.
pub const MAX_DIMENSION: usize = 4096;

/// Eigenvalues at or below this value are treated as outside the support.
pub const DEFAULT_LOG_FLOOR: f64 = 1e-12;

/// Tolerated anti-Hermitian part before a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

/// Negative eigenvalue slack accepted by PSD checks.
pub const PSD_SLACK: f64 = 1e-9;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Local dimensions of a bipartite system `A ⊗ B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BipartiteDims {
    pub a: usize,
    pub b: usize,
}

impl BipartiteDims {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::dimension(format!(
                "subsystem dimensions must be positive, got ({a}, {b})"
            )));
        }
        match a.checked_mul(b) {
            Some(total) if total <= MAX_DIMENSION => Ok(BipartiteDims { a, b }),
            _ => Err(Error::dimension(format!(
                "dimension {a}x{b} exceeds the maximum of {MAX_DIMENSION}"
            ))),
        }
    }

    pub fn total(&self) -> usize {
        self.a * self.b
    }

    pub fn swapped(&self) -> Self {
        BipartiteDims { a: self.b, b: self.a }
    }

    /// Ensures `m` is a square matrix acting on this space.
    pub fn check_square(&self, m: &ComplexMatrix) -> Result<()> {
        let n = self.total();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::dimension(format!(
                "expected a {n}x{n} matrix for dims ({}, {}), got {}x{}",
                self.a,
                self.b,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(())
    }
}

/// Which factor of a bipartite system a partial trace keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Builds a matrix from row-major entries, rejecting non-finite values.
pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<ComplexMatrix> {
    if rows.checked_mul(cols) != Some(entries.len()) {
        return Err(Error::dimension(format!(
            "{} entries cannot fill a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    let m = ComplexMatrix::from_row_slice(rows, cols, entries);
    ensure_finite(&m)?;
    Ok(m)
}

pub fn to_row_major(m: &ComplexMatrix) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    match m.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        None => Ok(()),
        Some(k) => Err(Error::validation(
            format!("non-finite entry at column-major offset {k}"),
            f64::NAN,
        )),
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest entry modulus of `M - M†`.
pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(M + M†) / 2`.
pub fn symmetrize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * c64(0.5, 0.0)
}

/// Kronecker product `X ⊗ Y`.
pub fn tensor_product(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = x.nrows().checked_mul(y.nrows());
    let cols = x.ncols().checked_mul(y.ncols());
    match (rows, cols) {
        (Some(r), Some(c)) if r <= MAX_DIMENSION && c <= MAX_DIMENSION => {
            let mut out = ComplexMatrix::zeros(r, c);
            for xi in 0..x.nrows() {
                for xj in 0..x.ncols() {
                    let s = x[(xi, xj)];
                    if s == C64::default() {
                        continue;
                    }
                    for yi in 0..y.nrows() {
                        for yj in 0..y.ncols() {
                            out[(xi * y.nrows() + yi, xj * y.ncols() + yj)] = s * y[(yi, yj)];
                        }
                    }
                }
            }
            Ok(out)
        }
        _ => Err(Error::dimension(format!(
            "tensor product of {}x{} and {}x{} exceeds the maximum side {MAX_DIMENSION}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        ))),
    }
}

/// Kronecker product of two vectors.
pub fn tensor_vector(x: &ComplexVector, y: &ComplexVector) -> ComplexVector {
    let mut out = ComplexVector::zeros(x.len() * y.len());
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            out[i * y.len() + j] = xi * yj;
        }
    }
    out
}

/// Partial trace of an operator on `A ⊗ B`, keeping the selected factor.
pub fn partial_trace(m: &ComplexMatrix, dims: BipartiteDims, keep: Subsystem) -> Result<ComplexMatrix> {
    dims.check_square(m)?;
    let (da, db) = (dims.a, dims.b);
    match keep {
        Subsystem::A => Ok(ComplexMatrix::from_fn(da, da, |i, k| {
            (0..db).map(|j| m[(i * db + j, k * db + j)]).sum()
        })),
        Subsystem::B => Ok(ComplexMatrix::from_fn(db, db, |j, l| {
            (0..da).map(|i| m[(i * db + j, i * db + l)]).sum()
        })),
    }
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `k` pairs with `values[k]`.
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_values(|x| x)
    }

    /// `Σ_k f(λ_k) v_k v_k†`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors.nrows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            let v = self.vectors.column(k);
            out += (v * v.adjoint()) * c64(w, 0.0);
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix, after symmetrizing away round-off.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(Error::dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m)?;
    let residual = hermiticity_residual(m);
    if residual > HERMITIAN_TOLERANCE * max_abs(m).max(1.0) {
        return Err(Error::validation("matrix is not Hermitian", residual));
    }
    Ok(eig_unchecked(symmetrize(m)))
}

pub(crate) fn eig_unchecked(m: ComplexMatrix) -> EigenDecomposition {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    EigenDecomposition { values, vectors }
}

/// Base-2 logarithm on the support of a PSD matrix: `Σ_{λ > floor} log₂(λ) v v†`.
pub fn matrix_log2_psd(m: &ComplexMatrix, floor: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    if let Some(&lowest) = eig.values.last() {
        if lowest < -PSD_SLACK {
            return Err(Error::NotPositive { eigenvalue: lowest });
        }
    }
    Ok(eig.map_values(|x| if x > floor { x.log2() } else { 0.0 }))
}

/// `a† b`.
#[inline]
pub fn inner(a: &ComplexVector, b: &ComplexVector) -> C64 {
    a.dotc(b)
}

/// Real Frobenius inner product `Re Tr(A† B)`.
pub fn real_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Orthonormalizes the columns in order (modified Gram–Schmidt, two passes).
///
/// This is the Q factor of a thin QR decomposition with positive diagonal R.
/// Columns must be linearly independent.
pub fn orthonormalize_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let mut q = m.clone();
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dotc(&q.column(j));
                let qi = q.column(i).clone_owned();
                let mut cj = q.column_mut(j);
                cj.axpy(-proj, &qi, c64(1.0, 0.0));
            }
        }
        let norm = q.column(j).norm();
        q.column_mut(j).unscale_mut(norm);
    }
    q
}

/// Orthonormal basis for the span of the columns, by Gram–Schmidt with pivoting.
///
/// Pivots on the largest remaining residual norm and stops once it drops to
/// `cutoff` or below. Returns a `rows × rank` matrix.
pub fn orthonormal_span(columns: &ComplexMatrix, cutoff: f64) -> ComplexMatrix {
    let mut residual: Vec<ComplexVector> = columns.column_iter().map(|c| c.clone_owned()).collect();
    let mut basis: Vec<ComplexVector> = Vec::new();
    loop {
        let pivot = residual
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v.norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1));
        let Some((k, norm)) = pivot else { break };
        if norm <= cutoff || basis.len() == columns.nrows() {
            break;
        }
        let mut q = residual.swap_remove(k);
        // second pass against earlier vectors to repair lost orthogonality
        for b in &basis {
            let c = b.dotc(&q);
            q.axpy(-c, b, c64(1.0, 0.0));
        }
        let n = q.norm();
        if n <= cutoff {
            continue;
        }
        q.unscale_mut(n);
        for r in residual.iter_mut() {
            let c = q.dotc(r);
            r.axpy(-c, &q, c64(1.0, 0.0));
        }
        basis.push(q);
    }
    let mut out = ComplexMatrix::zeros(columns.nrows(), basis.len());
    for (j, b) in basis.iter().enumerate() {
        out.set_column(j, b);
    }
    out
}

/// Moore–Penrose pseudo-inverse, singular values at or below `cutoff` dropped.
pub fn pseudo_inverse(m: &ComplexMatrix, cutoff: f64) -> ComplexMatrix {
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let mut out = ComplexMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let v = vt.row(k).adjoint();
            out += (v * u.column(k).adjoint()) * c64(1.0 / s, 0.0);
        }
    }
    out
}

/// Singular values in descending order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Standard Pauli matrices.
pub mod pauli {
    use super::{c64, ComplexMatrix};

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(0., -1.), c64(0., 1.), c64(0., 0.)])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c64(1., 0.), c64(0., 0.), c64(0., 0.), c64(-1., 0.)])
    }
}
