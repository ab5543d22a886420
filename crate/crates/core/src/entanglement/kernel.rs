//! Entropy and entropy gradient of a (possibly unnormalized) coefficient matrix.
//!
//! For a bipartite vector with coefficient matrix `M`, let `t = Tr(MM†)` and
//! `σ = MM†/t`. The kernel returns `t`, `S(σ)` and the Wirtinger derivative
//! `∂(t·S(σ))/∂M̄ = −log₂(σ) M`. The `1/ln 2` terms of the derivative of
//! `−x log₂ x` cancel against the derivative of `t log₂ t`.

use crate::linalg::{self, c64, ComplexMatrix, C64};

pub(crate) struct Reduced {
    pub norm_sq: f64,
    /// Normalized Schmidt spectrum, descending.
    pub spectrum: Vec<f64>,
    vectors: ComplexMatrix,
    /// The reduced operator was built as `M†M` rather than `MM†`.
    right: bool,
}

impl Reduced {
    /// Reduces on the smaller factor.
    pub fn new(m: &ComplexMatrix) -> Reduced {
        let right = m.nrows() > m.ncols();
        let norm_sq = m.norm_squared();
        if norm_sq == 0.0 {
            let n = m.nrows().min(m.ncols());
            return Reduced {
                norm_sq,
                spectrum: vec![0.0; n],
                vectors: ComplexMatrix::identity(n, n),
                right,
            };
        }
        let (mut values, vectors) = if m.nrows().min(m.ncols()) == 2 {
            two_by_two(m, right)
        } else {
            let r = if right { m.adjoint() * m } else { m * m.adjoint() };
            let eig = linalg::eig_unchecked(linalg::symmetrize(&r));
            (eig.values, eig.vectors)
        };
        for v in values.iter_mut() {
            *v = (*v / norm_sq).max(0.0);
        }
        Reduced {
            norm_sq,
            spectrum: values,
            vectors,
            right,
        }
    }

    /// `S(σ)` in bits, over eigenvalues above `floor`.
    pub fn entropy(&self, floor: f64) -> f64 {
        crate::entanglement::entropy_of_spectrum(&self.spectrum, floor)
    }

    /// `log₂ σ` restricted to eigenvalues above `floor`.
    pub fn log2(&self, floor: f64) -> ComplexMatrix {
        let n = self.vectors.nrows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &s) in self.spectrum.iter().enumerate() {
            if s > floor {
                let v = self.vectors.column(k);
                out += (v * v.adjoint()) * c64(s.log2(), 0.0);
            }
        }
        out
    }

    /// `−log₂(σ) M` in coefficient-matrix form.
    pub fn gradient(&self, m: &ComplexMatrix, floor: f64) -> ComplexMatrix {
        let l = self.log2(floor);
        if self.right {
            -(m * l)
        } else {
            -(l * m)
        }
    }
}

/// Closed-form spectrum of the 2×2 reduced operator.
///
/// The small eigenvalue comes from the determinant via Cauchy–Binet
/// (sum of squared 2×2 minors of `M`), so it keeps relative accuracy for
/// nearly-product states.
fn two_by_two(m: &ComplexMatrix, right: bool) -> (Vec<f64>, ComplexMatrix) {
    // rows of the 2×n factor whose Gram matrix is the reduced operator
    let owned;
    let f: &ComplexMatrix = if right {
        owned = m.adjoint();
        &owned
    } else {
        m
    };
    let n = f.ncols();
    let mut a = 0.0;
    let mut c = 0.0;
    let mut b = C64::default();
    for j in 0..n {
        a += f[(0, j)].norm_sqr();
        c += f[(1, j)].norm_sqr();
        b += f[(0, j)] * f[(1, j)].conj();
    }
    let mut det = 0.0;
    for j in 0..n {
        for l in (j + 1)..n {
            det += (f[(0, j)] * f[(1, l)] - f[(0, l)] * f[(1, j)]).norm_sqr();
        }
    }
    let half_diff = 0.5 * (a - c);
    let r = (half_diff * half_diff + b.norm_sqr()).sqrt();
    let large = 0.5 * (a + c) + r;
    let small = if large > 0.0 { det / large } else { 0.0 };

    // eigenvector of [[a, b], [b̄, c]] for `large`
    let v1 = if half_diff >= 0.0 {
        [c64(large - c, 0.0), b.conj()]
    } else {
        [b, c64(large - a, 0.0)]
    };
    let norm = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
    let vectors = if norm == 0.0 || r == 0.0 {
        ComplexMatrix::identity(2, 2)
    } else {
        let (x, y) = (v1[0] / norm, v1[1] / norm);
        ComplexMatrix::from_row_slice(2, 2, &[x, -y.conj(), y, x.conj()])
    };
    (vec![large, small], vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::rng;
    use crate::states::gaussian_matrix;

    #[test]
    fn closed_form_matches_general_eigensolver() {
        let mut g = rng::stream(1, "kernel", 0);
        for (rows, cols) in [(2, 2), (2, 3), (3, 2), (2, 5)] {
            let m = gaussian_matrix(rows, cols, &mut g);
            let fast = Reduced::new(&m);
            let r = if rows > cols {
                m.adjoint() * &m
            } else {
                &m * m.adjoint()
            };
            let eig = linalg::hermitian_eig(&r).unwrap();
            let t = m.norm_squared();
            for k in 0..2 {
                assert!((fast.spectrum[k] - eig.values[k] / t).abs() < 1e-14);
            }
            let rebuilt = &fast.vectors
                * ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    2,
                    fast.spectrum.iter().map(|&s| c64(s * t, 0.0)),
                ))
                * fast.vectors.adjoint();
            assert!(max_abs(&(rebuilt - r)) < 1e-13);
        }
    }

    #[test]
    fn small_eigenvalue_keeps_relative_accuracy() {
        // |00⟩ + δ|11⟩ has Schmidt spectrum (1, δ²)/(1 + δ²)
        let delta = 1e-9;
        let m = ComplexMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(delta, 0.0)]);
        let red = Reduced::new(&m);
        let expected = delta * delta / (1.0 + delta * delta);
        assert!((red.spectrum[1] - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn diagonal_and_degenerate_inputs() {
        let m = ComplexMatrix::identity(2, 2);
        let red = Reduced::new(&m);
        assert_eq!(red.spectrum, vec![0.5, 0.5]);
        assert!((red.entropy(1e-12) - 1.0).abs() < 1e-15);
        let m = ComplexMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
        let red = Reduced::new(&m);
        assert_eq!(red.entropy(1e-12), 0.0);
        // log is zero on the kernel and log₂1 = 0 on the support
        assert!(max_abs(&red.log2(1e-12)) < 1e-15);
    }
}
