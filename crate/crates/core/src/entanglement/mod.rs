//! Entropies, pure-state entanglement and the entanglement of formation.

mod kernel;
mod roof;
mod wootters;

pub(crate) use kernel::Reduced;
pub(crate) use roof::pick_lowest;
pub use roof::{eof_minimize, eof_minimize_from, EoFResult, EoFSummary, RoofObjective};
pub use wootters::{concurrence, wootters_eof};

use serde::{Deserialize, Serialize};

use crate::config::OptimizerConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, DEFAULT_LOG_FLOOR};
use crate::states::{DensityMatrix, Ensemble, PureState};

/// `−Σ λ log₂ λ` over entries above `floor`.
pub fn entropy_of_spectrum(values: &[f64], floor: f64) -> f64 {
    let s: f64 = values.iter().filter(|&&x| x > floor).map(|&x| -x * x.log2()).sum();
    s.max(0.0)
}

/// Binary entropy `h(x) = −x log₂ x − (1−x) log₂(1−x)`.
pub fn binary_entropy(x: f64) -> f64 {
    entropy_of_spectrum(&[x, 1.0 - x], 0.0)
}

/// Von Neumann entropy of a density matrix, in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let eig = linalg::eig_unchecked(rho.matrix().clone());
    entropy_of_spectrum(&eig.values, DEFAULT_LOG_FLOOR)
}

/// Entropy of an arbitrary PSD matrix, normalized by its trace.
pub fn matrix_entropy(m: &ComplexMatrix) -> Result<f64> {
    let eig = linalg::hermitian_eig(m)?;
    if let Some(&lowest) = eig.values.last() {
        if lowest < -linalg::PSD_SLACK {
            return Err(Error::NotPositive { eigenvalue: lowest });
        }
    }
    let t: f64 = eig.values.iter().sum();
    let spectrum: Vec<f64> = eig.values.iter().map(|x| x / t).collect();
    Ok(entropy_of_spectrum(&spectrum, DEFAULT_LOG_FLOOR))
}

/// `E(ψ) = S(Tr_B |ψ⟩⟨ψ|)`, computed from the Schmidt spectrum.
pub fn pure_entanglement(psi: &PureState) -> f64 {
    Reduced::new(&psi.matrix_view()).entropy(DEFAULT_LOG_FLOOR)
}

/// `Σ p_i E(ψ_i)`.
pub fn average_entanglement(ens: &Ensemble) -> f64 {
    ens.iter().map(|(p, psi)| p * pure_entanglement(psi)).sum()
}

/// Outcome of comparing `Σ p_i E_F(ρ_i)` with `E_F(Σ p_i ρ_i)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvexityGap {
    pub mixture_eof: f64,
    pub component_eofs: Vec<f64>,
    pub average_component_eof: f64,
    /// `average_component_eof − mixture_eof`; non-negative up to optimizer slack.
    pub gap: f64,
}

/// Convexity gap with the optimizer on every term.
pub fn convexity_gap(components: &[(f64, DensityMatrix)], cfg: &OptimizerConfig) -> Result<ConvexityGap> {
    let mut index = 0u64;
    convexity_gap_with(components, |rho| {
        let local = cfg
            .clone()
            .with_seed(crate::rng::derive_seed(cfg.seed, "convexity", index));
        index += 1;
        eof_minimize(rho, &local).map(|r| r.value)
    })
}

/// Convexity gap with a caller-supplied EoF evaluator (for example the two-qubit closed form).
pub fn convexity_gap_with(
    components: &[(f64, DensityMatrix)],
    mut eof: impl FnMut(&DensityMatrix) -> Result<f64>,
) -> Result<ConvexityGap> {
    let Some((_, first)) = components.first() else {
        return Err(Error::validation(
            "convexity gap needs at least one component",
            f64::NAN,
        ));
    };
    let dims = first.dims();
    let total: f64 = components.iter().map(|(p, _)| p).sum();
    if components.iter().any(|(p, _)| !(*p > 0.0)) || (total - 1.0).abs() > crate::states::WEIGHT_SUM_TOLERANCE {
        return Err(Error::validation(
            "mixture weights must be positive and sum to 1",
            (total - 1.0).abs(),
        ));
    }
    let n = dims.total();
    let mut mixture = ComplexMatrix::zeros(n, n);
    for (p, rho) in components {
        if rho.dims() != dims {
            return Err(Error::dimension("all components must share dimensions"));
        }
        mixture += rho.matrix() * linalg::c64(*p, 0.0);
    }
    let mixture = crate::states::validate_density(mixture, dims)?;
    let component_eofs = components.iter().map(|(_, rho)| eof(rho)).collect::<Result<Vec<_>>>()?;
    let average_component_eof = components
        .iter()
        .zip(&component_eofs)
        .map(|((p, _), e)| p * e)
        .sum::<f64>();
    let mixture_eof = eof(&mixture)?;
    Ok(ConvexityGap {
        mixture_eof,
        component_eofs,
        average_component_eof,
        gap: average_component_eof - mixture_eof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, BipartiteDims, ComplexVector};
    use crate::states::{sample_density, sample_haar_pure, validate_density};
    use approx::assert_abs_diff_eq;

    fn d22() -> BipartiteDims {
        BipartiteDims::new(2, 2).unwrap()
    }

    fn diag_density(values: &[f64], dims: BipartiteDims) -> DensityMatrix {
        let m = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
            values.len(),
            values.iter().map(|&v| c64(v, 0.0)),
        ));
        validate_density(m, dims).unwrap()
    }

    #[test]
    fn entropy_of_maximally_mixed_qubit() {
        let rho = diag_density(&[0.5, 0.5], BipartiteDims::new(2, 1).unwrap());
        assert_abs_diff_eq!(von_neumann_entropy(&rho), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn entropy_of_pure_projector_is_zero() {
        let psi = sample_haar_pure(d22(), 4);
        assert_abs_diff_eq!(von_neumann_entropy(&psi.density()), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_of_quarter_three_quarters() {
        let rho = diag_density(&[0.25, 0.75], BipartiteDims::new(2, 1).unwrap());
        let expected = -(0.25_f64 * 0.25_f64.log2() + 0.75 * 0.75_f64.log2());
        assert_abs_diff_eq!(von_neumann_entropy(&rho), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(von_neumann_entropy(&rho), 0.811_278_124_459_132_8, epsilon = 1e-14);
    }

    #[test]
    fn entropy_is_bounded_by_log_dimension() {
        for seed in 0..10 {
            let rho = sample_density(BipartiteDims::new(2, 3).unwrap(), 6, seed).unwrap();
            let s = von_neumann_entropy(&rho);
            assert!((0.0..=6f64.log2() + 1e-12).contains(&s));
        }
    }

    #[test]
    fn bell_state_has_one_ebit() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = PureState::new(
            d22(),
            ComplexVector::from_vec(vec![c64(s, 0.), c64(0., 0.), c64(0., 0.), c64(s, 0.)]),
        )
        .unwrap();
        assert_abs_diff_eq!(pure_entanglement(&psi), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn product_state_has_no_entanglement() {
        let a = ComplexVector::from_vec(vec![c64(0.6, 0.), c64(0., 0.8)]);
        let b = ComplexVector::from_vec(vec![c64(1.0, 0.), c64(1.0, 0.), c64(0.0, 1.0)]);
        let psi = PureState::product(&a, &b).unwrap();
        assert_abs_diff_eq!(pure_entanglement(&psi), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn uneven_superposition_gives_binary_entropy() {
        let v = ComplexVector::from_vec(vec![
            c64((1.0f64 / 3.0).sqrt(), 0.),
            c64(0., 0.),
            c64(0., 0.),
            c64((2.0f64 / 3.0).sqrt(), 0.),
        ]);
        let psi = PureState::new(d22(), v).unwrap();
        let h = -(1.0 / 3.0) * (1.0f64 / 3.0).log2() - (2.0 / 3.0) * (2.0f64 / 3.0).log2();
        assert_abs_diff_eq!(pure_entanglement(&psi), h, epsilon = 1e-14);
        assert_abs_diff_eq!(h, 0.918_295_834_054_489_6, epsilon = 1e-15);
    }

    #[test]
    fn both_reductions_give_same_entanglement() {
        for seed in 0..5 {
            let psi = sample_haar_pure(BipartiteDims::new(2, 3).unwrap(), seed);
            let rho = psi.projector();
            let sa = matrix_entropy(&linalg::partial_trace(&rho, psi.dims(), linalg::Subsystem::A).unwrap()).unwrap();
            let sb = matrix_entropy(&linalg::partial_trace(&rho, psi.dims(), linalg::Subsystem::B).unwrap()).unwrap();
            assert_abs_diff_eq!(sa, sb, epsilon = 1e-10);
            assert_abs_diff_eq!(pure_entanglement(&psi), sa, epsilon = 1e-10);
        }
    }

    #[test]
    fn average_of_single_state() {
        let psi = sample_haar_pure(d22(), 12);
        let e = pure_entanglement(&psi);
        assert_abs_diff_eq!(average_entanglement(&Ensemble::pure(psi)), e, epsilon = 1e-15);
    }

    #[test]
    fn average_of_product_mixture_is_zero() {
        let p0 = PureState::product(
            &ComplexVector::from_vec(vec![c64(1., 0.), c64(0., 0.)]),
            &ComplexVector::from_vec(vec![c64(1., 0.), c64(0., 0.)]),
        )
        .unwrap();
        let p1 = PureState::product(
            &ComplexVector::from_vec(vec![c64(0., 0.), c64(1., 0.)]),
            &ComplexVector::from_vec(vec![c64(0., 0.), c64(1., 0.)]),
        )
        .unwrap();
        let rho = diag_density(&[0.5, 0.0, 0.0, 0.5], d22());
        let ens = Ensemble::new(vec![0.5, 0.5], vec![p0, p1], rho).unwrap();
        assert_eq!(average_entanglement(&ens), 0.0);
    }

    #[test]
    fn convexity_gap_with_closed_form_is_nonnegative() {
        for seed in 0..20 {
            let parts: Vec<(f64, DensityMatrix)> = [0.2, 0.5, 0.3]
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    (
                        p,
                        sample_density(d22(), 1 + (i + seed as usize) % 4, seed * 10 + i as u64).unwrap(),
                    )
                })
                .collect();
            let gap = convexity_gap_with(&parts, wootters_eof).unwrap();
            assert!(gap.gap >= -1e-10, "seed {seed}: gap {}", gap.gap);
        }
    }

    #[test]
    fn convexity_gap_of_identical_components() {
        let rho = sample_density(d22(), 4, 3).unwrap();
        let parts = vec![(0.4, rho.clone()), (0.6, rho)];
        let cfg = OptimizerConfig::default().with_seed(3).with_restarts(4);
        let gap = convexity_gap(&parts, &cfg).unwrap();
        assert!(gap.gap.abs() <= 2e-7, "gap {}", gap.gap);
    }

    #[test]
    fn convexity_gap_of_pure_components_mixing_to_separable() {
        // Bell states Φ± mix to ½(|00⟩⟨00| + |11⟩⟨11|)
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::new(
            d22(),
            ComplexVector::from_vec(vec![c64(s, 0.), c64(0., 0.), c64(0., 0.), c64(s, 0.)]),
        )
        .unwrap();
        let minus = PureState::new(
            d22(),
            ComplexVector::from_vec(vec![c64(s, 0.), c64(0., 0.), c64(0., 0.), c64(-s, 0.)]),
        )
        .unwrap();
        let parts = vec![(0.5, plus.density()), (0.5, minus.density())];
        let cfg = OptimizerConfig::default().with_seed(5).with_restarts(4);
        let gap = convexity_gap(&parts, &cfg).unwrap();
        assert_abs_diff_eq!(gap.average_component_eof, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(gap.gap, 1.0, epsilon = 1e-6);
    }
}
