//! Closed-form concurrence and entanglement of formation for two qubits.

use super::binary_entropy;
use crate::error::{Error, Result};
use crate::linalg::{self, pauli, ComplexMatrix};
use crate::states::DensityMatrix;

fn check_two_qubits(rho: &DensityMatrix) -> Result<()> {
    let d = rho.dims();
    if d.a != 2 || d.b != 2 {
        return Err(Error::dimension(format!(
            "closed form needs 2x2 dims, got {}x{}",
            d.a, d.b
        )));
    }
    Ok(())
}

/// `max(0, λ₁ − λ₂ − λ₃ − λ₄)` with `λ` the descending square roots of the
/// spectrum of `√ρ ρ̃ √ρ`, where `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    check_two_qubits(rho)?;
    let yy = linalg::tensor_product(&pauli::y(), &pauli::y())?;
    let m = rho.matrix();
    let tilde = &yy * m.conjugate() * &yy;
    let sqrt_rho = linalg::hermitian_eig(m)?.map_values(|x| x.max(0.0).sqrt());
    let r: ComplexMatrix = linalg::symmetrize(&(&sqrt_rho * tilde * &sqrt_rho));
    let lambdas: Vec<f64> = linalg::hermitian_eig(&r)?
        .values
        .iter()
        .map(|&x| x.max(0.0).sqrt())
        .collect();
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// `h((1 + √(1 − C²))/2)` with `h` the binary entropy.
pub fn wootters_eof(rho: &DensityMatrix) -> Result<f64> {
    let c = concurrence(rho)?.min(1.0);
    Ok(binary_entropy(0.5 * (1.0 + (1.0 - c * c).sqrt())))
}
