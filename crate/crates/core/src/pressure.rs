//! Pressure recovery from the momentum residual.
//!
//! The Galerkin equations make the residual of each momentum balance
//! orthogonal to every resolved divergence-free mode. What remains is, up to
//! the unresolved modes, a gradient, and its potential is the pressure.

use crate::basis::{BasisError, GridVectorField, ScalarGrid, SpectralBasis};
use crate::engine::{EngineError, SimState, VelocityCoeffs};
use crate::mixture::{ForcingSpec, MixtureParams};
use crate::scalar::Real;

/// Pressure of every constituent on the grid, each with zero mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureField<T> {
    pub per_constituent: Vec<ScalarGrid<T>>,
}

/// `R_i = ρ_i f_i − ρ_i ∂_t v_i − ρ_i (v_i·∇)v_i + Σ_j (μ_ij Δv_j + κ_ij Δ∂_t v_j)
/// + Σ_j γ_ij (v_j − v_i)` on the grid, with `∂_t v_i` taken from `dcdt`.
pub fn momentum_residual<T: Real>(
    state: &SimState<T>,
    dcdt: &VelocityCoeffs<T>,
    params: &MixtureParams<T>,
    forcing: &ForcingSpec<T>,
    basis: &SpectralBasis<T>,
) -> Result<Vec<GridVectorField<T>>, EngineError> {
    let n = state.n();
    let m = basis.len();
    for got in [params.n(), dcdt.n(), state.coeffs.n()] {
        if got != n {
            return Err(EngineError::ConstituentMismatch { expected: n, got });
        }
    }
    for got in [dcdt.m(), state.coeffs.m()] {
        if got != m {
            return Err(EngineError::ModeMismatch { expected: m, got });
        }
    }
    let lambda = basis.eigenvalues();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let ci = state.coeffs.row(i);
        let rho = state.densities[i].values();

        // everything that lives in the span of the basis, combined in
        // coefficient space
        let mut linear = vec![T::zero(); m];
        for j in 0..n {
            let (cj, dj) = (state.coeffs.row(j), dcdt.row(j));
            let (mu, kappa, g) = (
                params.mu[(i, j)],
                params.kappa[(i, j)],
                params.gamma[(i, j)],
            );
            for k in 0..m {
                linear[k] -= lambda[k] * (mu * cj[k] + kappa * dj[k]);
                linear[k] += g * (cj[k] - ci[k]);
            }
        }
        let mut r = basis.synthesize(&linear)?;

        let v = basis.synthesize(ci)?;
        let mut inertial = basis.synthesize(dcdt.row(i))?;
        inertial = inertial.add(&basis.convective_from_coeffs(ci, &v)?);
        let f = forcing.field(i, basis, state.t);
        r = r.add(&f.sub(&inertial).weighted(rho));
        out.push(r);
    }
    Ok(out)
}

/// Solves `Δπ = div R` spectrally; the returned potential has zero mean.
pub fn recover_pressure<T: Real>(
    residual: &GridVectorField<T>,
    basis: &SpectralBasis<T>,
) -> Result<ScalarGrid<T>, BasisError> {
    let (_, mut phi) = basis.helmholtz(residual)?;
    let mean = phi.mean();
    for p in phi.data_mut() {
        *p -= mean;
    }
    Ok(phi)
}

/// Pressure of every constituent at the state's instant.
pub fn pressure_at<T: Real>(
    state: &SimState<T>,
    dcdt: &VelocityCoeffs<T>,
    params: &MixtureParams<T>,
    forcing: &ForcingSpec<T>,
    basis: &SpectralBasis<T>,
) -> Result<PressureField<T>, EngineError> {
    let residuals = momentum_residual(state, dcdt, params, forcing, basis)?;
    let per_constituent = residuals
        .iter()
        .map(|r| recover_pressure(r, basis))
        .collect::<Result<_, _>>()?;
    Ok(PressureField { per_constituent })
}

/// `‖R − ∇π − P R‖₂ / ‖R‖₂`, zero for a vanishing residual.
pub fn helmholtz_defect<T: Real>(
    residual: &GridVectorField<T>,
    pressure: &ScalarGrid<T>,
    basis: &SpectralBasis<T>,
) -> Result<T, BasisError> {
    let grad = basis.gradient(pressure)?;
    let leray = basis.leray_project(residual)?;
    let diff = residual.sub(&grad).sub(&leray);
    let norm = residual.norm_sq();
    Ok(if norm > T::zero() {
        (diff.norm_sq() / norm).sqrt()
    } else {
        diff.norm_sq().sqrt()
    })
}
