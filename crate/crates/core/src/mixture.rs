//! Physical parameters of the n-constituent mixture, initial data and body
//! forces, together with the admissibility checks that have to pass before a
//! simulation may start.

use crate::basis::{GridVectorField, ModeRef, Parity, ScalarGrid, SpectralBasis};
use crate::linalg::{symmetric_eigenvalues, SquareMatrix};
use crate::scalar::Real;
use thiserror::Error;

/// Entry-wise tolerance for the symmetry of μ, κ and γ.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

pub const FRICTION_RULE: &str =
    "friction rule: gamma symmetric, zero diagonal, nonnegative off-diagonal";
pub const VISCOSITY_RULE: &str = "viscosity rule: mu symmetric positive definite";
pub const ELASTICITY_RULE: &str = "elasticity rule: kappa symmetric positive definite";
pub const SHAPE_RULE: &str = "shape rule: n x n matrices with finite entries";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("{name} must be a square {n}x{n} matrix matching the constituent count")]
    Shape { name: &'static str, n: usize },
    #[error("constituent count must be at least 1")]
    Empty,
    #[error("{name} has a non-finite entry at ({i}, {j})")]
    NonFinite {
        name: &'static str,
        i: usize,
        j: usize,
    },
    #[error("{name} is not symmetric: |{name}[{i}][{j}] - {name}[{j}][{i}]| = {residual:e} exceeds 1e-12")]
    AsymmetricMatrix {
        name: &'static str,
        i: usize,
        j: usize,
        residual: f64,
    },
    #[error("{name} is not positive definite (smallest eigenvalue {min_eigenvalue})")]
    NotPositiveDefinite {
        name: &'static str,
        min_eigenvalue: f64,
    },
    #[error("gamma[{i}][{j}] = {value} is negative")]
    NegativeFriction { i: usize, j: usize, value: f64 },
    #[error("gamma[{i}][{i}] = {value} must be zero")]
    NonzeroFrictionDiagonal { i: usize, value: f64 },
}

impl ParamsError {
    /// Name of the admissibility rule a rejected parameter set violates.
    pub fn hypothesis(&self) -> &'static str {
        match self {
            ParamsError::AsymmetricMatrix { name: "gamma", .. }
            | ParamsError::NegativeFriction { .. }
            | ParamsError::NonzeroFrictionDiagonal { .. } => FRICTION_RULE,
            ParamsError::AsymmetricMatrix { name: "mu", .. }
            | ParamsError::NotPositiveDefinite { name: "mu", .. } => VISCOSITY_RULE,
            ParamsError::AsymmetricMatrix { .. } | ParamsError::NotPositiveDefinite { .. } => {
                ELASTICITY_RULE
            }
            _ => SHAPE_RULE,
        }
    }
}

/// Validated viscosity, elasticity and friction matrices with their spectral
/// bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams<T> {
    pub mu: SquareMatrix<T>,
    pub kappa: SquareMatrix<T>,
    pub gamma: SquareMatrix<T>,
    pub mu_minus: T,
    pub mu_plus: T,
    pub kappa_minus: T,
    pub kappa_plus: T,
    /// Σ|γ_ij|.
    pub gamma_plus: T,
}

impl<T: Real> MixtureParams<T> {
    pub fn n(&self) -> usize {
        self.mu.dim()
    }

    /// True when μ, κ and γ have no off-diagonal coupling at all.
    pub fn is_diagonal(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| {
            (0..n).all(|j| {
                i == j
                    || (self.mu[(i, j)] == T::zero()
                        && self.kappa[(i, j)] == T::zero()
                        && self.gamma[(i, j)] == T::zero())
            })
        })
    }

    /// Parameters of constituent `i` alone (its diagonal entries).
    pub fn single(&self, i: usize) -> Self {
        let one = |m: &SquareMatrix<T>| SquareMatrix::from_diagonal(&[m[(i, i)]]);
        let mu = one(&self.mu);
        let kappa = one(&self.kappa);
        Self {
            mu_minus: mu[(0, 0)],
            mu_plus: mu[(0, 0)],
            kappa_minus: kappa[(0, 0)],
            kappa_plus: kappa[(0, 0)],
            gamma_plus: T::zero(),
            gamma: SquareMatrix::zeros(1),
            mu,
            kappa,
        }
    }
}

fn check_matrix<T: Real>(
    name: &'static str,
    m: &SquareMatrix<T>,
    n: usize,
) -> Result<(), ParamsError> {
    if m.dim() != n {
        return Err(ParamsError::Shape { name, n });
    }
    for i in 0..n {
        for j in 0..n {
            if !m[(i, j)].is_finite() {
                return Err(ParamsError::NonFinite { name, i, j });
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let r = (m[(i, j)] - m[(j, i)]).abs();
            if r > T::lit(SYMMETRY_TOLERANCE) {
                return Err(ParamsError::AsymmetricMatrix {
                    name,
                    i,
                    j,
                    residual: r.to_f64_lossy(),
                });
            }
        }
    }
    Ok(())
}

fn spd_bounds<T: Real>(name: &'static str, m: &SquareMatrix<T>) -> Result<(T, T), ParamsError> {
    let ev = symmetric_eigenvalues(m);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > T::zero()) {
        return Err(ParamsError::NotPositiveDefinite {
            name,
            min_eigenvalue: lo.to_f64_lossy(),
        });
    }
    Ok((lo, hi))
}

/// Checks symmetry, friction sign pattern and positive definiteness, and
/// computes μ±, κ± and γ⁺.
pub fn validate_params<T: Real>(
    mu: SquareMatrix<T>,
    kappa: SquareMatrix<T>,
    gamma: SquareMatrix<T>,
) -> Result<MixtureParams<T>, ParamsError> {
    let n = mu.dim();
    if n == 0 {
        return Err(ParamsError::Empty);
    }
    check_matrix("mu", &mu, n)?;
    check_matrix("kappa", &kappa, n)?;
    check_matrix("gamma", &gamma, n)?;
    for i in 0..n {
        if gamma[(i, i)] != T::zero() {
            return Err(ParamsError::NonzeroFrictionDiagonal {
                i,
                value: gamma[(i, i)].to_f64_lossy(),
            });
        }
        for j in 0..n {
            if i != j && gamma[(i, j)] < T::zero() {
                return Err(ParamsError::NegativeFriction {
                    i,
                    j,
                    value: gamma[(i, j)].to_f64_lossy(),
                });
            }
        }
    }
    let (mu_minus, mu_plus) = spd_bounds("mu", &mu)?;
    let (kappa_minus, kappa_plus) = spd_bounds("kappa", &kappa)?;
    let gamma_plus = gamma.as_slice().iter().map(|g| g.abs()).sum();
    Ok(MixtureParams {
        mu,
        kappa,
        gamma,
        mu_minus,
        mu_plus,
        kappa_minus,
        kappa_plus,
        gamma_plus,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InitialDataError {
    #[error("constituent {constituent}: density {value} at grid point {index} is not positive")]
    NonpositiveDensity {
        constituent: usize,
        index: usize,
        value: f64,
    },
    #[error("constituent {constituent}: density grid has {got} points, expected {expected}")]
    GridShapeMismatch {
        constituent: usize,
        expected: usize,
        got: usize,
    },
    #[error("constituent {constituent}: non-finite initial value")]
    NonFinite { constituent: usize },
    #[error("constituent {constituent}: mode {mode:?} is not in the basis")]
    UnknownMode { constituent: usize, mode: ModeRef },
    #[error("expected data for {expected} constituents, got {got}")]
    ConstituentCount { expected: usize, got: usize },
}

/// Initial densities and velocity coefficients.
#[derive(Debug, Clone)]
pub struct InitialData<T> {
    pub rho0: Vec<ScalarGrid<T>>,
    /// Per constituent, a full coefficient vector over the basis.
    pub v0: Vec<Vec<T>>,
    pub rho_minus: T,
    pub rho_plus: T,
}

/// Validates raw initial data: every density strictly positive and finite,
/// velocity modes present in the basis. Coefficients given for the same mode
/// twice are summed.
pub fn validate_initial_data<T: Real>(
    rho0: Vec<ScalarGrid<T>>,
    v0: &[Vec<(ModeRef, T)>],
    basis: &SpectralBasis<T>,
) -> Result<InitialData<T>, InitialDataError> {
    if rho0.len() != v0.len() {
        return Err(InitialDataError::ConstituentCount {
            expected: rho0.len(),
            got: v0.len(),
        });
    }
    let npts = basis.grid_size() * basis.grid_size();
    let mut rho_minus = T::infinity();
    let mut rho_plus = T::neg_infinity();
    for (c, rho) in rho0.iter().enumerate() {
        if rho.n() != basis.grid_size() {
            return Err(InitialDataError::GridShapeMismatch {
                constituent: c,
                expected: npts,
                got: rho.n() * rho.n(),
            });
        }
        for (index, &value) in rho.data().iter().enumerate() {
            if !value.is_finite() {
                return Err(InitialDataError::NonFinite { constituent: c });
            }
            if !(value > T::zero()) {
                return Err(InitialDataError::NonpositiveDensity {
                    constituent: c,
                    index,
                    value: value.to_f64_lossy(),
                });
            }
            rho_minus = rho_minus.min(value);
            rho_plus = rho_plus.max(value);
        }
    }
    let mut coeffs = Vec::with_capacity(v0.len());
    for (c, modes) in v0.iter().enumerate() {
        let mut v = vec![T::zero(); basis.len()];
        for &(mode, amp) in modes {
            if !amp.is_finite() {
                return Err(InitialDataError::NonFinite { constituent: c });
            }
            let (idx, sign) = basis.locate(mode).ok_or(InitialDataError::UnknownMode {
                constituent: c,
                mode,
            })?;
            v[idx] += if sign { amp } else { -amp };
        }
        coeffs.push(v);
    }
    Ok(InitialData {
        rho0,
        v0: coeffs,
        rho_minus,
        rho_plus,
    })
}

/// Body force acting on one constituent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forcing<T> {
    Zero,
    /// `amplitude · cos(ω t) · φ(k·x) · k⊥/|k|` with φ = cos or sin; a
    /// divergence-free single Fourier mode with unit-amplitude direction.
    Mode {
        k: (i32, i32),
        parity: Parity,
        amplitude: T,
        omega: T,
    },
}

impl<T: Real> Forcing<T> {
    pub fn eval(&self, x: (T, T), t: T) -> (T, T) {
        match *self {
            Forcing::Zero => (T::zero(), T::zero()),
            Forcing::Mode {
                k,
                parity,
                amplitude,
                omega,
            } => {
                let (k1, k2) = (T::lit(k.0 as f64), T::lit(k.1 as f64));
                let norm = (k1 * k1 + k2 * k2).sqrt();
                let phase = k1 * x.0 + k2 * x.1;
                let shape = match parity {
                    Parity::Cos => phase.cos(),
                    Parity::Sin => phase.sin(),
                };
                let s = amplitude * (omega * t).cos() * shape;
                (-s * k2 / norm, s * k1 / norm)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Forcing::Zero => true,
            Forcing::Mode { amplitude, .. } => amplitude == T::zero(),
        }
    }
}

/// Per-constituent body forces.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec<T> {
    pub per_constituent: Vec<Forcing<T>>,
}

impl<T: Real> ForcingSpec<T> {
    pub fn zero(n: usize) -> Self {
        Self {
            per_constituent: vec![Forcing::Zero; n],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.per_constituent.iter().all(Forcing::is_zero)
    }

    /// `f_i(·, t)` sampled on the collocation grid.
    pub fn field(&self, i: usize, basis: &SpectralBasis<T>, t: T) -> GridVectorField<T> {
        let n = basis.grid_size();
        let mut out = GridVectorField::zeros(n);
        let forcing = self.per_constituent[i];
        if forcing.is_zero() {
            return out;
        }
        let h = basis.spacing();
        for a in 0..n {
            for b in 0..n {
                let x = (h * T::from_count(a), h * T::from_count(b));
                let (fx, fy) = forcing.eval(x, t);
                out.x[a * n + b] = fx;
                out.y[a * n + b] = fy;
            }
        }
        out
    }

    /// Forcing restricted to constituent `i`.
    pub fn single(&self, i: usize) -> Self {
        Self {
            per_constituent: vec![self.per_constituent[i]],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> SquareMatrix<f64> {
        SquareMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn eye2() -> SquareMatrix<f64> {
        SquareMatrix::identity(2)
    }

    #[test]
    fn identity_case() {
        let p = validate_params(eye2(), eye2(), SquareMatrix::zeros(2)).unwrap();
        assert_eq!(p.mu_minus, 1.0);
        assert_eq!(p.mu_plus, 1.0);
        assert_eq!(p.gamma_plus, 0.0);
    }

    #[test]
    fn indefinite_kappa_rejected() {
        let err = validate_params(
            eye2(),
            mat(&[&[1.0, 2.0], &[2.0, 1.0]]),
            SquareMatrix::zeros(2),
        )
        .unwrap_err();
        match err {
            ParamsError::NotPositiveDefinite {
                name,
                min_eigenvalue,
            } => {
                assert_eq!(name, "kappa");
                assert!((min_eigenvalue + 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            err_hyp(&eye2(), &mat(&[&[1.0, 2.0], &[2.0, 1.0]])),
            ELASTICITY_RULE
        );
    }

    fn err_hyp(mu: &SquareMatrix<f64>, kappa: &SquareMatrix<f64>) -> &'static str {
        validate_params(mu.clone(), kappa.clone(), SquareMatrix::zeros(2))
            .unwrap_err()
            .hypothesis()
    }

    #[test]
    fn asymmetric_gamma_rejected() {
        let err = validate_params(eye2(), eye2(), mat(&[&[0.0, 0.5], &[0.3, 0.0]])).unwrap_err();
        assert!(matches!(
            err,
            ParamsError::AsymmetricMatrix { name: "gamma", .. }
        ));
        assert_eq!(err.hypothesis(), FRICTION_RULE);
    }

    #[test]
    fn friction_sign_and_diagonal() {
        let err = validate_params(eye2(), eye2(), mat(&[&[0.0, -0.1], &[-0.1, 0.0]])).unwrap_err();
        assert!(matches!(
            err,
            ParamsError::NegativeFriction { i: 0, j: 1, .. }
        ));
        let err = validate_params(eye2(), eye2(), mat(&[&[0.2, 0.0], &[0.0, 0.0]])).unwrap_err();
        assert!(matches!(
            err,
            ParamsError::NonzeroFrictionDiagonal { i: 0, .. }
        ));
    }

    #[test]
    fn shape_mismatch() {
        let err =
            validate_params(eye2(), SquareMatrix::identity(3), SquareMatrix::zeros(2)).unwrap_err();
        assert!(matches!(err, ParamsError::Shape { name: "kappa", .. }));
    }

    /// Eigenvalues of [[a, b], [b, a]] by the quadratic formula.
    fn quadratic_eigs(a: f64, b: f64, d: f64) -> (f64, f64) {
        let tr = a + d;
        let det = a * d - b * b;
        let disc = (tr * tr / 4.0 - det).sqrt();
        (tr / 2.0 - disc, tr / 2.0 + disc)
    }

    #[test]
    fn coupled_bounds_match_quadratic_formula() {
        let p = validate_params(
            mat(&[&[2.0, 1.0], &[1.0, 2.0]]),
            mat(&[&[3.0, 1.0], &[1.0, 3.0]]),
            mat(&[&[0.0, 0.1], &[0.1, 0.0]]),
        )
        .unwrap();
        let (mlo, mhi) = quadratic_eigs(2.0, 1.0, 2.0);
        let (klo, khi) = quadratic_eigs(3.0, 1.0, 3.0);
        assert!((mlo - 1.0).abs() < 1e-15 && (mhi - 3.0).abs() < 1e-15);
        assert!((klo - 2.0).abs() < 1e-15 && (khi - 4.0).abs() < 1e-15);
        assert!((p.mu_minus - mlo).abs() < 1e-13);
        assert!((p.mu_plus - mhi).abs() < 1e-13);
        assert!((p.kappa_minus - klo).abs() < 1e-13);
        assert!((p.kappa_plus - khi).abs() < 1e-13);
        assert!((p.gamma_plus - 0.2).abs() < 1e-15);
    }

    #[test]
    fn f32_parameters() {
        let p = validate_params(
            SquareMatrix::<f32>::identity(2).scaled(2.0),
            SquareMatrix::identity(2),
            SquareMatrix::zeros(2),
        )
        .unwrap();
        assert_eq!(p.mu_minus, 2.0f32);
    }

    fn spd_strategy(n: usize) -> impl Strategy<Value = SquareMatrix<f64>> {
        prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |g| {
            let g = SquareMatrix::from_rows(&g.chunks(n).map(|r| r.to_vec()).collect::<Vec<_>>())
                .unwrap();
            let mut a = g
                .transpose()
                .matmul(&g)
                .add(&SquareMatrix::identity(n).scaled(0.1));
            // exact symmetry
            for i in 0..n {
                for j in 0..i {
                    a[(i, j)] = a[(j, i)];
                }
            }
            a
        })
    }

    proptest! {
        #[test]
        fn quadratic_forms_respect_bounds(
            (mu, kappa, zeta) in (1usize..6).prop_flat_map(|n| (
                spd_strategy(n),
                spd_strategy(n),
                prop::collection::vec(-3.0f64..3.0, n),
            ))
        ) {
            let n = mu.dim();
            let p = validate_params(mu.clone(), kappa.clone(), SquareMatrix::zeros(n)).unwrap();
            let z2: f64 = zeta.iter().map(|z| z * z).sum();
            let q = |m: &SquareMatrix<f64>| -> f64 {
                m.matvec(&zeta).iter().zip(&zeta).map(|(a, b)| a * b).sum()
            };
            prop_assert!(q(&mu) >= p.mu_minus * z2 - 1e-10 * (1.0 + z2));
            prop_assert!(q(&kappa) >= p.kappa_minus * z2 - 1e-10 * (1.0 + z2));
            prop_assert!(q(&mu) <= p.mu_plus * z2 + 1e-10 * (1.0 + z2));
            prop_assert!(p.mu_minus <= p.mu_plus && p.mu_minus > 0.0);

            // idempotent
            let again = validate_params(p.mu.clone(), p.kappa.clone(), p.gamma.clone()).unwrap();
            prop_assert_eq!(&again, &p);

            // power-of-two scaling is exact, general scaling to roundoff
            let s2 = validate_params(mu.scaled(4.0), kappa.clone(), SquareMatrix::zeros(n)).unwrap();
            prop_assert_eq!(s2.mu_minus, 4.0 * p.mu_minus);
            prop_assert_eq!(s2.mu_plus, 4.0 * p.mu_plus);
            let s3 = validate_params(mu.scaled(3.0), kappa, SquareMatrix::zeros(n)).unwrap();
            prop_assert!((s3.mu_minus - 3.0 * p.mu_minus).abs() <= 1e-12 * s3.mu_plus);
            prop_assert!((s3.mu_plus - 3.0 * p.mu_plus).abs() <= 1e-12 * s3.mu_plus);
        }
    }
}
