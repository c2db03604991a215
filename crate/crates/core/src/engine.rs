//! Assembly and time stepping of the coupled Galerkin system.
//!
//! For every constituent `i` and mode `k` the coefficients obey
//!
//! ```text
//! Σ_l M_i,kl ċ_il + Σ_j κ_ij ċ_jk = b_ik
//! b_ik = ∫ρ_i f_i·ψ_k + Σ_j γ_ij ∫(v_j − v_i)·ψ_k − ∫ρ_i (v_i·∇)v_i·ψ_k − Σ_j μ_ij c_jk
//! ```
//!
//! with `M_i = ∫ρ_i ψ_k·ψ_l`. The basis is orthonormal for `∫∇u:∇w`, so the
//! elastic and viscous blocks reduce to multiples of the identity and the
//! L² Gram matrix is `diag(1/λ_k)`.

use log::warn;
use thiserror::Error;

use crate::basis::{BasisError, GridVectorField, SpectralBasis};
use crate::linalg::{Cholesky, LinalgError, SquareMatrix};
use crate::mixture::{ForcingSpec, InitialData, MixtureParams};
use crate::scalar::Real;
use crate::transport::{transport, DensityField, TransportError, CFL_CELLS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("Galerkin matrix lost positive definiteness: {0}")]
    FactorizationFailed(LinalgError),
    #[error("state has {got} constituents but the parameters describe {expected}")]
    ConstituentMismatch { expected: usize, got: usize },
    #[error("state has {got} modes per constituent but the basis has {expected}")]
    ModeMismatch { expected: usize, got: usize },
    #[error("empty basis: at least one mode is required")]
    EmptyBasis,
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("end time {t_end} precedes the current time {t}")]
    InvalidEndTime { t: f64, t_end: f64 },
    #[error("non-finite velocity coefficients at t = {t}")]
    NonFinite { t: f64 },
}

impl From<LinalgError> for EngineError {
    fn from(e: LinalgError) -> Self {
        EngineError::FactorizationFailed(e)
    }
}

/// Galerkin coefficients `c_ik`, one row per constituent.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityCoeffs<T> {
    n: usize,
    m: usize,
    data: Vec<T>,
}

impl<T: Real> VelocityCoeffs<T> {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            data: vec![T::zero(); n * m],
        }
    }

    /// Builds from per-constituent rows of equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, EngineError> {
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(EngineError::ModeMismatch {
                expected: m,
                got: bad.len(),
            });
        }
        Ok(Self {
            n: rows.len(),
            m,
            data: rows.concat(),
        })
    }

    pub(crate) fn from_flat(n: usize, m: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), n * m);
        Self { n, m, data }
    }

    /// Number of constituents.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of modes per constituent.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self + s·rate`.
    pub fn advanced(&self, s: T, rate: &[T]) -> Self {
        debug_assert_eq!(rate.len(), self.data.len());
        Self {
            n: self.n,
            m: self.m,
            data: self
                .data
                .iter()
                .zip(rate)
                .map(|(&c, &r)| c + s * r)
                .collect(),
        }
    }
}

/// Velocity coefficients and densities of every constituent at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState<T> {
    pub t: T,
    pub coeffs: VelocityCoeffs<T>,
    pub densities: Vec<DensityField<T>>,
    pub step_index: u64,
}

impl<T: Real> SimState<T> {
    /// State at `t = 0` built from validated initial data.
    pub fn from_initial(data: &InitialData<T>) -> Result<Self, EngineError> {
        let coeffs = VelocityCoeffs::from_rows(&data.v0)?;
        let densities = data
            .rho0
            .iter()
            .map(|g| DensityField::new(g.clone(), data.rho_minus, data.rho_plus))
            .collect();
        Ok(Self {
            t: T::zero(),
            coeffs,
            densities,
            step_index: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.densities.len()
    }

    /// Velocity of each constituent on the grid.
    pub fn velocities(
        &self,
        basis: &SpectralBasis<T>,
    ) -> Result<Vec<GridVectorField<T>>, EngineError> {
        velocities(&self.coeffs, basis)
    }
}

/// Block matrix `A` and right-hand side `b` of `A ċ = b`.
#[derive(Debug, Clone)]
pub struct GalerkinSystem<T> {
    pub a: SquareMatrix<T>,
    pub b: Vec<T>,
}

fn velocities<T: Real>(
    coeffs: &VelocityCoeffs<T>,
    basis: &SpectralBasis<T>,
) -> Result<Vec<GridVectorField<T>>, EngineError> {
    (0..coeffs.n())
        .map(|i| basis.synthesize(coeffs.row(i)).map_err(EngineError::from))
        .collect()
}

fn check_shapes<T: Real>(
    coeffs: &VelocityCoeffs<T>,
    densities: &[DensityField<T>],
    params: &MixtureParams<T>,
    basis: &SpectralBasis<T>,
) -> Result<(), EngineError> {
    if basis.is_empty() {
        return Err(EngineError::EmptyBasis);
    }
    let n = params.n();
    for got in [coeffs.n(), densities.len()] {
        if got != n {
            return Err(EngineError::ConstituentMismatch { expected: n, got });
        }
    }
    if coeffs.m() != basis.len() {
        return Err(EngineError::ModeMismatch {
            expected: basis.len(),
            got: coeffs.m(),
        });
    }
    Ok(())
}

/// `∫ρ g·ψ_k` for every mode, by collocation.
fn weighted_projection<T: Real>(
    rho: &DensityField<T>,
    g: &GridVectorField<T>,
    basis: &SpectralBasis<T>,
) -> Result<Vec<T>, EngineError> {
    Ok(basis.inner_products(&g.weighted(rho.values()))?)
}

fn assemble_parts<T: Real>(
    t: T,
    coeffs: &VelocityCoeffs<T>,
    densities: &[DensityField<T>],
    params: &MixtureParams<T>,
    forcing: &ForcingSpec<T>,
    basis: &SpectralBasis<T>,
) -> Result<GalerkinSystem<T>, EngineError> {
    check_shapes(coeffs, densities, params, basis)?;
    let n = params.n();
    let m = basis.len();
    let lambda = basis.eigenvalues();
    let mut a = SquareMatrix::zeros(n * m);
    let mut b = vec![T::zero(); n * m];

    for i in 0..n {
        let rho = &densities[i];
        let mass = basis.mass_matrix(&rho.grid)?;
        for k in 0..m {
            for l in 0..m {
                a[(i * m + k, i * m + l)] = mass[(k, l)];
            }
        }
        for j in 0..n {
            let kij = params.kappa[(i, j)];
            for k in 0..m {
                a[(i * m + k, j * m + k)] += kij;
            }
        }

        let ci = coeffs.row(i);
        let bi = &mut b[i * m..(i + 1) * m];
        if !forcing.per_constituent[i].is_zero() {
            let f = forcing.field(i, basis, t);
            for (bk, p) in bi.iter_mut().zip(weighted_projection(rho, &f, basis)?) {
                *bk += p;
            }
        }
        if ci.iter().any(|c| *c != T::zero()) {
            let v = basis.synthesize(ci)?;
            let conv = basis.convective_from_coeffs(ci, &v)?;
            for (bk, p) in bi.iter_mut().zip(weighted_projection(rho, &conv, basis)?) {
                *bk -= p;
            }
        }
        for j in 0..n {
            let cj = coeffs.row(j);
            let (g, mu) = (params.gamma[(i, j)], params.mu[(i, j)]);
            for k in 0..m {
                bi[k] += g * (cj[k] - ci[k]) / lambda[k] - mu * cj[k];
            }
        }
    }
    Ok(GalerkinSystem { a, b })
}

/// Assembles `A` and `b` at the state's time.
pub fn assemble<T: Real>(
    state: &SimState<T>,
    params: &MixtureParams<T>,
    forcing: &ForcingSpec<T>,
    basis: &SpectralBasis<T>,
) -> Result<GalerkinSystem<T>, EngineError> {
    assemble_parts(
        state.t,
        &state.coeffs,
        &state.densities,
        params,
        forcing,
        basis,
    )
}

/// Solves `A ċ = b` by Cholesky factorization.
pub fn solve_system<T: Real>(sys: &GalerkinSystem<T>) -> Result<Vec<T>, EngineError> {
    let chol = Cholesky::factor(&sys.a)?;
    Ok(chol.solve(&sys.b)?)
}

fn rate<T: Real>(
    t: T,
    coeffs: &VelocityCoeffs<T>,
    densities: &[DensityField<T>],
    params: &MixtureParams<T>,
    forcing: &ForcingSpec<T>,
    basis: &SpectralBasis<T>,
) -> Result<Vec<T>, EngineError> {
    solve_system(&assemble_parts(
        t, coeffs, densities, params, forcing, basis,
    )?)
}

/// `ċ` at the state's time, as a coefficient matrix.
pub fn coefficient_rate<T: Real>(
    state: &SimState<T>,
    params: &MixtureParams<T>,
    forcing: &ForcingSpec<T>,
    basis: &SpectralBasis<T>,
) -> Result<VelocityCoeffs<T>, EngineError> {
    let r = solve_system(&assemble(state, params, forcing, basis)?)?;
    Ok(VelocityCoeffs::from_flat(state.n(), basis.len(), r))
}

fn transport_all<T: Real>(
    densities: &[DensityField<T>],
    v: &[GridVectorField<T>],
    dt: T,
) -> Result<Vec<DensityField<T>>, EngineError> {
    densities
        .iter()
        .zip(v)
        .map(|(rho, vi)| Ok(transport(rho, vi, dt)?.checked()?))
        .collect()
}

/// One Strang-split step: half-step transport, RK2 midpoint update of the
/// coefficients with the densities frozen, half-step transport with the new
/// velocities.
pub fn step<T: Real>(
    state: &SimState<T>,
    dt: T,
    params: &MixtureParams<T>,
    forcing: &ForcingSpec<T>,
    basis: &SpectralBasis<T>,
) -> Result<SimState<T>, EngineError> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(EngineError::InvalidStep(dt.to_f64_lossy()));
    }
    check_shapes(&state.coeffs, &state.densities, params, basis)?;
    let half = T::lit(0.5) * dt;
    let v0 = state.velocities(basis)?;
    let rho_half = transport_all(&state.densities, &v0, half)?;

    let k1 = rate(state.t, &state.coeffs, &rho_half, params, forcing, basis)?;
    let mid = state.coeffs.advanced(half, &k1);
    let k2 = rate(state.t + half, &mid, &rho_half, params, forcing, basis)?;
    let coeffs = state.coeffs.advanced(dt, &k2);
    let t = state.t + dt;
    if !coeffs.is_finite() {
        return Err(EngineError::NonFinite {
            t: t.to_f64_lossy(),
        });
    }

    let v1 = velocities(&coeffs, basis)?;
    let densities = transport_all(&rho_half, &v1, half)?;
    Ok(SimState {
        t,
        coeffs,
        densities,
        step_index: state.step_index + 1,
    })
}

/// Largest step whose characteristic displacement stays within `cells`
/// grid cells for the state's current velocity. Infinite at rest.
pub fn suggested_dt<T: Real>(
    state: &SimState<T>,
    basis: &SpectralBasis<T>,
    cells: T,
) -> Result<T, EngineError> {
    let mut vmax = T::zero();
    for v in state.velocities(basis)? {
        vmax = vmax.max(v.max_magnitude());
    }
    Ok(if vmax > T::zero() {
        cells * basis.spacing() / vmax
    } else {
        T::infinity()
    })
}

/// Receives snapshots while a run progresses.
pub trait Observer<T> {
    fn observe(&mut self, state: &SimState<T>) -> Result<(), EngineError>;
}

impl<T, F> Observer<T> for F
where
    F: FnMut(&SimState<T>) -> Result<(), EngineError>,
{
    fn observe(&mut self, state: &SimState<T>) -> Result<(), EngineError> {
        self(state)
    }
}

/// Time discretization of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSchedule<T> {
    pub dt: T,
    pub t_end: T,
    /// Observers fire every this many steps (and always at the start and the end).
    pub output_every: u64,
}

impl<T: Real> RunSchedule<T> {
    /// Number of steps of size `dt` from `t0` to `t_end`; a last partial
    /// step is taken when the span is not a whole multiple of `dt`.
    pub fn steps_from(&self, t0: T) -> u64 {
        let span = (self.t_end - t0) / self.dt;
        let whole = span.round();
        let count = if (span - whole).abs() <= T::lit(1e-9) * whole.max(T::one()) {
            whole
        } else {
            span.ceil()
        };
        count.to_u64().unwrap_or(0)
    }
}

/// Advances `initial` to `schedule.t_end`, handing snapshots to `observer`.
pub fn run<T: Real>(
    initial: &SimState<T>,
    schedule: RunSchedule<T>,
    params: &MixtureParams<T>,
    forcing: &ForcingSpec<T>,
    basis: &SpectralBasis<T>,
    observer: &mut dyn Observer<T>,
) -> Result<SimState<T>, EngineError> {
    let dt = schedule.dt;
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(EngineError::InvalidStep(dt.to_f64_lossy()));
    }
    if schedule.t_end < initial.t {
        return Err(EngineError::InvalidEndTime {
            t: initial.t.to_f64_lossy(),
            t_end: schedule.t_end.to_f64_lossy(),
        });
    }
    check_shapes(&initial.coeffs, &initial.densities, params, basis)?;
    if suggested_dt(initial, basis, T::lit(CFL_CELLS))? < dt {
        warn!("time step {dt} exceeds the CFL-suggested step for the initial velocity");
    }
    let every = schedule.output_every.max(1);
    let steps = schedule.steps_from(initial.t);
    observer.observe(initial)?;
    let mut state = initial.clone();
    for s in 1..=steps {
        let target = if s == steps {
            schedule.t_end
        } else {
            initial.t + T::from_count(s as usize) * dt
        };
        let mut next = step(&state, target - state.t, params, forcing, basis)?;
        next.t = target;
        state = next;
        if s % every == 0 || s == steps {
            observer.observe(&state)?;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{ModeRef, Parity, ScalarGrid};
    use crate::mixture::{validate_params, Forcing};

    fn params(mu: f64, kappa: f64) -> MixtureParams<f64> {
        let m = |x: f64| SquareMatrix::from_diagonal(&[x]);
        validate_params(m(mu), m(kappa), SquareMatrix::zeros(1)).unwrap()
    }

    fn uniform(n: usize, rho: f64) -> DensityField<f64> {
        DensityField::from_grid(ScalarGrid::constant(n, rho))
    }

    fn single_mode_state(basis: &SpectralBasis<f64>, mode: ModeRef, c0: f64) -> SimState<f64> {
        let mut c = vec![0.0; basis.len()];
        c[basis.locate(mode).unwrap().0] = c0;
        SimState {
            t: 0.0,
            coeffs: VelocityCoeffs::from_rows(&[c]).unwrap(),
            densities: vec![uniform(basis.grid_size(), 1.0)],
            step_index: 0,
        }
    }

    #[test]
    fn unit_density_matrix_is_gram_plus_kappa() {
        let basis = SpectralBasis::<f64>::build(16, 3).unwrap();
        let state = single_mode_state(&basis, ModeRef::new(1, 0, Parity::Cos), 0.0);
        let sys = assemble(&state, &params(1.0, 0.7), &ForcingSpec::zero(1), &basis).unwrap();
        let lam = basis.eigenvalues();
        for k in 0..basis.len() {
            for l in 0..basis.len() {
                let want = if k == l { 1.0 / lam[k] + 0.7 } else { 0.0 };
                assert!((sys.a[(k, l)] - want).abs() < 1e-13, "{k},{l}");
            }
        }
        assert!(sys.b.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn equal_states_feel_no_friction() {
        let basis = SpectralBasis::<f64>::build(16, 3).unwrap();
        let g = SquareMatrix::from_rows(&[vec![0.0, 0.4], vec![0.4, 0.0]]).unwrap();
        let p = validate_params(SquareMatrix::identity(2), SquareMatrix::identity(2), g).unwrap();
        let mut c = vec![0.0; basis.len()];
        c[2] = 0.3;
        let state = SimState {
            t: 0.0,
            coeffs: VelocityCoeffs::from_rows(&[c.clone(), c]).unwrap(),
            densities: vec![uniform(16, 1.0), uniform(16, 1.0)],
            step_index: 0,
        };
        let with = assemble(&state, &p, &ForcingSpec::zero(2), &basis).unwrap();
        let p0 = validate_params(
            SquareMatrix::identity(2),
            SquareMatrix::identity(2),
            SquareMatrix::zeros(2),
        )
        .unwrap();
        let without = assemble(&state, &p0, &ForcingSpec::zero(2), &basis).unwrap();
        assert_eq!(with.b, without.b);
    }

    #[test]
    fn solve_trivial_systems() {
        let b = vec![1.0, -2.0, 3.5];
        let sys = GalerkinSystem {
            a: SquareMatrix::identity(3),
            b: b.clone(),
        };
        assert_eq!(solve_system(&sys).unwrap(), b);
        let sys = GalerkinSystem {
            a: SquareMatrix::identity(3).scaled(2.0),
            b: vec![1.0; 3],
        };
        for x in solve_system(&sys).unwrap() {
            assert!((x - 0.5f64).abs() < 1e-15);
        }
        let sys = GalerkinSystem {
            a: SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap(),
            b: vec![1.0, 1.0],
        };
        assert!(matches!(
            solve_system(&sys),
            Err(EngineError::FactorizationFailed(_))
        ));
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let basis = SpectralBasis::<f64>::build(16, 3).unwrap();
        let mut state = single_mode_state(&basis, ModeRef::new(1, 0, Parity::Cos), 0.0);
        state.densities[0] =
            DensityField::from_grid(ScalarGrid::from_fn(16, |x: f64, _| 1.5 + 0.5 * x.cos()));
        let next = step(
            &state,
            0.1,
            &params(1.0, 1.0),
            &ForcingSpec::zero(1),
            &basis,
        )
        .unwrap();
        assert_eq!(next.coeffs, state.coeffs);
        assert_eq!(next.densities, state.densities);
        assert_eq!(next.t, 0.1);
        assert_eq!(next.step_index, 1);
    }

    #[test]
    fn single_mode_decays_at_closed_form_rate() {
        let basis = SpectralBasis::<f64>::build(16, 3).unwrap();
        let mode = ModeRef::new(2, 1, Parity::Sin);
        let (mu, kappa) = (0.8, 0.3);
        let lam = 5.0;
        let rate = mu * lam / (1.0 + kappa * lam);
        let err = |dt: f64| {
            let mut s = single_mode_state(&basis, mode, 1.0);
            let steps = (1.0 / dt).round() as usize;
            for _ in 0..steps {
                s = step(&s, dt, &params(mu, kappa), &ForcingSpec::zero(1), &basis).unwrap();
            }
            let i = basis.locate(mode).unwrap().0;
            (s.coeffs.row(0)[i] - (-rate).exp()).abs()
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e1 < 1e-4, "{e1}");
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.8, "{ratio}");
    }

    #[test]
    fn run_handles_zero_length_and_partial_steps() {
        let basis = SpectralBasis::<f64>::build(16, 3).unwrap();
        let s0 = single_mode_state(&basis, ModeRef::new(1, 1, Parity::Cos), 0.5);
        let p = params(1.0, 1.0);
        let f = ForcingSpec::zero(1);
        let mut seen = Vec::new();
        let mut obs = |s: &SimState<f64>| {
            seen.push(s.t);
            Ok(())
        };
        let sched = RunSchedule {
            dt: 0.1,
            t_end: 0.0,
            output_every: 1,
        };
        let end = run(&s0, sched, &p, &f, &basis, &mut obs).unwrap();
        assert_eq!(end, s0);
        assert_eq!(seen, vec![0.0]);

        let mut seen = Vec::new();
        let mut obs = |s: &SimState<f64>| {
            seen.push(s.t);
            Ok(())
        };
        let sched = RunSchedule {
            dt: 0.1,
            t_end: 0.25,
            output_every: 2,
        };
        let end = run(&s0, sched, &p, &f, &basis, &mut obs).unwrap();
        assert_eq!(end.step_index, 3);
        assert_eq!(end.t, 0.25);
        assert_eq!(seen, vec![0.0, 0.2, 0.25]);
        assert!(matches!(
            run(
                &end,
                RunSchedule {
                    t_end: 0.1,
                    ..sched
                },
                &p,
                &f,
                &basis,
                &mut |_: &SimState<f64>| Ok(())
            ),
            Err(EngineError::InvalidEndTime { .. })
        ));
    }

    #[test]
    fn forcing_drives_a_resting_fluid() {
        let basis = SpectralBasis::<f64>::build(16, 3).unwrap();
        let s0 = single_mode_state(&basis, ModeRef::new(1, 0, Parity::Cos), 0.0);
        let f = ForcingSpec {
            per_constituent: vec![Forcing::Mode {
                k: (1, 0),
                parity: Parity::Cos,
                amplitude: 1.0,
                omega: 0.0,
            }],
        };
        let s1 = step(&s0, 0.01, &params(1.0, 1.0), &f, &basis).unwrap();
        let (i, _) = basis.locate(ModeRef::new(1, 0, Parity::Cos)).unwrap();
        assert!(s1.coeffs.row(0)[i] > 0.0);
        let others: f64 = s1
            .coeffs
            .row(0)
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, c)| c.abs())
            .sum();
        assert!(others < 1e-14);
    }

    #[test]
    fn rejects_mismatched_shapes_and_bad_steps() {
        let basis = SpectralBasis::<f64>::build(16, 3).unwrap();
        let s0 = single_mode_state(&basis, ModeRef::new(1, 0, Parity::Cos), 0.1);
        let p2 = validate_params(
            SquareMatrix::identity(2),
            SquareMatrix::identity(2),
            SquareMatrix::zeros(2),
        )
        .unwrap();
        assert!(matches!(
            step(&s0, 0.1, &p2, &ForcingSpec::zero(2), &basis),
            Err(EngineError::ConstituentMismatch { .. })
        ));
        assert!(matches!(
            step(&s0, -0.1, &params(1.0, 1.0), &ForcingSpec::zero(1), &basis),
            Err(EngineError::InvalidStep(_))
        ));
        let other = SpectralBasis::<f64>::build(16, 2).unwrap();
        assert!(matches!(
            step(&s0, 0.1, &params(1.0, 1.0), &ForcingSpec::zero(1), &other),
            Err(EngineError::ModeMismatch { .. })
        ));
    }

    #[test]
    fn suggested_step_scales_inversely_with_speed() {
        let basis = SpectralBasis::<f64>::build(16, 3).unwrap();
        let s = single_mode_state(&basis, ModeRef::new(1, 0, Parity::Cos), 0.0);
        assert!(suggested_dt(&s, &basis, 1.0).unwrap().is_infinite());
        let s1 = single_mode_state(&basis, ModeRef::new(1, 0, Parity::Cos), 1.0);
        let s2 = single_mode_state(&basis, ModeRef::new(1, 0, Parity::Cos), 2.0);
        let (d1, d2) = (
            suggested_dt(&s1, &basis, 1.0).unwrap(),
            suggested_dt(&s2, &basis, 1.0).unwrap(),
        );
        assert!((d1 / d2 - 2.0).abs() < 1e-12);
    }
}
