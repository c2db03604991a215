//! Resolution-independent description of a simulation and its realization
//! on a concrete grid.

use thiserror::Error;

use crate::basis::{check_resolution, BasisError, ModeRef, ScalarGrid, SpectralBasis};
use crate::diagnostics::{DiagnosticsRecord, DiagnosticsTracker, DEFAULT_R_EXPONENT};
use crate::engine::{run, EngineError, Observer, RunSchedule, SimState};
use crate::linalg::SquareMatrix;
use crate::mixture::{
    validate_initial_data, validate_params, ForcingSpec, InitialData, InitialDataError,
    MixtureParams, ParamsError,
};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetupError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    InitialData(#[from] InitialDataError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{what} lists {got} constituents, the mixture has {expected}")]
    ConstituentCount {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid time discretization: {0}")]
    Time(String),
}

/// Initial density of one constituent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityProfile<T> {
    Constant(T),
    /// `base + amplitude · cos(kx x₁ + ky x₂)`.
    CosineBump {
        base: T,
        amplitude: T,
        kx: i32,
        ky: i32,
    },
}

impl<T: Real> DensityProfile<T> {
    pub fn sample(&self, n: usize) -> ScalarGrid<T> {
        match *self {
            DensityProfile::Constant(c) => ScalarGrid::constant(n, c),
            DensityProfile::CosineBump {
                base,
                amplitude,
                kx,
                ky,
            } => {
                let (k1, k2) = (T::lit(kx as f64), T::lit(ky as f64));
                ScalarGrid::from_fn(n, |x, y| base + amplitude * (k1 * x + k2 * y).cos())
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            DensityProfile::Constant(_) => true,
            DensityProfile::CosineBump {
                amplitude, kx, ky, ..
            } => amplitude == T::zero() || (kx == 0 && ky == 0),
        }
    }
}

/// Everything needed to set up a run, independent of validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec<T> {
    pub grid_size: usize,
    pub cutoff: usize,
    pub mu: SquareMatrix<T>,
    pub kappa: SquareMatrix<T>,
    pub gamma: SquareMatrix<T>,
    pub rho0: Vec<DensityProfile<T>>,
    pub v0: Vec<Vec<(ModeRef, T)>>,
    pub forcing: ForcingSpec<T>,
    pub dt: T,
    pub t_end: T,
    pub output_every: u64,
    pub r_exponent: T,
}

impl<T: Real> ProblemSpec<T> {
    pub fn n(&self) -> usize {
        self.mu.dim()
    }

    /// Same problem on another grid and mode cutoff.
    pub fn at_resolution(&self, grid_size: usize, cutoff: usize) -> Self {
        Self {
            grid_size,
            cutoff,
            ..self.clone()
        }
    }

    /// Constituent `i` on its own.
    pub fn single(&self, i: usize) -> Self {
        let one = |m: &SquareMatrix<T>| SquareMatrix::from_diagonal(&[m[(i, i)]]);
        Self {
            mu: one(&self.mu),
            kappa: one(&self.kappa),
            gamma: SquareMatrix::zeros(1),
            rho0: vec![self.rho0[i]],
            v0: vec![self.v0[i].clone()],
            forcing: self.forcing.single(i),
            ..self.clone()
        }
    }

    /// Validates every hypothesis and samples the initial data.
    pub fn build(&self) -> Result<Problem<T>, SetupError> {
        let params = validate_params(self.mu.clone(), self.kappa.clone(), self.gamma.clone())?;
        let n = params.n();
        for (what, got) in [
            ("rho0", self.rho0.len()),
            ("v0", self.v0.len()),
            ("forcing", self.forcing.per_constituent.len()),
        ] {
            if got != n {
                return Err(SetupError::ConstituentCount {
                    what,
                    expected: n,
                    got,
                });
            }
        }
        check_resolution(self.grid_size, self.cutoff)?;
        let basis = SpectralBasis::build(self.grid_size, self.cutoff)?;
        let rho0 = self.rho0.iter().map(|p| p.sample(self.grid_size)).collect();
        let initial_data = validate_initial_data(rho0, &self.v0, &basis)?;
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(SetupError::Time(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= T::zero()) || !self.t_end.is_finite() {
            return Err(SetupError::Time(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if self.output_every == 0 {
            return Err(SetupError::Time(
                "output interval must be at least one step".into(),
            ));
        }
        if !(self.r_exponent >= T::one()) || !self.r_exponent.is_finite() {
            return Err(SetupError::Time(format!(
                "r exponent must be at least 1, got {}",
                self.r_exponent
            )));
        }
        let initial = SimState::from_initial(&initial_data)?;
        Ok(Problem {
            basis,
            params,
            forcing: self.forcing.clone(),
            initial_data,
            initial,
            schedule: RunSchedule {
                dt: self.dt,
                t_end: self.t_end,
                output_every: self.output_every,
            },
            r_exponent: self.r_exponent,
        })
    }
}

/// Default `r` of the `‖Δv‖_r` diagnostic in the working precision.
pub fn default_r_exponent<T: Real>() -> T {
    T::lit(DEFAULT_R_EXPONENT)
}

/// A validated problem ready to run.
#[derive(Debug, Clone)]
pub struct Problem<T: Real> {
    pub basis: SpectralBasis<T>,
    pub params: MixtureParams<T>,
    pub forcing: ForcingSpec<T>,
    pub initial_data: InitialData<T>,
    pub initial: SimState<T>,
    pub schedule: RunSchedule<T>,
    pub r_exponent: T,
}

/// Final state and diagnostics of a run.
#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub final_state: SimState<T>,
    pub records: Vec<DiagnosticsRecord<T>>,
}

impl<T: Real> Problem<T> {
    /// Runs from the initial state, recording diagnostics at every output time.
    pub fn simulate(&self) -> Result<RunOutput<T>, EngineError> {
        self.simulate_with(&mut |_: &SimState<T>| Ok(()))
    }

    /// As [`simulate`](Self::simulate), also passing each output state to `extra`.
    pub fn simulate_with(&self, extra: &mut dyn Observer<T>) -> Result<RunOutput<T>, EngineError> {
        let mut tracker =
            DiagnosticsTracker::new(&self.params, &self.forcing, &self.basis, self.r_exponent);
        let mut both = |s: &SimState<T>| {
            tracker.observe(s)?;
            extra.observe(s)
        };
        let final_state = self.run_from(&self.initial, &mut both)?;
        Ok(RunOutput {
            final_state,
            records: tracker.into_records(),
        })
    }

    /// Runs from `start` with a custom observer and no diagnostics.
    pub fn run_from(
        &self,
        start: &SimState<T>,
        observer: &mut dyn Observer<T>,
    ) -> Result<SimState<T>, EngineError> {
        run(
            start,
            self.schedule,
            &self.params,
            &self.forcing,
            &self.basis,
            observer,
        )
    }

    /// Collects every output state of a run from `start`.
    pub fn trajectory(&self, start: &SimState<T>) -> Result<Vec<SimState<T>>, EngineError> {
        let mut states = Vec::new();
        let mut collect = |s: &SimState<T>| {
            states.push(s.clone());
            Ok(())
        };
        self.run_from(start, &mut collect)?;
        Ok(states)
    }
}
