#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Spectral Galerkin simulation of incompressible Kelvin–Voigt mixtures on
//! the periodic square.

pub mod basis;
pub mod config;
pub mod diagnostics;
pub mod engine;
pub mod experiments;
pub mod linalg;
pub mod mixture;
pub mod output;
pub mod pressure;
pub mod problem;
pub mod scalar;
pub mod transport;

pub use basis::{ModeRef, Parity, SpectralBasis};
pub use config::{load_config, parse_config, ConfigError, ExperimentSpec, RunConfig};
pub use diagnostics::{DiagnosticsRecord, DiagnosticsTracker};
pub use engine::{run, step, EngineError, RunSchedule, SimState, VelocityCoeffs};
pub use mixture::{Forcing, ForcingSpec, MixtureParams, ParamsError};
pub use problem::{DensityProfile, Problem, ProblemSpec, RunOutput, SetupError};
pub use scalar::Real;

pub type Basis64 = SpectralBasis<f64>;
pub type Basis32 = SpectralBasis<f32>;
pub type State64 = SimState<f64>;
pub type State32 = SimState<f32>;
pub type Params64 = MixtureParams<f64>;
pub type Params32 = MixtureParams<f32>;
pub type ProblemSpec64 = ProblemSpec<f64>;
pub type ProblemSpec32 = ProblemSpec<f32>;
pub type Problem64 = Problem<f64>;
pub type Problem32 = Problem<f32>;
pub type Record64 = DiagnosticsRecord<f64>;
