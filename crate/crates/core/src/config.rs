//! TOML run configuration.
//!
//! ```toml
//! [domain]
//! grid_size = 32
//! mode_cutoff = 4
//!
//! [time]
//! dt = 1e-3
//! t_end = 1.0
//! output_interval = 0.01      # time between diagnostics records
//!
//! [mixture]
//! n = 1
//! mu = [[1.0]]
//! kappa = [[1.0]]
//! gamma = [[0.0]]
//!
//! [[constituents]]
//! rho0 = { preset = "cosine_bump", base = 1.5, amplitude = 0.5, kx = 1, ky = 0 }
//! v0 = [{ kx = 1, ky = 0, parity = "cos", amplitude = 1.0 }]
//!
//! [forcing]                   # optional
//! preset = "mode"
//! kx = 1
//! ky = 1
//! parity = "cos"
//! amplitude = 0.5
//! omega = 1.0
//! weights = [1.0]             # per-constituent amplitude factors
//!
//! [experiment]                # optional
//! kind = "stability"          # none | stability | convergence | decoupling | linear_oracle
//! epsilon = 1e-6
//! perturbed_mode = { kx = 1, ky = 0, parity = "cos" }
//!
//! [output]
//! directory = "out"
//! emit_fields = true
//! field_interval = 0.1
//!
//! [diagnostics]
//! r_exponent = 4
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::basis::{BasisError, ModeRef, Parity};
use crate::diagnostics::DEFAULT_R_EXPONENT;
use crate::experiments::convergence_grid;
use crate::linalg::SquareMatrix;
use crate::mixture::{Forcing, ForcingSpec, InitialDataError, ParamsError, SHAPE_RULE};
use crate::problem::{DensityProfile, ProblemSpec, SetupError};

pub const DEALIASING_RULE: &str = "dealiasing rule: 3(2K+1) <= 2N";
pub const DENSITY_RULE: &str = "density rule: initial densities positive and finite";
pub const BASIS_RULE: &str = "basis rule: velocity modes satisfy 0 < |k|^2 <= K^2";
pub const TIME_RULE: &str = "time rule: dt > 0, t_end >= 0, intervals whole multiples of dt";
pub const EXPERIMENT_RULE: &str = "experiment rule: preconditions of the selected study";
pub const FORCING_RULE: &str = "forcing rule: nonzero wavevector, finite parameters";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        message: String,
    },
    #[error("{message} (violates {rule})")]
    Validation { message: String, rule: &'static str },
}

impl ConfigError {
    fn invalid(rule: &'static str, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            message: message.into(),
            rule,
        }
    }
}

impl From<SetupError> for ConfigError {
    fn from(e: SetupError) -> Self {
        let rule = match &e {
            SetupError::Params(p) => p.hypothesis(),
            SetupError::Basis(BasisError::CutoffTooLargeForGrid { .. }) => DEALIASING_RULE,
            SetupError::Basis(_) => DEALIASING_RULE,
            SetupError::InitialData(InitialDataError::UnknownMode { .. }) => BASIS_RULE,
            SetupError::InitialData(_) => DENSITY_RULE,
            SetupError::ConstituentCount { .. } => SHAPE_RULE,
            SetupError::Time(_) => TIME_RULE,
            SetupError::Engine(_) => EXPERIMENT_RULE,
        };
        ConfigError::invalid(rule, e.to_string())
    }
}

impl From<ParamsError> for ConfigError {
    fn from(e: ParamsError) -> Self {
        ConfigError::invalid(e.hypothesis(), e.to_string())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: RawDomain,
    time: RawTime,
    mixture: RawMixture,
    constituents: Vec<RawConstituent>,
    #[serde(default)]
    forcing: Option<RawForcing>,
    #[serde(default)]
    experiment: Option<RawExperiment>,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    diagnostics: RawDiagnostics,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    grid_size: usize,
    mode_cutoff: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: f64,
    t_end: f64,
    output_interval: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMixture {
    n: usize,
    mu: Vec<Vec<f64>>,
    kappa: Vec<Vec<f64>>,
    gamma: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstituent {
    rho0: RawDensity,
    #[serde(default)]
    v0: Vec<RawMode>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
enum RawDensity {
    Constant {
        value: f64,
    },
    CosineBump {
        base: f64,
        amplitude: f64,
        kx: i32,
        ky: i32,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    kx: i32,
    ky: i32,
    parity: Parity,
    amplitude: f64,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct RawModeRef {
    kx: i32,
    ky: i32,
    parity: Parity,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
enum RawForcing {
    None,
    Mode {
        kx: i32,
        ky: i32,
        parity: Parity,
        amplitude: f64,
        #[serde(default)]
        omega: f64,
        weights: Option<Vec<f64>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawExperiment {
    None,
    Stability {
        epsilon: f64,
        perturbed_mode: RawModeRef,
    },
    Convergence {
        cutoffs: Vec<usize>,
    },
    Decoupling,
    LinearOracle,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    #[serde(default)]
    emit_fields: bool,
    field_interval: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawDiagnostics {
    r_exponent: Option<f64>,
}

/// Study requested by a configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentSpec {
    None,
    Stability { epsilon: f64, mode: ModeRef },
    Convergence { cutoffs: Vec<usize> },
    Decoupling,
    LinearOracle,
}

impl ExperimentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentSpec::None => "none",
            ExperimentSpec::Stability { .. } => "stability",
            ExperimentSpec::Convergence { .. } => "convergence",
            ExperimentSpec::Decoupling => "decoupling",
            ExperimentSpec::LinearOracle => "linear_oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub directory: Option<PathBuf>,
    pub emit_fields: bool,
    /// Field snapshots are written every this many steps.
    pub field_every: u64,
}

/// A fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec<f64>,
    pub experiment: ExperimentSpec,
    pub output: OutputSpec,
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1),
        message: e.message().trim().to_string(),
    })?;
    validate(raw)
}

fn matrix(
    name: &'static str,
    rows: Vec<Vec<f64>>,
    n: usize,
) -> Result<SquareMatrix<f64>, ConfigError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(ConfigError::invalid(
            SHAPE_RULE,
            format!("{name} must be {n}x{n} to match mixture.n"),
        ));
    }
    Ok(SquareMatrix::from_rows(&rows).expect("square by construction"))
}

/// Whole number of steps of size `dt` in `interval`.
fn steps_in(what: &str, interval: f64, dt: f64) -> Result<u64, ConfigError> {
    let ratio = interval / dt;
    let whole = ratio.round();
    if !(interval > 0.0)
        || !ratio.is_finite()
        || whole < 1.0
        || (ratio - whole).abs() > 1e-9 * whole
    {
        return Err(ConfigError::invalid(
            TIME_RULE,
            format!("{what} {interval} is not a positive whole multiple of dt = {dt}"),
        ));
    }
    Ok(whole as u64)
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let n = raw.mixture.n;
    if n == 0 {
        return Err(ParamsError::Empty.into());
    }
    let mu = matrix("mu", raw.mixture.mu, n)?;
    let kappa = matrix("kappa", raw.mixture.kappa, n)?;
    let gamma = match raw.mixture.gamma {
        Some(g) => matrix("gamma", g, n)?,
        None => SquareMatrix::zeros(n),
    };
    if raw.constituents.len() != n {
        return Err(ConfigError::invalid(
            SHAPE_RULE,
            format!(
                "{} constituents listed, mixture.n = {n}",
                raw.constituents.len()
            ),
        ));
    }
    let dt = raw.time.dt;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(ConfigError::invalid(
            TIME_RULE,
            format!("dt = {dt} must be positive"),
        ));
    }
    if !(raw.time.t_end >= 0.0) || !raw.time.t_end.is_finite() {
        return Err(ConfigError::invalid(
            TIME_RULE,
            format!("t_end = {} must be nonnegative", raw.time.t_end),
        ));
    }
    let output_every = match raw.time.output_interval {
        Some(iv) => steps_in("output_interval", iv, dt)?,
        None => 1,
    };
    let field_every = match raw.output.field_interval {
        Some(iv) => steps_in("field_interval", iv, dt)?,
        None => output_every,
    };

    let mut rho0 = Vec::with_capacity(n);
    let mut v0 = Vec::with_capacity(n);
    for c in raw.constituents {
        rho0.push(match c.rho0 {
            RawDensity::Constant { value } => DensityProfile::Constant(value),
            RawDensity::CosineBump {
                base,
                amplitude,
                kx,
                ky,
            } => DensityProfile::CosineBump {
                base,
                amplitude,
                kx,
                ky,
            },
        });
        v0.push(
            c.v0.into_iter()
                .map(|m| (ModeRef::new(m.kx, m.ky, m.parity), m.amplitude))
                .collect(),
        );
    }

    let forcing = match raw.forcing {
        None | Some(RawForcing::None) => ForcingSpec::zero(n),
        Some(RawForcing::Mode {
            kx,
            ky,
            parity,
            amplitude,
            omega,
            weights,
        }) => {
            let weights = weights.unwrap_or_else(|| vec![1.0; n]);
            if weights.len() != n {
                return Err(ConfigError::invalid(
                    FORCING_RULE,
                    format!(
                        "forcing.weights has {} entries, mixture.n = {n}",
                        weights.len()
                    ),
                ));
            }
            if (kx, ky) == (0, 0) {
                return Err(ConfigError::invalid(
                    FORCING_RULE,
                    "forcing wavevector must be nonzero",
                ));
            }
            if !(amplitude.is_finite()
                && omega.is_finite()
                && weights.iter().all(|w| w.is_finite()))
            {
                return Err(ConfigError::invalid(
                    FORCING_RULE,
                    "forcing parameters must be finite",
                ));
            }
            ForcingSpec {
                per_constituent: weights
                    .into_iter()
                    .map(|w| Forcing::Mode {
                        k: (kx, ky),
                        parity,
                        amplitude: amplitude * w,
                        omega,
                    })
                    .collect(),
            }
        }
    };

    let problem = ProblemSpec {
        grid_size: raw.domain.grid_size,
        cutoff: raw.domain.mode_cutoff,
        mu,
        kappa,
        gamma,
        rho0,
        v0,
        forcing,
        dt,
        t_end: raw.time.t_end,
        output_every,
        r_exponent: raw.diagnostics.r_exponent.unwrap_or(DEFAULT_R_EXPONENT),
    };
    let built = problem.build()?;

    let experiment = match raw.experiment {
        None | Some(RawExperiment::None) => ExperimentSpec::None,
        Some(RawExperiment::Stability {
            epsilon,
            perturbed_mode: m,
        }) => {
            if !(epsilon >= 0.0) || !epsilon.is_finite() {
                return Err(ConfigError::invalid(
                    EXPERIMENT_RULE,
                    format!("epsilon = {epsilon} must be finite and nonnegative"),
                ));
            }
            let mode = ModeRef::new(m.kx, m.ky, m.parity);
            if built.basis.locate(mode).is_none() {
                return Err(ConfigError::invalid(
                    BASIS_RULE,
                    format!("perturbed mode {mode:?} is not in the basis"),
                ));
            }
            ExperimentSpec::Stability { epsilon, mode }
        }
        Some(RawExperiment::Convergence { cutoffs }) => {
            validate_cutoffs(&problem, &cutoffs)?;
            ExperimentSpec::Convergence { cutoffs }
        }
        Some(RawExperiment::Decoupling) => {
            if !built.params.is_diagonal() {
                return Err(ConfigError::invalid(
                    EXPERIMENT_RULE,
                    "decoupling needs diagonal mu and kappa and zero gamma",
                ));
            }
            ExperimentSpec::Decoupling
        }
        Some(RawExperiment::LinearOracle) => {
            validate_linear(&problem, &built)?;
            ExperimentSpec::LinearOracle
        }
    };

    Ok(RunConfig {
        problem,
        experiment,
        output: OutputSpec {
            directory: raw.output.directory,
            emit_fields: raw.output.emit_fields,
            field_every,
        },
    })
}

fn validate_cutoffs(problem: &ProblemSpec<f64>, cutoffs: &[usize]) -> Result<(), ConfigError> {
    let bad = |m: String| Err(ConfigError::invalid(EXPERIMENT_RULE, m));
    if cutoffs.len() < 3 {
        return bad(format!(
            "convergence needs at least 3 cutoffs, got {}",
            cutoffs.len()
        ));
    }
    for w in cutoffs.windows(2) {
        if w[1] <= w[0] {
            return bad(format!(
                "cutoffs must strictly increase, got {} then {}",
                w[0], w[1]
            ));
        }
        if !convergence_grid(w[1]).is_multiple_of(convergence_grid(w[0])) {
            return bad(format!(
                "cutoffs {} and {} give grids without common nodes",
                w[0], w[1]
            ));
        }
    }
    for &k in cutoffs {
        problem.at_resolution(convergence_grid(k), k).build()?;
    }
    Ok(())
}

fn validate_linear(
    problem: &ProblemSpec<f64>,
    built: &crate::problem::Problem<f64>,
) -> Result<(), ConfigError> {
    let bad = |m: &str| {
        Err(ConfigError::invalid(
            EXPERIMENT_RULE,
            format!("linear oracle: {m}"),
        ))
    };
    if !problem.forcing.is_zero() {
        return bad("forcing must be zero");
    }
    if !problem.rho0.iter().all(|p| p.is_constant()) {
        return bad("densities must be constant");
    }
    let c = &built.initial.coeffs;
    let mut active: Vec<usize> = (0..c.n())
        .flat_map(|i| (0..c.m()).filter(move |&k| c.row(i)[k] != 0.0))
        .collect();
    active.sort_unstable();
    active.dedup();
    if active.len() != 1 {
        return bad("initial velocities must occupy exactly one basis mode");
    }
    Ok(())
}
