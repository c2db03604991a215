//! Stability, convergence, decoupling and linear-oracle studies.

use thiserror::Error;

use crate::basis::{ModeRef, SpectralBasis};
use crate::engine::{EngineError, SimState, VelocityCoeffs};
use crate::linalg::{expm, Cholesky, LinalgError, SquareMatrix};
use crate::problem::{Problem, ProblemSpec, SetupError};
use crate::scalar::Real;

/// Relative tolerance of the decoupling comparison.
pub const DECOUPLING_TOLERANCE: f64 = 1e-12;
/// Relative tolerance of the linear-oracle comparison.
pub const LINEAR_ORACLE_TOLERANCE: f64 = 1e-6;
/// Slack allowed above the fitted exponential envelope.
pub const ENVELOPE_SLACK: f64 = 0.05;
/// Points with `y ≤ LOG_FLOOR · ε_mach · y(0)` are left out of the fit.
pub const LOG_FLOOR: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("decoupling needs diagonal mu and kappa and zero gamma")]
    ConfigNotDiagonal,
    #[error("linear oracle not applicable: {0}")]
    ConfigNotLinearizable(String),
    #[error("invalid cutoff list: {0}")]
    InvalidCutoffs(String),
    #[error("perturbation amplitude must be finite and nonnegative, got {0}")]
    InvalidEpsilon(f64),
    #[error("perturbed mode {0:?} is not in the basis")]
    UnknownMode(ModeRef),
}

impl From<LinalgError> for ExperimentError {
    fn from(e: LinalgError) -> Self {
        ExperimentError::Engine(EngineError::from(e))
    }
}

/// Weights of the distance between two solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YMetric<T> {
    pub rho_minus: T,
    pub kappa_minus: T,
}

impl<T: Real> YMetric<T> {
    pub fn for_problem(p: &Problem<T>) -> Self {
        Self {
            rho_minus: p.initial_data.rho_minus,
            kappa_minus: p.params.kappa_minus,
        }
    }

    /// `Σ_i (ρ⁻‖δv_i‖² + ‖δρ_i‖²) + κ⁻ Σ_i ‖∇δv_i‖²` for two states on the
    /// same basis.
    pub fn distance(&self, a: &SimState<T>, b: &SimState<T>, basis: &SpectralBasis<T>) -> T {
        let lambda = basis.eigenvalues();
        let mut y = T::zero();
        for i in 0..a.n() {
            let (ca, cb) = (a.coeffs.row(i), b.coeffs.row(i));
            for k in 0..ca.len() {
                let d = ca[k] - cb[k];
                y += (self.rho_minus / lambda[k] + self.kappa_minus) * d * d;
            }
            y += density_distance_sq(&a.densities[i].grid, &b.densities[i].grid, 1);
        }
        y
    }
}

/// `‖ρ_a − ρ_b‖²` on the grid of `a`, reading `b` at every `stride`-th node.
fn density_distance_sq<T: Real>(
    a: &crate::basis::ScalarGrid<T>,
    b: &crate::basis::ScalarGrid<T>,
    stride: usize,
) -> T {
    let (na, nb) = (a.n(), b.n());
    let h = crate::basis::grid_spacing::<T>(na);
    let mut s = T::zero();
    for p in 0..na {
        for q in 0..na {
            let d = a.data()[p * na + q] - b.data()[(p * stride) * nb + q * stride];
            s += d * d;
        }
    }
    s * h * h
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub y_series: Vec<f64>,
    pub y0: f64,
    /// Least-squares slope of `ln(y/y0)` against `t` through the origin;
    /// absent when `y0 = 0` or no point rises above the noise floor.
    pub growth_exponent: Option<f64>,
    /// `max_t y(t) / (y0 e^{a t}) − 1`, zero without a fit.
    pub envelope_excess: f64,
    pub bitwise_identical: bool,
}

impl StabilityReport {
    pub fn passes(&self) -> bool {
        if self.epsilon == 0.0 {
            return self.bitwise_identical && self.y_series.iter().all(|&y| y == 0.0);
        }
        matches!(self.growth_exponent, Some(a) if a.is_finite())
            && self.envelope_excess <= ENVELOPE_SLACK
    }

    /// `y` at the output time closest to `t`.
    pub fn y_at(&self, t: f64) -> f64 {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map_or(0, |(k, _)| k);
        self.y_series[k]
    }
}

/// Fits `y(t) ≈ y0 e^{a t}` by least squares on `ln(y/y0)` with the
/// intercept pinned, using only points above the noise floor.
pub fn fit_growth_exponent(times: &[f64], ys: &[f64], y0: f64) -> Option<f64> {
    if !(y0 > 0.0) {
        return None;
    }
    let floor = LOG_FLOOR * f64::EPSILON * y0;
    let (mut num, mut den) = (0.0, 0.0);
    for (&t, &y) in times.iter().zip(ys) {
        if t > 0.0 && y > floor {
            num += t * (y / y0).ln();
            den += t * t;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Runs the problem twice, the second time with `epsilon` added to the
/// coefficient of `mode` in every constituent, and tracks their distance.
pub fn stability_experiment<T: Real>(
    spec: &ProblemSpec<T>,
    epsilon: T,
    mode: ModeRef,
) -> Result<StabilityReport, ExperimentError> {
    if !(epsilon >= T::zero()) || !epsilon.is_finite() {
        return Err(ExperimentError::InvalidEpsilon(epsilon.to_f64_lossy()));
    }
    let problem = spec.build()?;
    let (idx, same) = problem
        .basis
        .locate(mode)
        .ok_or(ExperimentError::UnknownMode(mode))?;
    let mut start = problem.initial.clone();
    let delta = if same { epsilon } else { -epsilon };
    for i in 0..start.n() {
        start.coeffs.row_mut(i)[idx] += delta;
    }
    let a = problem.trajectory(&problem.initial)?;
    let b = problem.trajectory(&start)?;
    let metric = YMetric::for_problem(&problem);
    let times: Vec<f64> = a.iter().map(|s| s.t.to_f64_lossy()).collect();
    let y_series: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| metric.distance(x, y, &problem.basis).to_f64_lossy())
        .collect();
    let y0 = y_series[0];
    let growth_exponent = if epsilon == T::zero() {
        None
    } else {
        fit_growth_exponent(&times, &y_series, y0)
    };
    let envelope_excess = growth_exponent.map_or(0.0, |rate| {
        times
            .iter()
            .zip(&y_series)
            .map(|(&t, &y)| y / (y0 * (rate * t).exp()) - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    });
    Ok(StabilityReport {
        epsilon: epsilon.to_f64_lossy(),
        times,
        y_series,
        y0,
        growth_exponent,
        envelope_excess,
        bitwise_identical: a == b,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLevel {
    pub cutoff: usize,
    pub grid_size: usize,
    pub modes: usize,
    /// y-distance of the terminal state to the next finer level.
    pub diff_to_next: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<ConvergenceLevel>,
    /// `d_k / d_{k+1}` for successive differences.
    pub ratios: Vec<f64>,
}

impl ConvergenceReport {
    pub fn differences(&self) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.diff_to_next).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.differences().windows(2).all(|w| w[1] < w[0])
    }
}

/// Grid used with cutoff `k` in the convergence study.
pub fn convergence_grid(cutoff: usize) -> usize {
    4 * cutoff
}

/// Runs the problem at each cutoff `K` on an `N = 4K` grid and compares
/// successive terminal states in the y-metric of the finer level's data.
pub fn convergence_study<T: Real>(
    spec: &ProblemSpec<T>,
    cutoffs: &[usize],
) -> Result<ConvergenceReport, ExperimentError> {
    if cutoffs.len() < 3 {
        return Err(ExperimentError::InvalidCutoffs(format!(
            "need at least 3 levels, got {}",
            cutoffs.len()
        )));
    }
    if let Some(w) = cutoffs.windows(2).find(|w| w[1] <= w[0]) {
        return Err(ExperimentError::InvalidCutoffs(format!(
            "cutoffs must strictly increase, got {} then {}",
            w[0], w[1]
        )));
    }
    if let Some(w) = cutoffs
        .windows(2)
        .find(|w| !convergence_grid(w[1]).is_multiple_of(convergence_grid(w[0])))
    {
        return Err(ExperimentError::InvalidCutoffs(format!(
            "grids {} and {} do not share nodes",
            convergence_grid(w[0]),
            convergence_grid(w[1])
        )));
    }
    let mut finals = Vec::with_capacity(cutoffs.len());
    for &k in cutoffs {
        let problem = spec.at_resolution(convergence_grid(k), k).build()?;
        let end = problem.run_from(&problem.initial, &mut |_: &SimState<T>| Ok(()))?;
        finals.push((problem, end));
    }
    let mut levels = Vec::with_capacity(cutoffs.len());
    for (l, (problem, end)) in finals.iter().enumerate() {
        let diff_to_next = finals.get(l + 1).map(|(fine, fine_end)| {
            cross_level_distance(problem, end, fine, fine_end).to_f64_lossy()
        });
        levels.push(ConvergenceLevel {
            cutoff: problem.basis.cutoff(),
            grid_size: problem.basis.grid_size(),
            modes: problem.basis.len(),
            diff_to_next,
        });
    }
    let d: Vec<f64> = levels.iter().filter_map(|l| l.diff_to_next).collect();
    let ratios = d.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(ConvergenceReport { levels, ratios })
}

/// y-distance between a coarse and a fine terminal state: velocity on the
/// fine basis (coarse coefficients extended by zero), densities at the
/// coarse nodes, which coincide with every `N_f/N_c`-th fine node.
fn cross_level_distance<T: Real>(
    coarse: &Problem<T>,
    coarse_end: &SimState<T>,
    fine: &Problem<T>,
    fine_end: &SimState<T>,
) -> T {
    let metric = YMetric::for_problem(fine);
    let lambda = fine.basis.eigenvalues();
    let stride = fine.basis.grid_size() / coarse.basis.grid_size();
    let mut y = T::zero();
    for i in 0..coarse_end.n() {
        let mut extended = vec![T::zero(); fine.basis.len()];
        for (k, mode) in coarse.basis.modes().iter().enumerate() {
            let r = ModeRef::new(mode.k.0, mode.k.1, mode.parity);
            let (j, same) = fine.basis.locate(r).expect("coarse modes are fine modes");
            extended[j] = if same {
                coarse_end.coeffs.row(i)[k]
            } else {
                -coarse_end.coeffs.row(i)[k]
            };
        }
        let cf = fine_end.coeffs.row(i);
        for k in 0..cf.len() {
            let d = cf[k] - extended[k];
            y += (metric.rho_minus / lambda[k] + metric.kappa_minus) * d * d;
        }
        y += density_distance_sq(
            &coarse_end.densities[i].grid,
            &fine_end.densities[i].grid,
            stride,
        );
    }
    y
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingReport {
    /// Largest coefficient deviation over all output times, relative to the
    /// largest single-run coefficient.
    pub max_rel_deviation: f64,
    /// Largest density deviation over all output times.
    pub max_density_deviation: f64,
    pub pass: bool,
}

/// Compares the coupled run with one independent run per constituent.
pub fn decoupling_test<T: Real>(
    spec: &ProblemSpec<T>,
) -> Result<DecouplingReport, ExperimentError> {
    let problem = spec.build()?;
    if !problem.params.is_diagonal() {
        return Err(ExperimentError::ConfigNotDiagonal);
    }
    let coupled = problem.trajectory(&problem.initial)?;
    let mut max_dev = 0.0f64;
    let mut max_scale = 0.0f64;
    let mut max_rho = 0.0f64;
    for i in 0..spec.n() {
        let single = spec.single(i).build()?;
        let alone = single.trajectory(&single.initial)?;
        for (c, s) in coupled.iter().zip(&alone) {
            for (a, b) in c.coeffs.row(i).iter().zip(s.coeffs.row(0)) {
                max_dev = max_dev.max((*a - *b).abs().to_f64_lossy());
                max_scale = max_scale.max(b.abs().to_f64_lossy());
            }
            for (a, b) in c.densities[i].values().iter().zip(s.densities[0].values()) {
                max_rho = max_rho.max((*a - *b).abs().to_f64_lossy());
            }
        }
    }
    let max_rel_deviation = if max_scale > 0.0 {
        max_dev / max_scale
    } else {
        max_dev
    };
    Ok(DecouplingReport {
        max_rel_deviation,
        max_density_deviation: max_rho,
        pass: max_rel_deviation <= DECOUPLING_TOLERANCE && max_rho <= DECOUPLING_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearOracleReport {
    pub mode: ModeRef,
    pub eigenvalue: f64,
    pub times: Vec<f64>,
    /// Simulated coefficient of the mode, per output time and constituent.
    pub simulated: Vec<Vec<f64>>,
    /// Matrix-exponential solution at the same times.
    pub exact: Vec<Vec<f64>>,
    /// Largest `‖c_sim − c_exact‖_∞ / ‖c_exact‖_∞` over the output times,
    /// including any leakage into other modes.
    pub max_rel_error: f64,
    pub pass: bool,
}

/// The constant-coefficient system `(diag(ρ)/λ + κ) ċ = −(μ + L_γ/λ) c`
/// that a single mode obeys at constant density, as the matrix `G` of
/// `ċ = G c`.
pub fn linear_generator<T: Real>(
    rho: &[T],
    lambda: T,
    mu: &SquareMatrix<T>,
    kappa: &SquareMatrix<T>,
    gamma: &SquareMatrix<T>,
) -> Result<SquareMatrix<T>, LinalgError> {
    let n = rho.len();
    let mut a = kappa.clone();
    let mut b = mu.clone();
    for i in 0..n {
        a[(i, i)] += rho[i] / lambda;
        for j in 0..n {
            if i != j {
                b[(i, j)] -= gamma[(i, j)] / lambda;
                b[(i, i)] += gamma[(i, j)] / lambda;
            }
        }
    }
    let chol = Cholesky::factor(&a)?;
    let mut g = SquareMatrix::zeros(n);
    for j in 0..n {
        let col: Vec<T> = (0..n).map(|i| -b[(i, j)]).collect();
        let x = chol.solve(&col)?;
        for i in 0..n {
            g[(i, j)] = x[i];
        }
    }
    Ok(g)
}

/// Compares a single-mode, constant-density, unforced run with the matrix
/// exponential of its linear generator.
pub fn linear_oracle_test<T: Real>(
    spec: &ProblemSpec<T>,
) -> Result<LinearOracleReport, ExperimentError> {
    let not = |s: &str| ExperimentError::ConfigNotLinearizable(s.to_string());
    if !spec.forcing.is_zero() {
        return Err(not("forcing must be zero"));
    }
    if !spec.rho0.iter().all(|p| p.is_constant()) {
        return Err(not("densities must be constant"));
    }
    let problem = spec.build()?;
    let c0 = &problem.initial.coeffs;
    let mut active: Vec<usize> = (0..c0.n())
        .flat_map(|i| {
            c0.row(i)
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != T::zero())
                .map(|(k, _)| k)
                .collect::<Vec<_>>()
        })
        .collect();
    active.sort_unstable();
    active.dedup();
    let [k] = active[..] else {
        return Err(not("initial velocities must occupy exactly one basis mode"));
    };
    let mode = problem.basis.modes()[k];
    let lambda = mode.eigenvalue;
    let rho: Vec<T> = problem
        .initial
        .densities
        .iter()
        .map(|d| d.values()[0])
        .collect();
    let p = &problem.params;
    let g = linear_generator(&rho, lambda, &p.mu, &p.kappa, &p.gamma)?;
    let start: Vec<T> = (0..c0.n()).map(|i| c0.row(i)[k]).collect();

    let states = problem.trajectory(&problem.initial)?;
    let mut report = LinearOracleReport {
        mode: ModeRef::new(mode.k.0, mode.k.1, mode.parity),
        eigenvalue: lambda.to_f64_lossy(),
        times: Vec::with_capacity(states.len()),
        simulated: Vec::with_capacity(states.len()),
        exact: Vec::with_capacity(states.len()),
        max_rel_error: 0.0,
        pass: false,
    };
    for s in &states {
        let exact = expm(&g.scaled(s.t)).matvec(&start);
        let sim: Vec<T> = (0..s.n()).map(|i| s.coeffs.row(i)[k]).collect();
        let scale = exact.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let mut err = sim
            .iter()
            .zip(&exact)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        err = err.max(leakage(&s.coeffs, k));
        let rel = if scale > T::zero() { err / scale } else { err };
        report.max_rel_error = report.max_rel_error.max(rel.to_f64_lossy());
        report.times.push(s.t.to_f64_lossy());
        report
            .simulated
            .push(sim.iter().map(|x| x.to_f64_lossy()).collect());
        report
            .exact
            .push(exact.iter().map(|x| x.to_f64_lossy()).collect());
    }
    report.pass = report.max_rel_error <= LINEAR_ORACLE_TOLERANCE;
    Ok(report)
}

fn leakage<T: Real>(c: &VelocityCoeffs<T>, keep: usize) -> T {
    (0..c.n())
        .flat_map(|i| {
            c.row(i)
                .iter()
                .enumerate()
                .filter(move |(k, _)| *k != keep)
                .map(|(_, x)| x.abs())
        })
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Parity;
    use crate::mixture::{Forcing, ForcingSpec};
    use crate::problem::DensityProfile;

    fn base(n: usize) -> ProblemSpec<f64> {
        ProblemSpec {
            grid_size: 16,
            cutoff: 3,
            mu: SquareMatrix::identity(n),
            kappa: SquareMatrix::identity(n),
            gamma: SquareMatrix::zeros(n),
            rho0: vec![DensityProfile::Constant(1.0); n],
            v0: vec![vec![(ModeRef::new(1, 0, Parity::Cos), 1.0)]; n],
            forcing: ForcingSpec::zero(n),
            dt: 0.01,
            t_end: 0.2,
            output_every: 5,
            r_exponent: 4.0,
        }
    }

    #[test]
    fn unit_mode_decays_at_half_rate() {
        // ρ = μ = κ = λ = 1: rate μλ/(ρ + κλ) = 1/2
        let r = linear_oracle_test(&base(1)).unwrap();
        assert_eq!(r.eigenvalue, 1.0);
        let last = r.exact.last().unwrap()[0];
        assert!((last - (-0.1f64).exp()).abs() < 1e-14);
        assert!(r.pass, "{}", r.max_rel_error);
    }

    #[test]
    fn friction_speeds_up_antisymmetric_decay() {
        let mut s = base(2);
        s.v0[1] = vec![(ModeRef::new(1, 0, Parity::Cos), -1.0)];
        s.dt = 1e-3;
        let free = linear_oracle_test(&s).unwrap();
        s.gamma = SquareMatrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        let rubbed = linear_oracle_test(&s).unwrap();
        assert!(rubbed.pass && free.pass);
        assert!(rubbed.exact.last().unwrap()[0] < free.exact.last().unwrap()[0]);
        // antisymmetric data: rate (μ + 2g/λ)λ/(ρ + κλ) = (1 + 1)/2
        assert!((rubbed.exact.last().unwrap()[0] - (-0.2f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn linear_oracle_rejects_other_configs() {
        let mut s = base(1);
        s.v0[0].push((ModeRef::new(0, 1, Parity::Sin), 0.1));
        assert!(matches!(
            linear_oracle_test(&s),
            Err(ExperimentError::ConfigNotLinearizable(_))
        ));
        let mut s = base(1);
        s.rho0[0] = DensityProfile::CosineBump {
            base: 1.0,
            amplitude: 0.1,
            kx: 1,
            ky: 0,
        };
        assert!(matches!(
            linear_oracle_test(&s),
            Err(ExperimentError::ConfigNotLinearizable(_))
        ));
        let mut s = base(1);
        s.forcing.per_constituent[0] = Forcing::Mode {
            k: (1, 0),
            parity: Parity::Cos,
            amplitude: 1.0,
            omega: 0.0,
        };
        assert!(matches!(
            linear_oracle_test(&s),
            Err(ExperimentError::ConfigNotLinearizable(_))
        ));
    }

    #[test]
    fn decoupling_of_disjoint_and_identical_constituents() {
        let mut s = base(2);
        s.v0[1] = vec![(ModeRef::new(1, 1, Parity::Sin), 0.7)];
        s.rho0[1] = DensityProfile::CosineBump {
            base: 2.0,
            amplitude: 0.5,
            kx: 1,
            ky: 0,
        };
        s.mu = SquareMatrix::from_diagonal(&[1.0, 0.5]);
        let r = decoupling_test(&s).unwrap();
        assert!(r.pass, "{r:?}");

        let s3 = base(3);
        let problem = s3.build().unwrap();
        let end = problem.trajectory(&problem.initial).unwrap().pop().unwrap();
        assert_eq!(end.coeffs.row(0), end.coeffs.row(1));
        assert_eq!(end.coeffs.row(1), end.coeffs.row(2));
        assert!(decoupling_test(&s3).unwrap().pass);

        let mut s = base(2);
        s.gamma = SquareMatrix::from_rows(&[vec![0.0, 0.1], vec![0.1, 0.0]]).unwrap();
        assert!(matches!(
            decoupling_test(&s),
            Err(ExperimentError::ConfigNotDiagonal)
        ));
    }

    #[test]
    fn zero_perturbation_gives_identical_runs() {
        let mut s = base(1);
        s.rho0[0] = DensityProfile::CosineBump {
            base: 1.5,
            amplitude: 0.5,
            kx: 1,
            ky: 1,
        };
        let r = stability_experiment(&s, 0.0, ModeRef::new(0, 1, Parity::Cos)).unwrap();
        assert!(r.bitwise_identical && r.passes());
        assert!(r.y_series.iter().all(|&y| y == 0.0));
        assert!(r.growth_exponent.is_none());
        assert!(matches!(
            stability_experiment(&s, -1.0, ModeRef::new(0, 1, Parity::Cos)),
            Err(ExperimentError::InvalidEpsilon(_))
        ));
        assert!(matches!(
            stability_experiment(&s, 1e-6, ModeRef::new(7, 0, Parity::Cos)),
            Err(ExperimentError::UnknownMode(_))
        ));
    }

    #[test]
    fn growth_fit_recovers_an_exponential() {
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 0.05).collect();
        let ys: Vec<f64> = times.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let a = fit_growth_exponent(&times, &ys, 3.0).unwrap();
        assert!((a + 0.7).abs() < 1e-12);
        assert!(fit_growth_exponent(&times, &ys, 0.0).is_none());
    }

    #[test]
    fn linear_single_mode_levels_agree() {
        let mut s = base(1);
        s.t_end = 0.1;
        let r = convergence_study(&s, &[2, 4, 8]).unwrap();
        assert!(r.differences().iter().all(|&d| d <= 1e-10), "{r:?}");
        assert!(matches!(
            convergence_study(&s, &[2, 2, 4]),
            Err(ExperimentError::InvalidCutoffs(_))
        ));
        assert!(matches!(
            convergence_study(&s, &[2, 4]),
            Err(ExperimentError::InvalidCutoffs(_))
        ));
        assert!(matches!(
            convergence_study(&s, &[2, 3, 4]),
            Err(ExperimentError::InvalidCutoffs(_))
        ));
    }
}
