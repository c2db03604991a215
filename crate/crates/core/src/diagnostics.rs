//! Energies, norms and identity residuals along a run.

use log::warn;
use thiserror::Error;

use crate::basis::{grid_spacing, GridVectorField, ScalarGrid, SpectralBasis};
use crate::engine::{coefficient_rate, EngineError, Observer, SimState, VelocityCoeffs};
use crate::mixture::{ForcingSpec, MixtureParams};
use crate::scalar::Real;

/// Default exponent `r` of the `‖Δv‖_r` diagnostic.
pub const DEFAULT_R_EXPONENT: f64 = 4.0;

/// Growth beyond this multiple of the data-based surrogate raises a warning.
pub const GROWTH_WARNING_FACTOR: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("at least {needed} records are required, got {got}")]
    InsufficientRecords { needed: usize, got: usize },
    #[error("records are not uniformly spaced in time (spacing {first} vs {other})")]
    NonUniformSpacing { first: f64, other: f64 },
}

/// Everything observed at one output time. Per-constituent quantities are
/// indexed by constituent.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord<T> {
    pub t: T,
    pub step: u64,
    /// `‖v_i‖₂²`.
    pub l2_v: Vec<T>,
    /// `‖∇v_i‖₂²`.
    pub h1_v: Vec<T>,
    /// `Σ_i ∫ρ_i|v_i|² + Σ_ij κ_ij ∫∇v_i:∇v_j`.
    pub y1: T,
    /// `2 Σ_ij μ_ij ∫∇v_i:∇v_j`.
    pub dissipation: T,
    /// `Σ_ij γ_ij ∫|v_i − v_j|²`.
    pub friction_loss: T,
    /// `2 Σ_i ∫ρ_i f_i·v_i`.
    pub power_in: T,
    /// Discrete residual of the energy identity over the interval ending at
    /// this record, with the continuity contribution of the transport step
    /// removed (see [`DiagnosticsRecord::transport_defect`]). Zero on the first
    /// record.
    pub energy_residual: T,
    /// Amount by which the discrete density update fails the continuity
    /// equation tested with `|v_i|²`: `Σ_i ∫(Δρ_i/Δt)·avg|v_i|² − avg W` with
    /// `W = 2 Σ_i ∫ρ_i (v_i·∇)v_i·v_i`. Vanishes for exact transport; the
    /// uncorrected residual is `energy_residual + transport_defect`.
    pub transport_defect: T,
    /// `‖ρ_i‖₂²`.
    pub rho_l2: Vec<T>,
    pub rho_min: Vec<T>,
    pub rho_max: Vec<T>,
    /// `‖∇ρ_i‖_∞` by spectral differentiation.
    pub grad_rho_sup: Vec<T>,
    /// `‖∂_t ρ_i‖_∞` by backward difference; zero on the first record.
    pub dt_rho_sup: Vec<T>,
    /// `‖∇v_i‖_∞` (pointwise Frobenius norm).
    pub grad_v_sup: Vec<T>,
    /// `‖Δv_i‖_r`.
    pub lap_v_r: Vec<T>,
    /// `Σ_i ‖f_i‖₂²`.
    pub forcing_l2: T,
    /// `sup Σ‖v_i‖² + sup Σ‖∇v_i‖² + ∫Σ‖∇v_i‖² dt` up to this record.
    pub bound_xi1: T,
    /// `∫ Σ_i (‖√ρ_i ∂_t v_i‖² + κ⁺‖∇∂_t v_i‖²) dt` up to this record.
    pub bound_xi2: T,
}

impl<T: Real> DiagnosticsRecord<T> {
    pub fn n(&self) -> usize {
        self.l2_v.len()
    }

    /// Column names, in [`DiagnosticsRecord::values`] order.
    pub fn header(n: usize) -> Vec<String> {
        let mut h: Vec<String> = [
            "t",
            "step",
            "Y1",
            "dissipation",
            "friction_loss",
            "power_in",
            "energy_residual",
            "transport_defect",
            "forcing_l2",
            "bound_xi1",
            "bound_xi2",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for name in PER_CONSTITUENT {
            for i in 1..=n {
                h.push(format!("{name}_{i}"));
            }
        }
        h
    }

    /// Every field as `f64`, in header order.
    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = [
            self.t,
            T::from_u64(self.step).unwrap_or_else(T::nan),
            self.y1,
            self.dissipation,
            self.friction_loss,
            self.power_in,
            self.energy_residual,
            self.transport_defect,
            self.forcing_l2,
            self.bound_xi1,
            self.bound_xi2,
        ]
        .iter()
        .map(|x| x.to_f64_lossy())
        .collect();
        for column in [
            &self.l2_v,
            &self.h1_v,
            &self.rho_l2,
            &self.rho_min,
            &self.rho_max,
            &self.grad_rho_sup,
            &self.dt_rho_sup,
            &self.grad_v_sup,
            &self.lap_v_r,
        ] {
            v.extend(column.iter().map(|x| x.to_f64_lossy()));
        }
        v
    }
}

const PER_CONSTITUENT: [&str; 9] = [
    "l2_v",
    "h1_v",
    "rho_l2",
    "rho_min",
    "rho_max",
    "grad_rho_sup",
    "dt_rho_sup",
    "grad_v_sup",
    "lap_v_r",
];

/// Quantities that depend on a single state only.
#[derive(Debug, Clone)]
pub struct Snapshot<T> {
    pub t: T,
    pub step: u64,
    pub dcdt: VelocityCoeffs<T>,
    l2_v: Vec<T>,
    h1_v: Vec<T>,
    y1: T,
    dissipation: T,
    friction_loss: T,
    power_in: T,
    forcing_l2: T,
    rho: Vec<ScalarGrid<T>>,
    speed_sq: Vec<Vec<T>>,
    convective_work: T,
    rho_l2: Vec<T>,
    rho_min: Vec<T>,
    rho_max: Vec<T>,
    grad_rho_sup: Vec<T>,
    grad_v_sup: Vec<T>,
    lap_v_r: Vec<T>,
    xi2_rate: T,
}

fn frobenius_sup<T: Real>(g: &[Vec<T>; 4]) -> T {
    (0..g[0].len())
        .map(|p| {
            (g[0][p] * g[0][p] + g[1][p] * g[1][p] + g[2][p] * g[2][p] + g[3][p] * g[3][p]).sqrt()
        })
        .fold(T::zero(), T::max)
}

fn lr_norm<T: Real>(f: &GridVectorField<T>, r: T) -> T {
    let h = grid_spacing::<T>(f.n);
    let s: T =
        f.x.iter()
            .zip(&f.y)
            .map(|(&a, &b)| (a * a + b * b).sqrt().powf(r))
            .sum();
    (s * h * h).powf(T::one() / r)
}

/// Evaluates the single-state quantities, including `∂_t c` from the linear
/// solve at the state's instant.
pub fn snapshot<T: Real>(
    state: &SimState<T>,
    params: &MixtureParams<T>,
    forcing: &ForcingSpec<T>,
    basis: &SpectralBasis<T>,
    r_exponent: T,
) -> Result<Snapshot<T>, EngineError> {
    let n = state.n();
    let m = basis.len();
    let lambda = basis.eigenvalues();
    let dcdt = coefficient_rate(state, params, forcing, basis)?;
    let c = &state.coeffs;
    let dot = |a: &[T], b: &[T]| -> T { a.iter().zip(b).map(|(&x, &y)| x * y).sum() };

    let mut y1 = T::zero();
    let mut dissipation = T::zero();
    let mut friction_loss = T::zero();
    for i in 0..n {
        for j in 0..n {
            let cc = dot(c.row(i), c.row(j));
            y1 += params.kappa[(i, j)] * cc;
            dissipation += T::lit(2.0) * params.mu[(i, j)] * cc;
            let g = params.gamma[(i, j)];
            if g != T::zero() {
                let (ci, cj) = (c.row(i), c.row(j));
                let d: T = (0..m).map(|k| (ci[k] - cj[k]).powi(2) / lambda[k]).sum();
                friction_loss += g * d;
            }
        }
    }

    let mut s = Snapshot {
        t: state.t,
        step: state.step_index,
        l2_v: Vec::with_capacity(n),
        h1_v: Vec::with_capacity(n),
        y1,
        dissipation,
        friction_loss,
        power_in: T::zero(),
        forcing_l2: T::zero(),
        rho: Vec::with_capacity(n),
        speed_sq: Vec::with_capacity(n),
        convective_work: T::zero(),
        rho_l2: Vec::with_capacity(n),
        rho_min: Vec::with_capacity(n),
        rho_max: Vec::with_capacity(n),
        grad_rho_sup: Vec::with_capacity(n),
        grad_v_sup: Vec::with_capacity(n),
        lap_v_r: Vec::with_capacity(n),
        xi2_rate: T::zero(),
        dcdt,
    };
    for i in 0..n {
        let ci = c.row(i);
        let rho = &state.densities[i].grid;
        let w = rho.data();
        s.l2_v.push((0..m).map(|k| ci[k] * ci[k] / lambda[k]).sum());
        s.h1_v.push(dot(ci, ci));

        let v = basis.synthesize(ci)?;
        s.y1 += v.weighted_norm_sq(w);
        let f = forcing.field(i, basis, state.t);
        s.power_in += T::lit(2.0) * f.weighted(w).dot(&v);
        s.forcing_l2 += f.norm_sq();
        if ci.iter().any(|x| *x != T::zero()) {
            let conv = basis.convective_from_coeffs(ci, &v)?;
            s.convective_work += T::lit(2.0) * conv.weighted(w).dot(&v);
        }
        s.speed_sq
            .push(v.x.iter().zip(&v.y).map(|(&a, &b)| a * a + b * b).collect());

        let rho_sq: Vec<T> = w.iter().map(|&r| r * r).collect();
        s.rho_l2
            .push(ScalarGrid::from_vec(rho.n(), rho_sq).integral());
        s.rho_min.push(rho.min());
        s.rho_max.push(rho.max());
        s.grad_rho_sup.push(basis.gradient(rho)?.max_magnitude());
        s.grad_v_sup
            .push(frobenius_sup(&basis.synthesize_gradient(ci)?));
        let lap: Vec<T> = (0..m).map(|k| -lambda[k] * ci[k]).collect();
        s.lap_v_r
            .push(lr_norm(&basis.synthesize(&lap)?, r_exponent));

        let di = s.dcdt.row(i);
        let dv = basis.synthesize(di)?;
        s.xi2_rate += dv.weighted_norm_sq(w) + params.kappa_plus * dot(di, di);
        s.rho.push(rho.clone());
    }
    Ok(s)
}

/// Record for `cur`, with interval quantities measured against `prev`. The
/// bound fields cover only the states seen here; [`DiagnosticsTracker`]
/// accumulates them over a whole run.
pub fn record_from<T: Real>(cur: &Snapshot<T>, prev: Option<&Snapshot<T>>) -> DiagnosticsRecord<T> {
    let n = cur.rho.len();
    let half = T::lit(0.5);
    let mut rec = DiagnosticsRecord {
        t: cur.t,
        step: cur.step,
        l2_v: cur.l2_v.clone(),
        h1_v: cur.h1_v.clone(),
        y1: cur.y1,
        dissipation: cur.dissipation,
        friction_loss: cur.friction_loss,
        power_in: cur.power_in,
        energy_residual: T::zero(),
        transport_defect: T::zero(),
        rho_l2: cur.rho_l2.clone(),
        rho_min: cur.rho_min.clone(),
        rho_max: cur.rho_max.clone(),
        grad_rho_sup: cur.grad_rho_sup.clone(),
        dt_rho_sup: vec![T::zero(); n],
        grad_v_sup: cur.grad_v_sup.clone(),
        lap_v_r: cur.lap_v_r.clone(),
        forcing_l2: cur.forcing_l2,
        bound_xi1: T::zero(),
        bound_xi2: T::zero(),
    };
    let mut bounds = Bounds::start(cur);
    let Some(p) = prev.filter(|p| cur.t > p.t) else {
        bounds.write(&mut rec);
        return rec;
    };
    let dt = cur.t - p.t;
    bounds = Bounds::start(p);
    bounds.extend(p, cur);
    bounds.write(&mut rec);

    let mut defect = -half * (cur.convective_work + p.convective_work);
    for i in 0..n {
        let (r1, r0) = (cur.rho[i].data(), p.rho[i].data());
        let h = grid_spacing::<T>(cur.rho[i].n());
        let mut s = T::zero();
        let mut sup = T::zero();
        for q in 0..r1.len() {
            let drho = r1[q] - r0[q];
            sup = sup.max(drho.abs());
            s += drho * half * (cur.speed_sq[i][q] + p.speed_sq[i][q]);
        }
        defect += s * h * h / dt;
        rec.dt_rho_sup[i] = sup / dt;
    }
    let losses = |s: &Snapshot<T>| s.dissipation + s.friction_loss - s.power_in;
    let plain = (cur.y1 - p.y1) / dt + half * (losses(cur) + losses(p));
    rec.transport_defect = defect;
    rec.energy_residual = plain - defect;
    rec
}

/// Running suprema and trapezoidal time integrals behind the bound fields.
#[derive(Debug, Clone, Copy)]
struct Bounds<T> {
    sup_l2: T,
    sup_h1: T,
    int_h1: T,
    int_xi2: T,
}

impl<T: Real> Bounds<T> {
    fn start(s: &Snapshot<T>) -> Self {
        Self {
            sup_l2: s.l2_v.iter().copied().sum(),
            sup_h1: s.h1_v.iter().copied().sum(),
            int_h1: T::zero(),
            int_xi2: T::zero(),
        }
    }

    fn extend(&mut self, prev: &Snapshot<T>, cur: &Snapshot<T>) {
        let half_dt = T::lit(0.5) * (cur.t - prev.t);
        let h1 = |s: &Snapshot<T>| s.h1_v.iter().copied().sum::<T>();
        self.sup_l2 = self.sup_l2.max(cur.l2_v.iter().copied().sum());
        self.sup_h1 = self.sup_h1.max(h1(cur));
        self.int_h1 += half_dt * (h1(prev) + h1(cur));
        self.int_xi2 += half_dt * (prev.xi2_rate + cur.xi2_rate);
    }

    fn write(&self, rec: &mut DiagnosticsRecord<T>) {
        rec.bound_xi1 = self.sup_l2 + self.sup_h1 + self.int_h1;
        rec.bound_xi2 = self.int_xi2;
    }
}

/// Record at `state`, with differences taken against `prev_state` when given.
pub fn compute_record<T: Real>(
    state: &SimState<T>,
    prev_state: Option<&SimState<T>>,
    params: &MixtureParams<T>,
    forcing: &ForcingSpec<T>,
    basis: &SpectralBasis<T>,
    r_exponent: T,
) -> Result<DiagnosticsRecord<T>, EngineError> {
    let cur = snapshot(state, params, forcing, basis, r_exponent)?;
    let prev = prev_state
        .map(|p| snapshot(p, params, forcing, basis, r_exponent))
        .transpose()?;
    Ok(record_from(&cur, prev.as_ref()))
}

/// Observer that turns every snapshot of a run into a record, carrying the
/// running bounds from one record to the next.
pub struct DiagnosticsTracker<'a, T: Real> {
    params: &'a MixtureParams<T>,
    forcing: &'a ForcingSpec<T>,
    basis: &'a SpectralBasis<T>,
    r_exponent: T,
    last: Option<Snapshot<T>>,
    bounds: Option<Bounds<T>>,
    pub records: Vec<DiagnosticsRecord<T>>,
}

impl<'a, T: Real> DiagnosticsTracker<'a, T> {
    pub fn new(
        params: &'a MixtureParams<T>,
        forcing: &'a ForcingSpec<T>,
        basis: &'a SpectralBasis<T>,
        r_exponent: T,
    ) -> Self {
        Self {
            params,
            forcing,
            basis,
            r_exponent,
            last: None,
            bounds: None,
            records: Vec::new(),
        }
    }

    /// Snapshot behind the latest record, including `∂_t c` at that time.
    pub fn last_snapshot(&self) -> Option<&Snapshot<T>> {
        self.last.as_ref()
    }

    pub fn push(&mut self, state: &SimState<T>) -> Result<&DiagnosticsRecord<T>, EngineError> {
        let cur = snapshot(
            state,
            self.params,
            self.forcing,
            self.basis,
            self.r_exponent,
        )?;
        let mut rec = record_from(&cur, self.last.as_ref());
        let bounds = match (self.bounds, &self.last) {
            (Some(mut b), Some(prev)) if cur.t > prev.t => {
                b.extend(prev, &cur);
                b
            }
            (Some(b), _) => b,
            (None, _) => Bounds::start(&cur),
        };
        bounds.write(&mut rec);
        self.bounds = Some(bounds);
        self.last = Some(cur);
        self.records.push(rec);
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn into_records(self) -> Vec<DiagnosticsRecord<T>> {
        self.records
    }
}

impl<T: Real> Observer<T> for DiagnosticsTracker<'_, T> {
    fn observe(&mut self, state: &SimState<T>) -> Result<(), EngineError> {
        self.push(state).map(|_| ())
    }
}

/// Outcome of [`check_energy_identity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyIdentityReport {
    pub max_abs_residual: f64,
    /// Largest `|energy_residual + transport_defect|`.
    pub max_abs_uncorrected: f64,
    pub max_abs_transport_defect: f64,
    pub spacing: f64,
}

/// Largest energy-identity residual over a run with uniformly spaced records.
/// A trailing record closer than the regular spacing (a partial last step)
/// is accepted.
pub fn check_energy_identity<T: Real>(
    records: &[DiagnosticsRecord<T>],
) -> Result<EnergyIdentityReport, DiagnosticsError> {
    if records.len() < 3 {
        return Err(DiagnosticsError::InsufficientRecords {
            needed: 3,
            got: records.len(),
        });
    }
    let times: Vec<f64> = records.iter().map(|r| r.t.to_f64_lossy()).collect();
    let first = times[1] - times[0];
    for (k, w) in times.windows(2).enumerate() {
        let d = w[1] - w[0];
        let last = k + 2 == times.len();
        let uniform = (d - first).abs() <= 1e-9 * first.abs().max(1.0);
        if !(uniform || (last && d > 0.0 && d < first)) {
            return Err(DiagnosticsError::NonUniformSpacing { first, other: d });
        }
    }
    let max = |f: &dyn Fn(&DiagnosticsRecord<T>) -> T| {
        records
            .iter()
            .map(|r| f(r).to_f64_lossy().abs())
            .fold(0.0, f64::max)
    };
    Ok(EnergyIdentityReport {
        max_abs_residual: max(&|r| r.energy_residual),
        max_abs_uncorrected: max(&|r| r.energy_residual + r.transport_defect),
        max_abs_transport_defect: max(&|r| r.transport_defect),
        spacing: first,
    })
}

/// Observed order `log₂(coarse/fine)` of the residual between a run and the
/// same run with half the step.
pub fn energy_residual_order(coarse: &EnergyIdentityReport, fine: &EnergyIdentityReport) -> f64 {
    (coarse.max_abs_residual / fine.max_abs_residual).log2()
}

/// Outcome of [`check_apriori_bounds`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriReport {
    /// `sup_t Σ(‖v_i‖₂² + ‖∇v_i‖₂²)`.
    pub sup_energy: f64,
    /// Time at which the supremum is attained.
    pub sup_time: f64,
    /// `∫ Σ(‖√ρ_i ∂_t v_i‖₂² + κ⁺‖∇∂_t v_i‖₂²) dt`.
    pub dt_integral: f64,
    /// `Σ(‖v_i,0‖² + ‖∇v_i,0‖²) + ∫Σ‖f_i‖² dt`, the data-based stand-in for
    /// the a-priori constant (which is not computable).
    pub surrogate: f64,
    pub finite: bool,
    /// Raised when a value is non-finite or the supremum exceeds
    /// [`GROWTH_WARNING_FACTOR`] times the surrogate.
    pub growth_warning: bool,
}

/// Suprema and integrals bounded by the a-priori estimates, with a warning
/// when they escape the data-based surrogate.
pub fn check_apriori_bounds<T: Real>(records: &[DiagnosticsRecord<T>]) -> AprioriReport {
    let energy = |r: &DiagnosticsRecord<T>| -> f64 {
        r.l2_v.iter().chain(&r.h1_v).map(|x| x.to_f64_lossy()).sum()
    };
    let mut sup_energy = f64::NEG_INFINITY;
    let mut sup_time = f64::NAN;
    let mut finite = true;
    let mut forcing_integral = 0.0;
    for (k, r) in records.iter().enumerate() {
        let e = energy(r);
        finite &= e.is_finite() && r.values().iter().all(|v| v.is_finite());
        if e > sup_energy || e.is_nan() {
            sup_energy = e;
            sup_time = r.t.to_f64_lossy();
        }
        if k > 0 {
            let p = &records[k - 1];
            let dt = (r.t - p.t).to_f64_lossy();
            forcing_integral += 0.5 * dt * (r.forcing_l2 + p.forcing_l2).to_f64_lossy();
        }
    }
    let initial = records.first().map_or(0.0, energy);
    let surrogate = initial + forcing_integral;
    let dt_integral = records.last().map_or(0.0, |r| r.bound_xi2.to_f64_lossy());
    let growth_warning = !finite || sup_energy > GROWTH_WARNING_FACTOR * surrogate;
    if growth_warning {
        warn!(
            "a-priori surrogate exceeded: sup energy {sup_energy:e} vs data surrogate {surrogate:e}"
        );
    }
    AprioriReport {
        sup_energy: if records.is_empty() { 0.0 } else { sup_energy },
        sup_time,
        dt_integral,
        surrogate,
        finite,
        growth_warning,
    }
}
