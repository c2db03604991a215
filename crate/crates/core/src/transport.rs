//! Semi-Lagrangian density transport.
//!
//! Each grid point is traced back along the characteristic of a frozen,
//! divergence-free velocity with one midpoint (RK2) step and the density is
//! read off at the foot by periodic bilinear interpolation. Every output value
//! is a convex combination of four input values, so the pointwise bounds of
//! the input are preserved exactly.

use thiserror::Error;

use crate::basis::{grid_spacing, GridVectorField, ScalarGrid};
use crate::scalar::Real;

/// Departure distances beyond this many cells trigger a CFL warning.
pub const CFL_CELLS: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("departure point {cells:.2} cells away exceeds the {limit} cell stencil reach")]
    CflExceeded { cells: f64, limit: f64 },
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("velocity field is not finite")]
    NonFiniteVelocity,
    #[error("density and velocity grids differ: {density} vs {velocity}")]
    GridShapeMismatch { density: usize, velocity: usize },
}

/// Density of one constituent together with the admissible range inherited
/// from the initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField<T> {
    pub grid: ScalarGrid<T>,
    pub rho_minus: T,
    pub rho_plus: T,
}

impl<T: Real> DensityField<T> {
    pub fn new(grid: ScalarGrid<T>, rho_minus: T, rho_plus: T) -> Self {
        Self {
            grid,
            rho_minus,
            rho_plus,
        }
    }

    /// Density whose admissible range is its own extrema.
    pub fn from_grid(grid: ScalarGrid<T>) -> Self {
        let (lo, hi) = (grid.min(), grid.max());
        Self::new(grid, lo, hi)
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn values(&self) -> &[T] {
        self.grid.data()
    }

    /// True when every value lies in `[rho_minus, rho_plus]`.
    pub fn within_bounds(&self) -> bool {
        self.values()
            .iter()
            .all(|&r| r >= self.rho_minus && r <= self.rho_plus)
    }
}

/// Result of one transport step.
#[derive(Debug, Clone)]
pub struct Transported<T> {
    pub density: DensityField<T>,
    /// Longest characteristic displacement, in grid cells.
    pub max_departure_cells: T,
}

impl<T: Real> Transported<T> {
    pub fn cfl_exceeded(&self) -> bool {
        self.max_departure_cells > T::lit(CFL_CELLS)
    }

    /// Turns an over-long departure into an error.
    pub fn checked(self) -> Result<DensityField<T>, TransportError> {
        if self.cfl_exceeded() {
            return Err(TransportError::CflExceeded {
                cells: self.max_departure_cells.to_f64_lossy(),
                limit: CFL_CELLS,
            });
        }
        Ok(self.density)
    }
}

/// `a + s (b - a)` kept inside `[min(a,b), max(a,b)]`; rounding can otherwise
/// push the result one ulp past an endpoint.
#[inline]
fn lerp<T: Real>(a: T, b: T, s: T) -> T {
    let v = a + s * (b - a);
    v.max(a.min(b)).min(a.max(b))
}

/// Periodic bilinear interpolation of grid values at fractional grid indices
/// `(p₁, p₂)`.
fn interpolate<T: Real>(values: &[T], n: usize, p1: T, p2: T) -> T {
    let locate = |p: T| -> (usize, T) {
        let fl = p.floor();
        let frac = (p - fl).max(T::zero()).min(T::one());
        let idx = fl.to_i64().unwrap_or(0).rem_euclid(n as i64) as usize;
        (idx, frac)
    };
    let (i0, s) = locate(p1);
    let (j0, t) = locate(p2);
    let i1 = (i0 + 1) % n;
    let j1 = (j0 + 1) % n;
    let lower = lerp(values[i0 * n + j0], values[i0 * n + j1], t);
    let upper = lerp(values[i1 * n + j0], values[i1 * n + j1], t);
    lerp(lower, upper, s)
}

/// Advances `rho` by `dt` through the frozen velocity `v`.
pub fn transport<T: Real>(
    rho: &DensityField<T>,
    v: &GridVectorField<T>,
    dt: T,
) -> Result<Transported<T>, TransportError> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(TransportError::InvalidStep(dt.to_f64_lossy()));
    }
    let n = rho.n();
    if v.n != n {
        return Err(TransportError::GridShapeMismatch {
            density: n,
            velocity: v.n,
        });
    }
    if !v.is_finite() {
        return Err(TransportError::NonFiniteVelocity);
    }
    // work in grid-index units so that a zero displacement lands exactly on
    // a node
    let cells = dt / grid_spacing::<T>(n);
    let half = T::lit(0.5) * cells;
    let src = rho.values();
    let mut out = Vec::with_capacity(n * n);
    let mut max_disp = T::zero();
    for a in 0..n {
        let p1 = T::from_count(a);
        for b in 0..n {
            let p2 = T::from_count(b);
            let i = a * n + b;
            let (m1, m2) = (p1 - half * v.x[i], p2 - half * v.y[i]);
            let d1 = cells * interpolate(&v.x, n, m1, m2);
            let d2 = cells * interpolate(&v.y, n, m1, m2);
            max_disp = max_disp.max((d1 * d1 + d2 * d2).sqrt());
            out.push(interpolate(src, n, p1 - d1, p2 - d2));
        }
    }
    Ok(Transported {
        density: DensityField::new(ScalarGrid::from_vec(n, out), rho.rho_minus, rho.rho_plus),
        max_departure_cells: max_disp,
    })
}

/// Pointwise minimum and maximum over the grid.
pub fn density_extrema<T: Real>(rho: &DensityField<T>) -> (T, T) {
    (rho.grid.min(), rho.grid.max())
}
