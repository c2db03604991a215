//! Divergence-free Fourier basis on the periodic square `[0, 2π)²`.
//!
//! Each mode is `ψ = a · φ(k·x) · d` with `φ ∈ {cos, sin}`, `d = k⊥/|k|` and
//! `a = √2 / (2π|k|)`, which makes the family orthonormal for
//! `∫∇ψ_k : ∇ψ_l dx` and orthogonal in L² with `∫ψ_k·ψ_l dx = δ_kl / |k|²`.
//! The eigenvalue of the Stokes operator on mode `k` is `λ = |k|²`.
//!
//! Grid arrays are stored row-major with `data[a * N + b]` holding the value at
//! `(x₁, x₂) = (a h, b h)`, `h = 2π / N`.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::SquareMatrix;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("grid size {0} must be even and at least 4")]
    InvalidGridSize(usize),
    #[error("mode cutoff must be at least 1")]
    EmptyBasis,
    #[error(
        "mode cutoff K={cutoff} too large for grid N={grid}: need 2K+1 <= 2N/3 (dealiasing rule)"
    )]
    CutoffTooLargeForGrid { cutoff: usize, grid: usize },
    #[error("coefficient vector has length {got}, basis has {expected} modes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field lives on a {got}x{got} grid, basis uses {expected}x{expected}")]
    GridShapeMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Cos,
    Sin,
}

/// User-facing mode label: a wavevector and a parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeRef {
    pub kx: i32,
    pub ky: i32,
    pub parity: Parity,
}

impl ModeRef {
    pub fn new(kx: i32, ky: i32, parity: Parity) -> Self {
        Self { kx, ky, parity }
    }
}

/// One basis function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode<T> {
    pub k: (i32, i32),
    pub parity: Parity,
    /// Unit direction `k⊥/|k|`.
    pub dir: (T, T),
    /// Normalization `√2 / (2π|k|)`.
    pub amplitude: T,
    /// `|k|²`.
    pub eigenvalue: T,
}

/// Scalar field on the collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> ScalarGrid<T> {
    pub fn zeros(n: usize) -> Self {
        Self::constant(n, T::zero())
    }

    pub fn constant(n: usize, value: T) -> Self {
        Self {
            n,
            data: vec![value; n * n],
        }
    }

    /// Panics unless `data.len() == n * n`.
    pub fn from_vec(n: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * n, "grid data length");
        Self { n, data }
    }

    /// Samples `f(x₁, x₂)` at the collocation points.
    pub fn from_fn(n: usize, f: impl Fn(T, T) -> T) -> Self {
        let h = grid_spacing::<T>(n);
        let mut data = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                data.push(f(h * T::from_count(a), h * T::from_count(b)));
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn min(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Trapezoidal quadrature over the torus.
    pub fn integral(&self) -> T {
        let h = grid_spacing::<T>(self.n);
        self.data.iter().copied().sum::<T>() * h * h
    }

    pub fn mean(&self) -> T {
        self.data.iter().copied().sum::<T>() / T::from_count(self.data.len())
    }
}

/// Vector field sampled on the collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridVectorField<T> {
    pub n: usize,
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Real> GridVectorField<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            x: vec![T::zero(); n * n],
            y: vec![T::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(T, T) -> (T, T)) -> Self {
        let h = grid_spacing::<T>(n);
        let mut out = Self::zeros(n);
        for a in 0..n {
            for b in 0..n {
                let (u, v) = f(h * T::from_count(a), h * T::from_count(b));
                out.x[a * n + b] = u;
                out.y[a * n + b] = v;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            x: self.x.iter().zip(&other.x).map(|(&a, &b)| a + b).collect(),
            y: self.y.iter().zip(&other.y).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            x: self.x.iter().zip(&other.x).map(|(&a, &b)| a - b).collect(),
            y: self.y.iter().zip(&other.y).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            n: self.n,
            x: self.x.iter().map(|&a| a * s).collect(),
            y: self.y.iter().map(|&a| a * s).collect(),
        }
    }

    /// Pointwise product with a scalar grid.
    pub fn weighted(&self, w: &[T]) -> Self {
        Self {
            n: self.n,
            x: self.x.iter().zip(w).map(|(&a, &b)| a * b).collect(),
            y: self.y.iter().zip(w).map(|(&a, &b)| a * b).collect(),
        }
    }

    /// `∫ self · other dx` by trapezoidal quadrature.
    pub fn dot(&self, other: &Self) -> T {
        let h = grid_spacing::<T>(self.n);
        let s: T = (0..self.x.len())
            .map(|i| self.x[i] * other.x[i] + self.y[i] * other.y[i])
            .sum();
        s * h * h
    }

    /// `∫ w |self|² dx`.
    pub fn weighted_norm_sq(&self, w: &[T]) -> T {
        let h = grid_spacing::<T>(self.n);
        let s: T = (0..self.x.len())
            .map(|i| w[i] * (self.x[i] * self.x[i] + self.y[i] * self.y[i]))
            .sum();
        s * h * h
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_magnitude(&self) -> T {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(&a, &b)| (a * a + b * b).sqrt())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.x
            .iter()
            .chain(&self.y)
            .map(|a| a.abs())
            .fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }
}

pub fn grid_spacing<T: Real>(n: usize) -> T {
    T::lit(2.0) * T::PI() / T::from_count(n)
}

/// Signed wavenumber stored at FFT index `j`.
fn wavenumber(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Wavenumber used for spectral differentiation; the Nyquist index maps to 0
/// so derivatives of real fields stay real.
fn diff_wavenumber(j: usize, n: usize) -> i64 {
    if j == n / 2 {
        0
    } else {
        wavenumber(j, n)
    }
}

fn wrap(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Square 2D complex FFT built from 1D row/column passes.
#[derive(Clone)]
struct Fft2<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> Fft2<T> {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized transform in place: forward computes `Σ u e^{-ik·x}`,
    /// inverse computes `Σ û e^{+ik·x}`.
    fn apply(&self, data: &mut [Complex<T>], inverse: bool) {
        let fft = if inverse {
            &self.inverse
        } else {
            &self.forward
        };
        let n = self.n;
        fft.process(data);
        transpose(data, n);
        fft.process(data);
        transpose(data, n);
    }

    fn forward_real(&self, values: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.apply(&mut buf, false);
        buf
    }

    fn inverse_real(&self, mut spectrum: Vec<Complex<T>>) -> Vec<T> {
        self.apply(&mut spectrum, true);
        spectrum.into_iter().map(|c| c.re).collect()
    }
}

fn transpose<T: Copy>(data: &mut [T], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Divergence-free periodic basis together with the grid transforms that act
/// on it.
#[derive(Clone)]
pub struct SpectralBasis<T: Real> {
    grid_size: usize,
    cutoff: usize,
    modes: Vec<Mode<T>>,
    fft: Fft2<T>,
}

impl<T: Real> fmt::Debug for SpectralBasis<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralBasis")
            .field("grid_size", &self.grid_size)
            .field("cutoff", &self.cutoff)
            .field("modes", &self.modes.len())
            .finish()
    }
}

/// Checks the grid/cutoff preconditions of [`SpectralBasis::build`] without
/// allocating anything.
pub fn check_resolution(grid_size: usize, cutoff: usize) -> Result<(), BasisError> {
    if grid_size < 4 || !grid_size.is_multiple_of(2) {
        return Err(BasisError::InvalidGridSize(grid_size));
    }
    if cutoff == 0 {
        return Err(BasisError::EmptyBasis);
    }
    // 2K + 1 <= 2N/3 in integers
    if 3 * (2 * cutoff + 1) > 2 * grid_size {
        return Err(BasisError::CutoffTooLargeForGrid {
            cutoff,
            grid: grid_size,
        });
    }
    Ok(())
}

impl<T: Real> SpectralBasis<T> {
    /// Enumerates one representative per `±k` pair with `0 < |k|² ≤ K²`, two
    /// parities each, sorted by `(|k|², k₁, k₂, parity)`.
    pub fn build(grid_size: usize, cutoff: usize) -> Result<Self, BasisError> {
        check_resolution(grid_size, cutoff)?;
        let kmax = cutoff as i32;
        let mut reps = Vec::new();
        for k1 in 0..=kmax {
            for k2 in -kmax..=kmax {
                let r2 = k1 * k1 + k2 * k2;
                if r2 == 0 || r2 > kmax * kmax || (k1 == 0 && k2 < 0) {
                    continue;
                }
                reps.push((r2, k1, k2));
            }
        }
        reps.sort();
        let two_pi = T::lit(2.0) * T::PI();
        let mut modes = Vec::with_capacity(2 * reps.len());
        for (r2, k1, k2) in reps {
            let norm = T::lit(r2 as f64).sqrt();
            let dir = (T::lit(-k2 as f64) / norm, T::lit(k1 as f64) / norm);
            let amplitude = T::lit(2.0).sqrt() / (two_pi * norm);
            for parity in [Parity::Cos, Parity::Sin] {
                modes.push(Mode {
                    k: (k1, k2),
                    parity,
                    dir,
                    amplitude,
                    eigenvalue: T::lit(r2 as f64),
                });
            }
        }
        Ok(Self {
            grid_size,
            cutoff,
            modes,
            fft: Fft2::new(grid_size),
        })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of real modes `m`.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    pub fn spacing(&self) -> T {
        grid_spacing(self.grid_size)
    }

    /// Index of a mode and whether the user-facing label has the same sign
    /// as the stored basis function (`false` means `label = −ψ`).
    ///
    /// `(−k, cos)` is `−ψ_k` because the direction flips, `(−k, sin)` is `+ψ_k`.
    pub fn locate(&self, mode: ModeRef) -> Option<(usize, bool)> {
        let flip = mode.kx < 0 || (mode.kx == 0 && mode.ky < 0);
        let k = if flip {
            (-mode.kx, -mode.ky)
        } else {
            (mode.kx, mode.ky)
        };
        let idx = self
            .modes
            .iter()
            .position(|m| m.k == k && m.parity == mode.parity)?;
        let same = !flip || mode.parity == Parity::Sin;
        Some((idx, same))
    }

    fn check_len(&self, coeffs: &[T]) -> Result<(), BasisError> {
        if coeffs.len() != self.modes.len() {
            return Err(BasisError::LengthMismatch {
                expected: self.modes.len(),
                got: coeffs.len(),
            });
        }
        Ok(())
    }

    fn check_grid(&self, n: usize) -> Result<(), BasisError> {
        if n != self.grid_size {
            return Err(BasisError::GridShapeMismatch {
                expected: self.grid_size,
                got: n,
            });
        }
        Ok(())
    }

    fn index(&self, k1: i64, k2: i64) -> usize {
        wrap(k1, self.grid_size) * self.grid_size + wrap(k2, self.grid_size)
    }

    /// Spectra (scaled so that the inverse FFT yields grid values) of both
    /// velocity components of `Σ c_k ψ_k`.
    fn coeff_spectrum(&self, coeffs: &[T]) -> [Vec<Complex<T>>; 2] {
        let n2 = self.grid_size * self.grid_size;
        let mut sx = vec![Complex::new(T::zero(), T::zero()); n2];
        let mut sy = sx.clone();
        let half = T::lit(0.5);
        for (mode, &c) in self.modes.iter().zip(coeffs) {
            if c == T::zero() {
                continue;
            }
            let w = c * mode.amplitude * half;
            // e^{ik·x} and e^{-ik·x} weights
            let (plus, minus) = match mode.parity {
                Parity::Cos => (Complex::new(w, T::zero()), Complex::new(w, T::zero())),
                Parity::Sin => (Complex::new(T::zero(), -w), Complex::new(T::zero(), w)),
            };
            let (k1, k2) = (mode.k.0 as i64, mode.k.1 as i64);
            let ip = self.index(k1, k2);
            let im = self.index(-k1, -k2);
            sx[ip] += plus * mode.dir.0;
            sx[im] += minus * mode.dir.0;
            sy[ip] += plus * mode.dir.1;
            sy[im] += minus * mode.dir.1;
        }
        [sx, sy]
    }

    /// `Σ c_k ψ_k` on the grid.
    pub fn synthesize(&self, coeffs: &[T]) -> Result<GridVectorField<T>, BasisError> {
        self.check_len(coeffs)?;
        let [sx, sy] = self.coeff_spectrum(coeffs);
        Ok(GridVectorField {
            n: self.grid_size,
            x: self.fft.inverse_real(sx),
            y: self.fft.inverse_real(sy),
        })
    }

    /// L² inner products `∫ u · ψ_k dx` for every mode, computed from the
    /// DFT of `u`; identical to trapezoidal quadrature on the grid.
    pub fn inner_products(&self, field: &GridVectorField<T>) -> Result<Vec<T>, BasisError> {
        self.check_grid(field.n)?;
        let fx = self.fft.forward_real(&field.x);
        let fy = self.fft.forward_real(&field.y);
        let n2 = T::from_count(self.grid_size * self.grid_size);
        let two_pi = T::lit(2.0) * T::PI();
        let area = two_pi * two_pi;
        Ok(self
            .modes
            .iter()
            .map(|mode| {
                let i = self.index(mode.k.0 as i64, mode.k.1 as i64);
                let proj = (fx[i] * mode.dir.0 + fy[i] * mode.dir.1) / n2;
                let part = match mode.parity {
                    Parity::Cos => proj.re,
                    Parity::Sin => -proj.im,
                };
                mode.amplitude * area * part
            })
            .collect())
    }

    /// Coefficients of the projection of `field` onto the basis in the
    /// `∫∇u:∇ψ` inner product. Gradient parts and modes beyond the cutoff are
    /// discarded.
    pub fn analyze(&self, field: &GridVectorField<T>) -> Result<Vec<T>, BasisError> {
        let mut c = self.inner_products(field)?;
        for (ci, mode) in c.iter_mut().zip(&self.modes) {
            *ci *= mode.eigenvalue;
        }
        Ok(c)
    }

    /// Velocity gradient `[∂₁v₁, ∂₂v₁, ∂₁v₂, ∂₂v₂]` of `Σ c_k ψ_k`.
    pub fn synthesize_gradient(&self, coeffs: &[T]) -> Result<[Vec<T>; 4], BasisError> {
        self.check_len(coeffs)?;
        let [sx, sy] = self.coeff_spectrum(coeffs);
        Ok(self.gradients_of_spectra(&sx, &sy))
    }

    fn gradients_of_spectra(&self, sx: &[Complex<T>], sy: &[Complex<T>]) -> [Vec<T>; 4] {
        let d = |s: &[Complex<T>], axis: usize| {
            let spec = self.differentiate_spectrum(s, axis);
            self.fft.inverse_real(spec)
        };
        [d(sx, 0), d(sx, 1), d(sy, 0), d(sy, 1)]
    }

    fn differentiate_spectrum(&self, s: &[Complex<T>], axis: usize) -> Vec<Complex<T>> {
        let n = self.grid_size;
        let mut out = s.to_vec();
        for a in 0..n {
            for b in 0..n {
                let k = if axis == 0 {
                    diff_wavenumber(a, n)
                } else {
                    diff_wavenumber(b, n)
                };
                let v = out[a * n + b];
                out[a * n + b] = Complex::new(-v.im, v.re) * T::lit(k as f64);
            }
        }
        out
    }

    fn normalized_spectrum(&self, values: &[T]) -> Vec<Complex<T>> {
        let n2 = T::from_count(self.grid_size * self.grid_size);
        self.fft
            .forward_real(values)
            .into_iter()
            .map(|c| c / n2)
            .collect()
    }

    /// `(v·∇)v` evaluated pseudo-spectrally, with the product filtered by the
    /// 2/3 rule (wavenumbers with `|k_j| > N/3` removed).
    pub fn convective_term(
        &self,
        field: &GridVectorField<T>,
    ) -> Result<GridVectorField<T>, BasisError> {
        self.check_grid(field.n)?;
        let sx = self.normalized_spectrum(&field.x);
        let sy = self.normalized_spectrum(&field.y);
        Ok(self.convective_from_parts(field, &sx, &sy))
    }

    /// Same as [`convective_term`](Self::convective_term) for a field given by
    /// its coefficients; `field` must be `synthesize(coeffs)`.
    pub fn convective_from_coeffs(
        &self,
        coeffs: &[T],
        field: &GridVectorField<T>,
    ) -> Result<GridVectorField<T>, BasisError> {
        self.check_len(coeffs)?;
        let [sx, sy] = self.coeff_spectrum(coeffs);
        Ok(self.convective_from_parts(field, &sx, &sy))
    }

    fn convective_from_parts(
        &self,
        v: &GridVectorField<T>,
        sx: &[Complex<T>],
        sy: &[Complex<T>],
    ) -> GridVectorField<T> {
        let [dxx, dxy, dyx, dyy] = self.gradients_of_spectra(sx, sy);
        let n2 = self.grid_size * self.grid_size;
        let mut wx = Vec::with_capacity(n2);
        let mut wy = Vec::with_capacity(n2);
        for i in 0..n2 {
            wx.push(v.x[i] * dxx[i] + v.y[i] * dxy[i]);
            wy.push(v.x[i] * dyx[i] + v.y[i] * dyy[i]);
        }
        GridVectorField {
            n: self.grid_size,
            x: self.dealias(&wx),
            y: self.dealias(&wy),
        }
    }

    /// Removes every Fourier component with `|k₁| > N/3` or `|k₂| > N/3`.
    pub fn dealias(&self, values: &[T]) -> Vec<T> {
        let n = self.grid_size;
        let keep = (n / 3) as i64;
        let mut s = self.normalized_spectrum(values);
        for a in 0..n {
            for b in 0..n {
                if wavenumber(a, n).abs() > keep || wavenumber(b, n).abs() > keep {
                    s[a * n + b] = Complex::new(T::zero(), T::zero());
                }
            }
        }
        self.fft.inverse_real(s)
    }

    /// Spectral gradient of a grid scalar.
    pub fn gradient(&self, f: &ScalarGrid<T>) -> Result<GridVectorField<T>, BasisError> {
        self.check_grid(f.n())?;
        let s = self.normalized_spectrum(f.data());
        Ok(GridVectorField {
            n: self.grid_size,
            x: self.fft.inverse_real(self.differentiate_spectrum(&s, 0)),
            y: self.fft.inverse_real(self.differentiate_spectrum(&s, 1)),
        })
    }

    /// Spectral divergence of a grid vector field.
    pub fn divergence(&self, field: &GridVectorField<T>) -> Result<ScalarGrid<T>, BasisError> {
        self.check_grid(field.n)?;
        let sx = self.differentiate_spectrum(&self.normalized_spectrum(&field.x), 0);
        let sy = self.differentiate_spectrum(&self.normalized_spectrum(&field.y), 1);
        let sum: Vec<Complex<T>> = sx.into_iter().zip(sy).map(|(a, b)| a + b).collect();
        Ok(ScalarGrid::from_vec(
            self.grid_size,
            self.fft.inverse_real(sum),
        ))
    }

    /// Splits a grid field into its Leray (divergence-free) part and the
    /// potential `φ` of its gradient part, `u = P u + ∇φ`, with `φ` of zero
    /// mean. Uses the Nyquist-free differentiation wavenumbers throughout so
    /// that the two parts reassemble `u` mode by mode.
    pub fn helmholtz(
        &self,
        field: &GridVectorField<T>,
    ) -> Result<(GridVectorField<T>, ScalarGrid<T>), BasisError> {
        self.check_grid(field.n)?;
        let n = self.grid_size;
        let mut sx = self.normalized_spectrum(&field.x);
        let mut sy = self.normalized_spectrum(&field.y);
        let mut phi = vec![Complex::new(T::zero(), T::zero()); n * n];
        for a in 0..n {
            for b in 0..n {
                let (k1, k2) = (diff_wavenumber(a, n), diff_wavenumber(b, n));
                let kk = k1 * k1 + k2 * k2;
                if kk == 0 {
                    continue;
                }
                let i = a * n + b;
                let (k1, k2, kk) = (T::lit(k1 as f64), T::lit(k2 as f64), T::lit(kk as f64));
                let kdotu = sx[i] * k1 + sy[i] * k2;
                // φ̂ = −i k·û / |k|²
                phi[i] = Complex::new(kdotu.im, -kdotu.re) / kk;
                sx[i] -= kdotu * (k1 / kk);
                sy[i] -= kdotu * (k2 / kk);
            }
        }
        Ok((
            GridVectorField {
                n,
                x: self.fft.inverse_real(sx),
                y: self.fft.inverse_real(sy),
            },
            ScalarGrid::from_vec(n, self.fft.inverse_real(phi)),
        ))
    }

    /// Leray projection onto divergence-free grid fields.
    pub fn leray_project(
        &self,
        field: &GridVectorField<T>,
    ) -> Result<GridVectorField<T>, BasisError> {
        Ok(self.helmholtz(field)?.0)
    }

    /// L² Gram matrix `∫ ρ ψ_k · ψ_l dx` for a density on the grid.
    ///
    /// Product-to-sum identities reduce every entry to DFT coefficients of ρ
    /// at `k ± l`, which reproduces trapezoidal quadrature of `ρ ψ_k·ψ_l`
    /// exactly at `O(N² log N + m²)` cost.
    pub fn mass_matrix(&self, rho: &ScalarGrid<T>) -> Result<SquareMatrix<T>, BasisError> {
        self.check_grid(rho.n())?;
        let spec = self.normalized_spectrum(rho.data());
        let two_pi = T::lit(2.0) * T::PI();
        let area = two_pi * two_pi;
        let cos_int = |k1: i64, k2: i64| area * spec[self.index(k1, k2)].re;
        let sin_int = |k1: i64, k2: i64| -area * spec[self.index(k1, k2)].im;
        let m = self.modes.len();
        let half = T::lit(0.5);
        let mut out = SquareMatrix::zeros(m);
        for p in 0..m {
            let mp = &self.modes[p];
            let (a1, a2) = (mp.k.0 as i64, mp.k.1 as i64);
            for q in p..m {
                let mq = &self.modes[q];
                let (b1, b2) = (mq.k.0 as i64, mq.k.1 as i64);
                let (s1, s2, d1, d2) = (a1 + b1, a2 + b2, a1 - b1, a2 - b2);
                let integral = match (mp.parity, mq.parity) {
                    (Parity::Cos, Parity::Cos) => cos_int(d1, d2) + cos_int(s1, s2),
                    (Parity::Sin, Parity::Sin) => cos_int(d1, d2) - cos_int(s1, s2),
                    (Parity::Sin, Parity::Cos) => sin_int(s1, s2) + sin_int(d1, d2),
                    (Parity::Cos, Parity::Sin) => sin_int(s1, s2) - sin_int(d1, d2),
                };
                let dd = mp.dir.0 * mq.dir.0 + mp.dir.1 * mq.dir.1;
                let v = half * integral * mp.amplitude * mq.amplitude * dd;
                out[(p, q)] = v;
                out[(q, p)] = v;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reps(b: &SpectralBasis<f64>) -> Vec<(i32, i32)> {
        let mut r: Vec<_> = b.modes().iter().map(|m| m.k).collect();
        r.dedup();
        r
    }

    /// Brute-force lattice enumeration, independent of `build`.
    fn lattice_count(k: i32) -> usize {
        let mut count = 0;
        for a in -k..=k {
            for b in -k..=k {
                if a * a + b * b > 0 && a * a + b * b <= k * k {
                    count += 1;
                }
            }
        }
        count // each ±k pair counted twice, two parities each -> m
    }

    #[test]
    fn enumeration_small_cutoffs() {
        let b = SpectralBasis::<f64>::build(16, 1).unwrap();
        assert_eq!(reps(&b), vec![(0, 1), (1, 0)]);
        assert_eq!(b.len(), 4);
        let b = SpectralBasis::<f64>::build(16, 2).unwrap();
        let mut r = reps(&b);
        r.sort();
        let mut expected = vec![(1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (0, 2)];
        expected.sort();
        assert_eq!(r, expected);
        assert_eq!(b.len(), 12);
        for k in 1..6 {
            let b = SpectralBasis::<f64>::build(64, k).unwrap();
            assert_eq!(b.len(), lattice_count(k as i32));
        }
    }

    #[test]
    fn cutoff_too_large() {
        assert_eq!(
            SpectralBasis::<f64>::build(16, 11).unwrap_err(),
            BasisError::CutoffTooLargeForGrid {
                cutoff: 11,
                grid: 16
            }
        );
        assert!(SpectralBasis::<f64>::build(16, 5).is_err());
        assert!(SpectralBasis::<f64>::build(16, 4).is_ok());
        assert!(SpectralBasis::<f64>::build(15, 1).is_err());
    }

    #[test]
    fn ordering_is_deterministic() {
        let b = SpectralBasis::<f64>::build(32, 4).unwrap();
        let keys: Vec<_> = b
            .modes()
            .iter()
            .map(|m| (m.k.0 * m.k.0 + m.k.1 * m.k.1, m.k.0, m.k.1, m.parity))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for m in b.modes() {
            let dot = m.dir.0 * m.k.0 as f64 + m.dir.1 * m.k.1 as f64;
            assert!(dot.abs() < 1e-15);
        }
    }

    #[test]
    fn zero_and_single_mode_synthesis() {
        let b = SpectralBasis::<f64>::build(16, 1).unwrap();
        let zero = b.synthesize(&[0.0; 4]).unwrap();
        assert!(zero.max_abs() == 0.0);
        let (idx, same) = b.locate(ModeRef::new(1, 0, Parity::Cos)).unwrap();
        assert!(same);
        let mut c = vec![0.0; 4];
        c[idx] = 1.0;
        let v = b.synthesize(&c).unwrap();
        let a = 2f64.sqrt() / (2.0 * std::f64::consts::PI);
        let h = b.spacing();
        for ia in 0..16 {
            for ib in 0..16 {
                let x1 = ia as f64 * h;
                let i = ia * 16 + ib;
                assert!(v.x[i].abs() < 1e-15);
                assert!((v.y[i] - a * x1.cos()).abs() < 1e-15);
            }
        }
        assert!(b.synthesize(&[1.0]).is_err());
    }

    #[test]
    fn locate_handles_negative_labels() {
        let b = SpectralBasis::<f64>::build(32, 2).unwrap();
        let field = |m: ModeRef| {
            let (i, same) = b.locate(m).unwrap();
            let mut c = vec![0.0; b.len()];
            c[i] = if same { 1.0 } else { -1.0 };
            b.synthesize(&c).unwrap()
        };
        // direct evaluation of the label convention a φ(k·x) k⊥/|k|
        for m in [
            ModeRef::new(-1, 0, Parity::Cos),
            ModeRef::new(-1, 1, Parity::Sin),
            ModeRef::new(0, -2, Parity::Sin),
        ] {
            let v = field(m);
            let norm = ((m.kx * m.kx + m.ky * m.ky) as f64).sqrt();
            let a = 2f64.sqrt() / (2.0 * std::f64::consts::PI * norm);
            let exact = GridVectorField::<f64>::from_fn(32, |x, y| {
                let ph = m.kx as f64 * x + m.ky as f64 * y;
                let s = a * if m.parity == Parity::Cos {
                    ph.cos()
                } else {
                    ph.sin()
                };
                (-s * m.ky as f64 / norm, s * m.kx as f64 / norm)
            });
            assert!(v.sub(&exact).max_abs() < 1e-14, "{m:?}");
        }
        assert!(b.locate(ModeRef::new(3, 0, Parity::Cos)).is_none());
    }

    #[test]
    fn gradients_are_invisible_to_analysis() {
        let b = SpectralBasis::<f64>::build(32, 4).unwrap();
        let grad = GridVectorField::<f64>::from_fn(32, |x, y| {
            // φ = sin(x)cos(2y) + cos(x+y)
            (
                x.cos() * (2.0 * y).cos() - (x + y).sin(),
                -2.0 * x.sin() * (2.0 * y).sin() - (x + y).sin(),
            )
        });
        for c in b.analyze(&grad).unwrap() {
            assert!(c.abs() < 1e-12);
        }
        // superposition with a divergence-free single mode
        let a = 2f64.sqrt() / (2.0 * std::f64::consts::PI);
        let mixed = GridVectorField::<f64>::from_fn(32, |x, y| (0.0, a * x.cos() + y.cos()));
        let c = b.analyze(&mixed).unwrap();
        let (idx, _) = b.locate(ModeRef::new(1, 0, Parity::Cos)).unwrap();
        for (i, ci) in c.iter().enumerate() {
            let expected = if i == idx { 1.0 } else { 0.0 };
            assert!((ci - expected).abs() < 1e-12, "mode {i}: {ci}");
        }
    }

    #[test]
    fn gram_matrices_by_quadrature() {
        let b = SpectralBasis::<f64>::build(24, 3).unwrap();
        let m = b.len();
        let fields: Vec<_> = (0..m)
            .map(|i| {
                let mut c = vec![0.0; m];
                c[i] = 1.0;
                b.synthesize(&c).unwrap()
            })
            .collect();
        let grads: Vec<_> = (0..m)
            .map(|i| {
                let mut c = vec![0.0; m];
                c[i] = 1.0;
                b.synthesize_gradient(&c).unwrap()
            })
            .collect();
        let h = b.spacing();
        for p in 0..m {
            for q in 0..m {
                let l2 = fields[p].dot(&fields[q]);
                let expected = if p == q {
                    1.0 / b.modes()[p].eigenvalue
                } else {
                    0.0
                };
                assert!((l2 - expected).abs() < 1e-10);
                let h1: f64 = (0..4)
                    .map(|c| {
                        grads[p][c]
                            .iter()
                            .zip(&grads[q][c])
                            .map(|(a, b)| a * b)
                            .sum::<f64>()
                    })
                    .sum::<f64>()
                    * h
                    * h;
                assert!((h1 - if p == q { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mass_matrix_matches_direct_quadrature() {
        let b = SpectralBasis::<f64>::build(24, 3).unwrap();
        let rho = ScalarGrid::from_fn(24, |x: f64, y: f64| {
            1.5 + 0.5 * x.cos() + 0.2 * (x + 2.0 * y).sin() + 0.1 * (3.0 * y).cos()
        });
        let mm = b.mass_matrix(&rho).unwrap();
        let m = b.len();
        let fields: Vec<_> = (0..m)
            .map(|i| {
                let mut c = vec![0.0; m];
                c[i] = 1.0;
                b.synthesize(&c).unwrap()
            })
            .collect();
        for p in 0..m {
            for q in 0..m {
                let direct = fields[p].weighted(rho.data()).dot(&fields[q]);
                assert!((mm[(p, q)] - direct).abs() < 1e-14, "({p},{q})");
            }
        }
        // unit density gives the L² Gram matrix diag(1/λ)
        let unit = b.mass_matrix(&ScalarGrid::constant(24, 1.0)).unwrap();
        for p in 0..m {
            for q in 0..m {
                let expected = if p == q {
                    1.0 / b.modes()[p].eigenvalue
                } else {
                    0.0
                };
                assert!((unit[(p, q)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_mode_has_no_self_advection() {
        let b = SpectralBasis::<f64>::build(32, 4).unwrap();
        for i in 0..b.len() {
            let mut c = vec![0.0; b.len()];
            c[i] = 3.0;
            let v = b.synthesize(&c).unwrap();
            let w = b.convective_term(&v).unwrap();
            assert!(w.max_abs() < 1e-12);
        }
        let zero = GridVectorField::zeros(32);
        assert_eq!(b.convective_term(&zero).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn convective_term_against_fine_quadrature() {
        // v = ψ(1,0,cos) + 0.7 ψ(1,1,sin), product evaluated analytically on a
        // 3x finer grid and sampled at the coarse points.
        let b = SpectralBasis::<f64>::build(32, 2).unwrap();
        let (i1, _) = b.locate(ModeRef::new(1, 0, Parity::Cos)).unwrap();
        let (i2, _) = b.locate(ModeRef::new(1, 1, Parity::Sin)).unwrap();
        let mut c = vec![0.0; b.len()];
        c[i1] = 1.0;
        c[i2] = 0.7;
        let v = b.synthesize(&c).unwrap();
        let w = b.convective_term(&v).unwrap();
        let pi = std::f64::consts::PI;
        let a1 = 2f64.sqrt() / (2.0 * pi);
        let a2 = 2f64.sqrt() / (2.0 * pi * 2f64.sqrt());
        let d2 = (-1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt());
        let exact = |x: f64, y: f64| {
            // v = (0, a1 cos x) + 0.7 a2 sin(x+y) d2
            let s = 0.7 * a2;
            let vx = s * (x + y).sin() * d2.0;
            let vy = a1 * x.cos() + s * (x + y).sin() * d2.1;
            let dvx_dx = s * (x + y).cos() * d2.0;
            let dvx_dy = dvx_dx;
            let dvy_dx = -a1 * x.sin() + s * (x + y).cos() * d2.1;
            let dvy_dy = s * (x + y).cos() * d2.1;
            (vx * dvx_dx + vy * dvx_dy, vx * dvy_dx + vy * dvy_dy)
        };
        let fine = GridVectorField::<f64>::from_fn(96, exact);
        for a in 0..32 {
            for bb in 0..32 {
                let i = a * 32 + bb;
                let j = (3 * a) * 96 + 3 * bb;
                assert!((w.x[i] - fine.x[j]).abs() < 1e-13);
                assert!((w.y[i] - fine.y[j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn helmholtz_parts_reassemble() {
        let b = SpectralBasis::<f64>::build(32, 4).unwrap();
        let u = GridVectorField::<f64>::from_fn(32, |x, y| {
            (
                (x + y).sin() + 0.3 * (2.0 * x).cos(),
                y.cos() * x.sin() + 0.5,
            )
        });
        let (p, phi) = b.helmholtz(&u).unwrap();
        let g = b.gradient(&phi).unwrap();
        assert!(p.add(&g).sub(&u).max_abs() < 1e-13);
        assert!(b
            .divergence(&p)
            .unwrap()
            .data()
            .iter()
            .all(|d| d.abs() < 1e-12));
        assert!(phi.mean().abs() < 1e-15);
    }

    #[test]
    fn f32_round_trip() {
        let b = SpectralBasis::<f32>::build(16, 3).unwrap();
        let c: Vec<f32> = (0..b.len()).map(|i| (i as f32 * 0.37).sin()).collect();
        let back = b.analyze(&b.synthesize(&c).unwrap()).unwrap();
        for (x, y) in c.iter().zip(&back) {
            assert!((x - y).abs() < 1e-4);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn round_trip_and_divergence(c in prop::collection::vec(-2.0f64..2.0, 48)) {
            let b = SpectralBasis::<f64>::build(24, 4).unwrap();
            let mut coeffs = c;
            coeffs.resize(b.len(), 0.5);
            let v = b.synthesize(&coeffs).unwrap();
            let back = b.analyze(&v).unwrap();
            for (x, y) in coeffs.iter().zip(&back) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            let div = b.divergence(&v).unwrap();
            prop_assert!(div.data().iter().all(|d| d.abs() < 1e-12));
            // advection is skew: ∫ (v·∇)v · v = 0
            let w = b.convective_term(&v).unwrap();
            prop_assert!(w.dot(&v).abs() < 1e-10);
        }
    }
}
