//! Split-step Fourier reference solver on a uniform periodic box.
//!
//! The harmonic oscillator `i∂_tψ = −Δψ + |x|²ψ` is advanced exactly in time
//! through the factorisation
//!
//! ```text
//! e^{−itH} = e^{−(i/2)tan(t)|x|²} e^{(i/2)sin(2t)Δ} e^{−(i/2)tan(t)|x|²},
//! ```
//!
//! and the cubic part `i∂_tψ = λ|ψ|²ψ` by its pointwise exact phase.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Distance to `π/2` below which a single linear step is refused.
pub const TAN_GUARD: f64 = 1e-6;

/// Cell-centred grid on `[−w_1, w_1] × … × [−w_d, w_d]`, row-major with the
/// last axis contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub shape: Vec<usize>,
    pub halfwidth: Vec<f64>,
}

impl Grid {
    pub fn new(shape: Vec<usize>, halfwidth: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "only 1-D and 2-D grids are supported, got {} axes",
                shape.len()
            )));
        }
        if shape.len() != halfwidth.len() {
            return Err(Error::InvalidGrid("shape and half-width lengths differ".into()));
        }
        if let Some(n) = shape.iter().find(|&&n| n < 8) {
            return Err(Error::InvalidGrid(format!("axis with {n} points, need at least 8")));
        }
        if halfwidth.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidGrid("half-widths must be positive and finite".into()));
        }
        Ok(Self { shape, halfwidth })
    }

    /// Square 2-D grid.
    pub fn square(n: usize, halfwidth: f64) -> Result<Self> {
        Self::new(vec![n, n], vec![halfwidth, halfwidth])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.halfwidth[axis] / self.shape[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn coords(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        let w = self.halfwidth[axis];
        (0..self.shape[axis]).map(|k| -w + (k as f64 + 0.5) * h).collect()
    }

    /// Angular wavenumbers `πk/w`, Nyquist on the negative side.
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        let n = self.shape[axis] as i64;
        let w = self.halfwidth[axis];
        (0..n)
            .map(|k| {
                let kk = if k < (n + 1) / 2 { k } else { k - n };
                PI * kk as f64 / w
            })
            .collect()
    }

    /// Index of the Nyquist mode on an axis, when the size is even.
    fn nyquist(&self, axis: usize) -> Option<usize> {
        let n = self.shape[axis];
        (n % 2 == 0).then_some(n / 2)
    }

    fn multi_index(&self, flat: usize) -> [usize; 2] {
        if self.dim() == 1 {
            [flat, 0]
        } else {
            [flat / self.shape[1], flat % self.shape[1]]
        }
    }

    /// Coordinates of every node in storage order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let cs: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.coords(a)).collect();
        (0..self.len())
            .map(|i| {
                let m = self.multi_index(i);
                (0..self.dim()).map(|a| cs[a][m[a]]).collect()
            })
            .collect()
    }

    fn radial_squared(&self, per_axis: impl Fn(usize) -> Vec<f64>) -> Vec<f64> {
        let cs: Vec<Vec<f64>> = (0..self.dim()).map(&per_axis).collect();
        (0..self.len())
            .map(|i| {
                let m = self.multi_index(i);
                (0..self.dim()).map(|a| cs[a][m[a]] * cs[a][m[a]]).sum()
            })
            .collect()
    }
}

/// Complex samples on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = grid.points().iter().map(|p| f(p)).collect();
        Self { grid, values }
    }

    /// Discrete `‖f‖²` with uniform cell weights.
    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Discrete `⟨f, g⟩ = ∫ f ḡ`.
    pub fn inner(&self, other: &GridField) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * self.grid.cell_volume()
    }

    /// Discrete `‖f − g‖`.
    pub fn distance(&self, other: &GridField) -> f64 {
        (self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * self.grid.cell_volume())
        .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// FFT plans and cached multipliers for one grid.
pub struct SpectralSolver {
    grid: Grid,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    x2: Vec<f64>,
    xi2: Vec<f64>,
}

impl std::fmt::Debug for SpectralSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralSolver").field("grid", &self.grid).finish()
    }
}

impl SpectralSolver {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = grid.shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let x2 = grid.radial_squared(|a| grid.coords(a));
        let xi2 = grid.radial_squared(|a| grid.wavenumbers(a));
        Self {
            grid,
            forward,
            inverse,
            x2,
            xi2,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn check(&self, f: &GridField) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::InvalidGrid("field lives on a different grid".into()));
        }
        Ok(())
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        let shape = &self.grid.shape;
        if shape.len() == 1 {
            plans[0].process(data);
            return;
        }
        let (n0, n1) = (shape[0], shape[1]);
        for row in data.chunks_mut(n1) {
            plans[1].process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n0];
        for j in 0..n1 {
            for i in 0..n0 {
                col[i] = data[i * n1 + j];
            }
            plans[0].process(&mut col);
            for i in 0..n0 {
                data[i * n1 + j] = col[i];
            }
        }
    }

    /// Unnormalised forward DFT.
    pub fn fft(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Normalised inverse DFT.
    pub fn ifft(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// Exact harmonic-oscillator step of duration `dt`, `|dt| < π/2`.
    pub fn linear_step(&self, f: &GridField, dt: f64) -> Result<GridField> {
        self.check(f)?;
        if !dt.is_finite() {
            return Err(Error::NonFinite("dt"));
        }
        if dt.abs() >= FRAC_PI_2 - TAN_GUARD {
            return Err(Error::StepTooLarge(dt.abs()));
        }
        if dt == 0.0 {
            return Ok(f.clone());
        }
        let tan = dt.tan();
        let sin2 = (2.0 * dt).sin();
        let mut v: Vec<Complex64> = f
            .values
            .iter()
            .zip(&self.x2)
            .map(|(u, r2)| u * Complex64::from_polar(1.0, -0.5 * tan * r2))
            .collect();
        self.fft(&mut v);
        for (u, k2) in v.iter_mut().zip(&self.xi2) {
            *u *= Complex64::from_polar(1.0, -0.5 * sin2 * k2);
        }
        self.ifft(&mut v);
        for (u, r2) in v.iter_mut().zip(&self.x2) {
            *u *= Complex64::from_polar(1.0, -0.5 * tan * r2);
        }
        Ok(GridField {
            grid: self.grid.clone(),
            values: v,
        })
    }

    /// Harmonic-oscillator flow for any `t`, split into equal pieces below
    /// the `tan` singularity.
    pub fn propagate_linear(&self, f: &GridField, t: f64) -> Result<GridField> {
        let limit = 0.25 * PI;
        let pieces = (t.abs() / limit).ceil().max(1.0) as usize;
        let h = t / pieces as f64;
        let mut cur = f.clone();
        for _ in 0..pieces {
            cur = self.linear_step(&cur, h)?;
        }
        Ok(cur)
    }

    /// `η ↦ e^{−iλ dt |η|²} η` pointwise.
    pub fn nonlinear_step(&self, f: &GridField, dt: f64, lambda: f64) -> Result<GridField> {
        self.check(f)?;
        Ok(nonlinear_phase(f, dt, lambda))
    }

    /// Strang splitting: half linear, full nonlinear, half linear.
    /// `mu` rescales the linear time; the nonlinear stage is skipped for `λ = 0`.
    pub fn strang_step(&self, f: &GridField, dt: f64, mu: f64, lambda: f64) -> Result<GridField> {
        let half = self.propagate_linear(f, 0.5 * mu * dt)?;
        let mid = if lambda == 0.0 {
            half
        } else {
            self.nonlinear_step(&half, dt, lambda)?
        };
        self.propagate_linear(&mid, 0.5 * mu * dt)
    }

    /// Spectral partial derivative along `axis` (Nyquist mode dropped).
    pub fn derivative(&self, f: &GridField, axis: usize) -> Result<GridField> {
        self.check(f)?;
        if axis >= self.grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.dim(),
                got: axis + 1,
            });
        }
        let ks = self.grid.wavenumbers(axis);
        let nyq = self.grid.nyquist(axis);
        let mut v = f.values.clone();
        self.fft(&mut v);
        for (i, u) in v.iter_mut().enumerate() {
            let m = self.grid.multi_index(i)[axis];
            if Some(m) == nyq {
                *u = Complex64::new(0.0, 0.0);
            } else {
                *u *= Complex64::new(0.0, ks[m]);
            }
        }
        self.ifft(&mut v);
        Ok(GridField {
            grid: self.grid.clone(),
            values: v,
        })
    }

    /// Spectral Laplacian.
    pub fn laplacian(&self, f: &GridField) -> Result<GridField> {
        self.check(f)?;
        let mut v = f.values.clone();
        self.fft(&mut v);
        for (u, k2) in v.iter_mut().zip(&self.xi2) {
            *u *= -k2;
        }
        self.ifft(&mut v);
        Ok(GridField {
            grid: self.grid.clone(),
            values: v,
        })
    }

    /// Fraction of the discrete mass in the top third of wavenumbers on any axis.
    pub fn high_frequency_fraction(&self, f: &GridField) -> Result<f64> {
        self.check(f)?;
        let mut v = f.values.clone();
        self.fft(&mut v);
        let total: f64 = v.iter().map(|u| u.norm_sqr()).sum();
        if total == 0.0 {
            return Ok(0.0);
        }
        let kmax: Vec<f64> = (0..self.grid.dim())
            .map(|a| PI * (self.grid.shape[a] / 2) as f64 / self.grid.halfwidth[a])
            .collect();
        let ks: Vec<Vec<f64>> = (0..self.grid.dim()).map(|a| self.grid.wavenumbers(a)).collect();
        let high: f64 = v
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let m = self.grid.multi_index(*i);
                (0..self.grid.dim()).any(|a| ks[a][m[a]].abs() > 2.0 / 3.0 * kmax[a])
            })
            .map(|(_, u)| u.norm_sqr())
            .sum();
        Ok(high / total)
    }
}

/// Exact solution of `i∂_tη = λ|η|²η` over `dt`.
pub fn nonlinear_phase(f: &GridField, dt: f64, lambda: f64) -> GridField {
    let values = f
        .values
        .iter()
        .map(|u| u * Complex64::from_polar(1.0, -lambda * dt * u.norm_sqr()))
        .collect();
    GridField {
        grid: f.grid.clone(),
        values,
    }
}
