//! Conserved quantities of `i∂_tψ + μ(Δψ − |x|²ψ) = λ|ψ|²ψ`, in closed form
//! for Gaussian bubble ensembles and by spectral quadrature on grids.
//!
//! * mass `‖ψ‖²`
//! * energy `E = (μ/2)(‖∇ψ‖² + ‖xψ‖²) + (λ/4)∫|ψ|⁴`
//! * momentum (`d = 2`) `M = (E − μ‖xψ‖²)² + μ²(Im∫x·∇ψ ψ̄)²`
//! * non-radial quantities (`d = 2`) `𝒫_j = ¼(P_j² + Q_j²)` with
//!   `P_j = Im∫∂_jψ ψ̄` and `Q_j = ∫x_j|ψ|²`.
//!
//! `P_j` and `Q_j` rotate into each other at rate `2μ`, so only the sum
//! of their squares with equal weights is invariant for general `μ`.

use num_complex::Complex64;

use crate::bubble::BubbleEnsemble;
use crate::error::{Error, Result};
use crate::gaussian::{interaction_rows, AffineQuad, GaussianExponent, GaussianPairKernel};
use crate::spectral::{GridField, SpectralSolver};

/// Coefficients of the equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservableParams {
    pub mu: f64,
    pub lambda: f64,
}

/// Quadratic and quartic integrals every observable is built from.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub dim: usize,
    /// `‖ψ‖²`
    pub mass: f64,
    /// `‖∇ψ‖²`
    pub gradient: f64,
    /// `‖xψ‖²`
    pub potential: f64,
    /// `∫|ψ|⁴`
    pub quartic: f64,
    /// `Im∫x·∇ψ ψ̄`
    pub virial: f64,
    /// `Im∫∂_jψ ψ̄`
    pub current: Vec<f64>,
    /// `∫x_j|ψ|²`
    pub first_moment: Vec<f64>,
}

impl Moments {
    pub fn energy(&self, p: ObservableParams) -> f64 {
        0.5 * p.mu * (self.gradient + self.potential) + 0.25 * p.lambda * self.quartic
    }

    /// `H_int = ¼∫|ψ|⁴`.
    pub fn interaction(&self) -> f64 {
        0.25 * self.quartic
    }

    pub fn momentum(&self, p: ObservableParams) -> Result<f64> {
        if self.dim != 2 {
            return Err(Error::RequiresPlane("momentum"));
        }
        let e = self.energy(p);
        Ok((e - p.mu * self.potential).powi(2) + (p.mu * self.virial).powi(2))
    }

    pub fn non_radial(&self) -> Result<Vec<f64>> {
        if self.dim != 2 {
            return Err(Error::RequiresPlane("non-radial invariants"));
        }
        Ok(self
            .current
            .iter()
            .zip(&self.first_moment)
            .map(|(p, q)| 0.25 * (p * p + q * q))
            .collect())
    }

    pub fn record(&self, t: f64, p: ObservableParams) -> ObservableRecord {
        ObservableRecord {
            t,
            mass: self.mass,
            energy: self.energy(p),
            momentum: self.momentum(p).ok(),
            non_radial: self.non_radial().ok(),
        }
    }
}

/// One row of observable output. Momentum and `𝒫` exist for `d = 2` only.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub momentum: Option<f64>,
    pub non_radial: Option<Vec<f64>>,
}

impl ObservableRecord {
    pub fn is_finite(&self) -> bool {
        self.mass.is_finite()
            && self.energy.is_finite()
            && self.momentum.map_or(true, f64::is_finite)
            && self
                .non_radial
                .as_ref()
                .map_or(true, |v| v.iter().all(|x| x.is_finite()))
    }
}

fn gradient_poly(ex: &GaussianExponent, m: usize) -> AffineQuad {
    let d = ex.v.len();
    let mut p = AffineQuad::one(d);
    p.constant = ex.v[m];
    p.linear[m] = -2.0 * ex.alpha;
    p
}

/// Closed-form moments of a Gaussian ensemble.
pub fn bubble_moments(e: &BubbleEnsemble) -> Result<Moments> {
    let canon = e.to_pure_gaussian()?;
    let d = canon.dim();
    let bubbles = canon.bubbles();
    let ex: Vec<GaussianExponent> = bubbles.iter().map(GaussianExponent::of_bubble).collect();
    let amp: Vec<f64> = bubbles.iter().map(|b| b.amplitude / b.scale).collect();
    let one = AffineQuad::one(d);
    let mut radial = AffineQuad::one(d);
    radial.constant = Complex64::new(0.0, 0.0);
    radial.radial = Complex64::new(1.0, 0.0);
    let coord: Vec<AffineQuad> = (0..d)
        .map(|m| {
            let mut p = AffineQuad::one(d);
            p.constant = Complex64::new(0.0, 0.0);
            p.linear[m] = Complex64::new(1.0, 0.0);
            p
        })
        .collect();
    let grads: Vec<Vec<AffineQuad>> = ex
        .iter()
        .map(|x| (0..d).map(|m| gradient_poly(x, m)).collect())
        .collect();
    let virials: Vec<AffineQuad> = ex
        .iter()
        .map(|x| AffineQuad {
            constant: Complex64::new(0.0, 0.0),
            linear: x.v.clone(),
            radial: -2.0 * x.alpha,
        })
        .collect();

    let zero = Complex64::new(0.0, 0.0);
    let (mut mass, mut gradient, mut potential, mut virial) = (zero, zero, zero, zero);
    let mut current = vec![zero; d];
    let mut first = vec![zero; d];
    for j in 0..bubbles.len() {
        for k in 0..bubbles.len() {
            let kernel = GaussianPairKernel::from_exponents(&ex[j], &ex[k])?;
            let w = amp[j] * amp[k];
            mass += w * kernel.integrate(&one, &one);
            potential += w * kernel.integrate(&radial, &one);
            virial += w * kernel.integrate(&virials[j], &one);
            for m in 0..d {
                gradient += w * kernel.integrate(&grads[j][m], &grads[k][m]);
                current[m] += w * kernel.integrate(&grads[j][m], &one);
                first[m] += w * kernel.integrate(&coord[m], &one);
            }
        }
    }
    let mut quartic = 0.0;
    for j in 0..bubbles.len() {
        quartic += amp[j] * interaction_rows(&canon, j)?[0].re;
    }
    Ok(Moments {
        dim: d,
        mass: mass.re,
        gradient: gradient.re,
        potential: potential.re,
        quartic,
        virial: virial.im,
        current: current.iter().map(|c| c.im).collect(),
        first_moment: first.iter().map(|c| c.re).collect(),
    })
}

pub fn bubble_mass(e: &BubbleEnsemble) -> Result<f64> {
    let canon = e.to_pure_gaussian()?;
    let ex: Vec<GaussianExponent> = canon.iter().map(GaussianExponent::of_bubble).collect();
    let one = AffineQuad::one(canon.dim());
    let mut mass = Complex64::new(0.0, 0.0);
    for (j, bj) in canon.iter().enumerate() {
        for (k, bk) in canon.iter().enumerate() {
            let kernel = GaussianPairKernel::from_exponents(&ex[j], &ex[k])?;
            mass += bj.amplitude * bk.amplitude / (bj.scale * bk.scale) * kernel.integrate(&one, &one);
        }
    }
    Ok(mass.re)
}

pub fn bubble_energy(e: &BubbleEnsemble, p: ObservableParams) -> Result<f64> {
    Ok(bubble_moments(e)?.energy(p))
}

pub fn bubble_momentum(e: &BubbleEnsemble, p: ObservableParams) -> Result<f64> {
    if e.dim() != 2 {
        return Err(Error::RequiresPlane("momentum"));
    }
    bubble_moments(e)?.momentum(p)
}

pub fn bubble_non_radial(e: &BubbleEnsemble) -> Result<Vec<f64>> {
    if e.dim() != 2 {
        return Err(Error::RequiresPlane("non-radial invariants"));
    }
    bubble_moments(e)?.non_radial()
}

/// Moments of a grid field, with spectral gradients.
pub fn grid_moments(f: &GridField, solver: &SpectralSolver) -> Result<Moments> {
    let grid = &f.grid;
    let d = grid.dim();
    let dv = grid.cell_volume();
    let points = grid.points();
    let grads = (0..d)
        .map(|a| solver.derivative(f, a))
        .collect::<Result<Vec<_>>>()?;
    let mut mass = 0.0;
    let mut potential = 0.0;
    let mut quartic = 0.0;
    let mut virial = 0.0;
    let mut gradient = 0.0;
    let mut current = vec![0.0; d];
    let mut first = vec![0.0; d];
    for (i, (u, x)) in f.values.iter().zip(&points).enumerate() {
        let n2 = u.norm_sqr();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        mass += n2;
        potential += r2 * n2;
        quartic += n2 * n2;
        for a in 0..d {
            let g = grads[a].values[i];
            gradient += g.norm_sqr();
            let gu = (g * u.conj()).im;
            current[a] += gu;
            virial += x[a] * gu;
            first[a] += x[a] * n2;
        }
    }
    Ok(Moments {
        dim: d,
        mass: mass * dv,
        gradient: gradient * dv,
        potential: potential * dv,
        quartic: quartic * dv,
        virial: virial * dv,
        current: current.iter().map(|v| v * dv).collect(),
        first_moment: first.iter().map(|v| v * dv).collect(),
    })
}

pub fn grid_observables(
    f: &GridField,
    solver: &SpectralSolver,
    t: f64,
    p: ObservableParams,
) -> Result<ObservableRecord> {
    Ok(grid_moments(f, solver)?.record(t, p))
}

/// `|Re L − R| / |R|` for `L = ∫Δf · conj(d/2 f + x·∇f)` and `R = −∫|∇f|²`.
///
/// Only the real part is an identity: the imaginary part of `L` is
/// `−d/2·Im∫Δf f̄` plus a virial-type term that need not vanish for moving
/// or shifted fields.
pub fn pohozaev_residual(f: &GridField, solver: &SpectralSolver) -> Result<f64> {
    let grid = &f.grid;
    let d = grid.dim();
    let dv = grid.cell_volume();
    let lap = solver.laplacian(f)?;
    let grads = (0..d)
        .map(|a| solver.derivative(f, a))
        .collect::<Result<Vec<_>>>()?;
    let points = grid.points();
    let mut lhs = Complex64::new(0.0, 0.0);
    let mut rhs = 0.0;
    for (i, x) in points.iter().enumerate() {
        let mut xg = 0.5 * d as f64 * f.values[i];
        for a in 0..d {
            xg += x[a] * grads[a].values[i];
            rhs -= grads[a].values[i].norm_sqr();
        }
        lhs += lap.values[i] * xg.conj();
    }
    lhs *= dv;
    rhs *= dv;
    Ok((lhs.re - rhs).abs() / rhs.abs())
}
