//! Variational (Dirac-Frenkel-MacLachlan) projection of the cubic
//! nonlinearity `i∂_t u = λ|u|²u` onto the Gaussian bubble manifold.
//!
//! The tangent family of bubble `j` is `b_{j,1} = e^{iΓ_j − |y_j|²/2}`,
//! `b_{j,n+1} = (y_j)_n b_{j,1}` and `b_{j,d+2} = |y_j|² b_{j,1}`. Writing
//! `∂_t u_j = (A_j/L_j³) Σ_r E_{j,r} b_{j,r}`, the projection reads `A·(iE) = λS`
//! with `A_{(j,r),(l,c)} = ⟨b_{l,c}, b_{j,r}⟩` and `S_{(j,r)} = ⟨u|u|², b_{j,r}⟩`.
//! The Gram matrix may be singular, so the real block form is solved by a
//! truncated pseudo-inverse built from its symmetric eigendecomposition.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bubble::{Bubble, BubbleEnsemble};
use crate::error::{Error, Result};
use crate::gaussian::{interaction_rows, AffineQuad, GaussianExponent, GaussianPairKernel};
use crate::linear::ModulationRates;
use crate::ode::{explicit_step, ButcherTableau};

/// Default relative cut-off for singular values.
pub const DEFAULT_SVD_RTOL: f64 = 1e-10;

/// Bubbles with `|A_j|` below this fraction of the largest amplitude are frozen.
pub const FREEZE_RATIO: f64 = 1e-12;

/// Gram matrix and right-hand side of one projection.
#[derive(Clone, Debug)]
pub struct DfmpSystem {
    pub dim: usize,
    pub gram: DMatrix<Complex64>,
    pub source: DVector<Complex64>,
    amplitudes: Vec<f64>,
    scales: Vec<f64>,
}

impl DfmpSystem {
    pub fn bubble_count(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn block(&self) -> usize {
        self.dim + 2
    }

    /// `[[A_Re, −A_Im], [A_Im, A_Re]]` and `[S_Re; S_Im]`.
    pub fn real_block(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.gram.nrows();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        let mut rhs = DVector::zeros(2 * n);
        for i in 0..n {
            for k in 0..n {
                let a = self.gram[(i, k)];
                m[(i, k)] = a.re;
                m[(i, k + n)] = -a.im;
                m[(i + n, k)] = a.im;
                m[(i + n, k + n)] = a.re;
            }
            rhs[i] = self.source[i].re;
            rhs[i + n] = self.source[i].im;
        }
        (m, rhs)
    }
}

fn validate_for_projection(e: &BubbleEnsemble) -> Result<BubbleEnsemble> {
    if e.is_empty() {
        return Err(Error::InvalidBubble("empty ensemble".into()));
    }
    for (j, b) in e.iter().enumerate() {
        if b.spectrum.ground_only_coefficient().is_none() {
            return Err(Error::NonGaussian(j));
        }
    }
    let canon = e.to_pure_gaussian()?;
    for (j, b) in canon.iter().enumerate() {
        if b.amplitude == 0.0 {
            return Err(Error::DegenerateBubble(j));
        }
    }
    Ok(canon)
}

fn gram_matrix(e: &BubbleEnsemble) -> Result<DMatrix<Complex64>> {
    let d = e.dim();
    let block = d + 2;
    let n = e.len();
    let bubbles = e.bubbles();
    let ex: Vec<GaussianExponent> = bubbles.iter().map(GaussianExponent::of_bubble).collect();
    let polys: Vec<Vec<AffineQuad>> = bubbles
        .iter()
        .map(|b| (1..=block).map(|r| AffineQuad::basis(b, r)).collect())
        .collect::<Result<_>>()?;
    let mut gram = DMatrix::from_element(n * block, n * block, Complex64::new(0.0, 0.0));
    for l in 0..n {
        for j in 0..n {
            let kernel = GaussianPairKernel::from_exponents(&ex[l], &ex[j])?;
            for c in 0..block {
                for r in 0..block {
                    gram[(j * block + r, l * block + c)] = kernel.integrate(&polys[l][c], &polys[j][r]);
                }
            }
        }
    }
    let sym = (&gram + gram.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(sym)
}

fn system_with_source(e: &BubbleEnsemble, source: DVector<Complex64>) -> Result<DfmpSystem> {
    Ok(DfmpSystem {
        dim: e.dim(),
        gram: gram_matrix(e)?,
        source,
        amplitudes: e.iter().map(|b| b.amplitude).collect(),
        scales: e.iter().map(|b| b.scale).collect(),
    })
}

/// Gram matrix and interaction vector for a Gaussian ensemble.
pub fn assemble_system(e: &BubbleEnsemble) -> Result<DfmpSystem> {
    let e = validate_for_projection(e)?;
    let block = e.dim() + 2;
    let mut source = DVector::from_element(e.len() * block, Complex64::new(0.0, 0.0));
    for j in 0..e.len() {
        for (r, v) in interaction_rows(&e, j)?.into_iter().enumerate() {
            source[j * block + r] = v;
        }
    }
    system_with_source(&e, source)
}

/// Tangent coefficients `F_j` of one bubble after the `L_j³/A_j` rescale.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentCoefficients {
    pub f1: f64,
    pub f2: f64,
    pub f3: Vec<f64>,
    pub f4: Vec<f64>,
    pub f5: f64,
    pub f6: f64,
}

impl TangentCoefficients {
    pub fn zero(dim: usize) -> Self {
        Self {
            f1: 0.0,
            f2: 0.0,
            f3: vec![0.0; dim],
            f4: vec![0.0; dim],
            f5: 0.0,
            f6: 0.0,
        }
    }

    /// Splits a complex block `[c_1, c_2..c_{d+1}, c_{d+2}]` into real and imaginary groups.
    pub fn from_block(block: &[Complex64]) -> Self {
        let d = block.len() - 2;
        Self {
            f1: block[0].re,
            f2: block[0].im,
            f3: block[1..=d].iter().map(|c| c.re).collect(),
            f4: block[1..=d].iter().map(|c| c.im).collect(),
            f5: block[d + 1].re,
            f6: block[d + 1].im,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.f1, self.f2, self.f5, self.f6]
            .iter()
            .chain(&self.f3)
            .chain(&self.f4)
            .all(|v| v.is_finite())
    }
}

/// Solved projection.
#[derive(Clone, Debug)]
pub struct DfmpSolution {
    pub coefficients: Vec<TangentCoefficients>,
    /// Bubbles whose amplitude is too small to rescale; their rates are zero.
    pub frozen: Vec<bool>,
    /// Raw complex solution `iE` before rescaling.
    pub raw: DVector<Complex64>,
    pub effective_rank: usize,
    /// `σ_max / σ_min` of the real block matrix.
    pub condition: f64,
}

/// Minimum-norm least-squares solve of the real block system.
///
/// The real block of a Hermitian Gram matrix is symmetric positive
/// semidefinite, so its eigendecomposition is an SVD. Eigenvalues at or
/// below `rtol` times the largest are dropped. (nalgebra's SVD mishandles
/// the exactly paired spectrum of this block.)
pub fn solve_system(sys: &DfmpSystem, rtol: f64) -> Result<DfmpSolution> {
    let (m, rhs) = sys.real_block();
    let n = sys.gram.nrows();
    let eig = m.symmetric_eigen();
    let magnitudes: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    let smax = magnitudes.iter().cloned().fold(0.0, f64::max);
    let smin = magnitudes.iter().cloned().fold(f64::INFINITY, f64::min);
    let cut = rtol * smax;
    let effective_rank = magnitudes.iter().filter(|&&s| s > cut).count();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let mut coords = eig.eigenvectors.transpose() * &rhs;
    for (c, &lam) in coords.iter_mut().zip(eig.eigenvalues.iter()) {
        *c = if lam.abs() > cut { *c / lam } else { 0.0 };
    }
    let x = &eig.eigenvectors * coords;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("projection solve"));
    }
    let raw = DVector::from_iterator(n, (0..n).map(|i| Complex64::new(x[i], x[i + n])));
    let block = sys.block();
    let amax = sys.amplitudes.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut coefficients = Vec::with_capacity(sys.bubble_count());
    let mut frozen = Vec::with_capacity(sys.bubble_count());
    for (j, (&a, &l)) in sys.amplitudes.iter().zip(&sys.scales).enumerate() {
        if a.abs() < FREEZE_RATIO * amax {
            coefficients.push(TangentCoefficients::zero(sys.dim));
            frozen.push(true);
            continue;
        }
        let factor = l * l * l / a;
        let scaled: Vec<Complex64> = (0..block).map(|r| raw[j * block + r] * factor).collect();
        coefficients.push(TangentCoefficients::from_block(&scaled));
        frozen.push(false);
    }
    Ok(DfmpSolution {
        coefficients,
        frozen,
        raw,
        effective_rank,
        condition,
    })
}

/// Rates of `(A, L, B, X, β, γ)` in time `t` from the tangent coefficients.
pub fn rates_from_coefficients(f: &TangentCoefficients, b: &Bubble) -> ModulationRates {
    let (a, l, bb) = (b.amplitude, b.scale, b.chirp);
    let l2 = l * l;
    let l3 = l2 * l;
    let beta_f4: f64 = b.momentum.iter().zip(&f.f4).map(|(p, q)| p * q).sum();
    ModulationRates {
        amplitude: a / l2 * (f.f2 + f.f6),
        scale: f.f6 / l,
        chirp: (4.0 * f.f5 + 2.0 * bb * f.f6) / l2,
        center: f.f4.iter().map(|v| v / l).collect(),
        momentum: f
            .f3
            .iter()
            .zip(&f.f4)
            .map(|(f3, f4)| -f3 / l3 - bb * f4 / (2.0 * l3))
            .collect(),
        phase: beta_f4 / l - f.f1 / l2,
    }
}

/// Per-bubble parameter rates for a solved projection.
pub fn parameter_derivatives(sol: &DfmpSolution, e: &BubbleEnsemble) -> Result<Vec<ModulationRates>> {
    if sol.coefficients.len() != e.len() {
        return Err(Error::DimensionMismatch {
            expected: e.len(),
            got: sol.coefficients.len(),
        });
    }
    Ok(sol
        .coefficients
        .iter()
        .zip(&sol.frozen)
        .zip(e.iter())
        .map(|((f, &frozen), b)| {
            if frozen {
                ModulationRates::zero(b.dim())
            } else {
                rates_from_coefficients(f, b)
            }
        })
        .collect())
}

/// Conditioning of one projection solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveDiagnostics {
    pub condition: f64,
    pub effective_rank: usize,
}

/// Rates of the nonlinear flow `i∂_t u = λ|u|²u` projected on the manifold.
pub fn nonlinear_rates(
    e: &BubbleEnsemble,
    lambda: f64,
    rtol: f64,
) -> Result<(Vec<ModulationRates>, SolveDiagnostics)> {
    let canon = validate_for_projection(e)?;
    let sys = assemble_system(&canon)?;
    let sol = solve_system(&sys, rtol)?;
    let mut rates = parameter_derivatives(&sol, &canon)?;
    for r in &mut rates {
        scale_rates(r, lambda);
    }
    Ok((
        rates,
        SolveDiagnostics {
            condition: sol.condition,
            effective_rank: sol.effective_rank,
        },
    ))
}

fn scale_rates(r: &mut ModulationRates, c: f64) {
    r.amplitude *= c;
    r.scale *= c;
    r.chirp *= c;
    r.phase *= c;
    r.center.iter_mut().for_each(|v| *v *= c);
    r.momentum.iter_mut().for_each(|v| *v *= c);
}

/// Packs `(A, L, B, X, β, γ)` of every bubble into one vector.
pub fn pack(e: &BubbleEnsemble) -> Vec<f64> {
    let mut out = Vec::with_capacity(e.len() * (2 * e.dim() + 4));
    for b in e.iter() {
        out.push(b.amplitude);
        out.push(b.scale);
        out.push(b.chirp);
        out.extend_from_slice(&b.center);
        out.extend_from_slice(&b.momentum);
        out.push(b.phase);
    }
    out
}

fn pack_rates(rates: &[ModulationRates]) -> Vec<f64> {
    let mut out = Vec::new();
    for r in rates {
        out.push(r.amplitude);
        out.push(r.scale);
        out.push(r.chirp);
        out.extend_from_slice(&r.center);
        out.extend_from_slice(&r.momentum);
        out.push(r.phase);
    }
    out
}

/// Inverse of [`pack`], keeping the internal times and spectra of `template`.
pub fn unpack(template: &BubbleEnsemble, y: &[f64]) -> Result<BubbleEnsemble> {
    let d = template.dim();
    let stride = 2 * d + 4;
    if y.len() != stride * template.len() {
        return Err(Error::DimensionMismatch {
            expected: stride * template.len(),
            got: y.len(),
        });
    }
    let bubbles = template
        .iter()
        .zip(y.chunks(stride))
        .map(|(b, c)| Bubble {
            amplitude: c[0],
            scale: c[1],
            chirp: c[2],
            center: c[3..3 + d].to_vec(),
            momentum: c[3 + d..3 + 2 * d].to_vec(),
            phase: c[3 + 2 * d],
            internal_time: b.internal_time,
            spectrum: b.spectrum.clone(),
        })
        .collect();
    BubbleEnsemble::new(d, bubbles)
}

/// Settings of the nonlinear integrator.
#[derive(Clone, Debug)]
pub struct NonlinearOptions {
    pub lambda: f64,
    pub svd_rtol: f64,
    pub tableau: ButcherTableau,
}

impl Default for NonlinearOptions {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            svd_rtol: DEFAULT_SVD_RTOL,
            tableau: ButcherTableau::rk4(),
        }
    }
}

/// Result of one nonlinear step with the worst conditioning over its stages.
#[derive(Clone, Debug)]
pub struct NonlinearStep {
    pub ensemble: BubbleEnsemble,
    pub diagnostics: SolveDiagnostics,
}

/// Advances the projected nonlinear flow by `dt` with an explicit RK scheme.
pub fn step_nonlinear(e: &BubbleEnsemble, dt: f64, opts: &NonlinearOptions) -> Result<NonlinearStep> {
    let canon = validate_for_projection(e)?;
    let mut worst = SolveDiagnostics {
        condition: 0.0,
        effective_rank: usize::MAX,
    };
    let y0 = pack(&canon);
    let y1 = explicit_step(&opts.tableau, &y0, dt, |y| {
        let stage = unpack(&canon, y)?;
        let (rates, diag) = nonlinear_rates(&stage, opts.lambda, opts.svd_rtol)?;
        if diag.condition > worst.condition || diag.condition.is_nan() {
            worst.condition = diag.condition;
        }
        worst.effective_rank = worst.effective_rank.min(diag.effective_rank);
        Ok(pack_rates(&rates))
    })?;
    Ok(NonlinearStep {
        ensemble: unpack(&canon, &y1)?,
        diagnostics: worst,
    })
}

/// Outcome of projecting the harmonic-oscillator residual.
#[derive(Clone, Debug)]
pub struct LinearResidualCheck {
    /// Rates recovered by the projection.
    pub projected: Vec<ModulationRates>,
    /// The modulation system, with the phase rate shifted by `−d/L²`:
    /// the projection carries the ground-mode phase `e^{−idΔs}` in `γ`.
    pub expected: Vec<ModulationRates>,
    pub condition: f64,
    /// False when the Gram matrix is too ill-conditioned to conclude.
    pub conclusive: bool,
}

impl LinearResidualCheck {
    /// Largest absolute discrepancy over all bubbles and parameters.
    pub fn max_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (p, q) in self.projected.iter().zip(&self.expected) {
            let pairs = [
                (p.amplitude, q.amplitude),
                (p.scale, q.scale),
                (p.chirp, q.chirp),
                (p.phase, q.phase),
            ];
            for (a, b) in pairs
                .into_iter()
                .chain(p.center.iter().copied().zip(q.center.iter().copied()))
                .chain(p.momentum.iter().copied().zip(q.momentum.iter().copied()))
            {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }
}

/// `(H u_l)/(A_l/L_l) = [2αd − v·v + 4α v·x + (1 − 4α²)|x|²] b_{l,1}` with `H = −Δ + |x|²`.
fn harmonic_polynomial(ex: &GaussianExponent) -> AffineQuad {
    let d = ex.v.len();
    let a = ex.alpha;
    let vv: Complex64 = ex.v.iter().map(|v| v * v).sum();
    AffineQuad {
        constant: 2.0 * a * d as f64 - vv,
        linear: ex.v.iter().map(|v| 4.0 * a * v).collect(),
        radial: Complex64::new(1.0, 0.0) - 4.0 * a * a,
    }
}

/// Projects `−iHu` with the same machinery as the nonlinear term and
/// compares the recovered rates with the modulation system.
pub fn linear_residual_check(e: &BubbleEnsemble, rtol: f64) -> Result<LinearResidualCheck> {
    let canon = validate_for_projection(e)?;
    let d = canon.dim();
    let block = d + 2;
    let bubbles = canon.bubbles();
    let ex: Vec<GaussianExponent> = bubbles.iter().map(GaussianExponent::of_bubble).collect();
    let mut source = DVector::from_element(canon.len() * block, Complex64::new(0.0, 0.0));
    for (l, bl) in bubbles.iter().enumerate() {
        let hp = harmonic_polynomial(&ex[l]);
        let amp = bl.amplitude / bl.scale;
        for (j, bj) in bubbles.iter().enumerate() {
            let kernel = GaussianPairKernel::from_exponents(&ex[l], &ex[j])?;
            for r in 0..block {
                let q = AffineQuad::basis(bj, r + 1)?;
                source[j * block + r] += amp * kernel.integrate(&hp, &q);
            }
        }
    }
    let sys = system_with_source(&canon, source)?;
    let sol = solve_system(&sys, rtol)?;
    let projected = parameter_derivatives(&sol, &canon)?;
    let expected = bubbles
        .iter()
        .map(|b| {
            let mut r = ModulationRates::harmonic(b);
            r.phase -= d as f64 / (b.scale * b.scale);
            r
        })
        .collect();
    Ok(LinearResidualCheck {
        projected,
        expected,
        condition: sol.condition,
        conclusive: sol.condition < 1e8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn single(b: Bubble) -> BubbleEnsemble {
        BubbleEnsemble::new(b.dim(), vec![b]).unwrap()
    }

    #[test]
    fn unit_bubble_gram() {
        let sys = assemble_system(&single(Bubble::ground(2))).unwrap();
        assert_eq!(sys.gram.nrows(), 4);
        assert!((sys.gram[(0, 0)] - Complex64::new(PI, 0.0)).norm() < 1e-15);
        for (i, k) in [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)] {
            assert!(sys.gram[(i, k)].norm() < 1e-15);
        }
        let s = &sys.source;
        assert!(s[1].norm() < 1e-15 && s[2].norm() < 1e-15);
        assert!(s[0].norm() > 0.1 && s[3].norm() > 0.1);
    }

    #[test]
    fn real_block_layout() {
        let b1 = Bubble::gaussian(1.0, 0.9, 0.4, vec![0.2, 0.1], vec![0.3, -0.2], 0.5);
        let b2 = Bubble::gaussian(0.7, 1.2, -0.3, vec![-0.4, 0.6], vec![0.0, 0.1], -0.1);
        let sys = assemble_system(&BubbleEnsemble::new(2, vec![b1, b2]).unwrap()).unwrap();
        let (m, rhs) = sys.real_block();
        let n = sys.gram.nrows();
        for i in 0..n {
            for k in 0..n {
                let a = sys.gram[(i, k)];
                assert_eq!(m[(i, k)], a.re);
                assert_eq!(m[(i, k + n)], -a.im);
                assert_eq!(m[(i + n, k)], a.im);
                assert_eq!(m[(i + n, k + n)], a.re);
                assert!((a - sys.gram[(k, i)].conj()).norm() < 1e-12);
            }
            assert_eq!(rhs[i], sys.source[i].re);
            assert_eq!(rhs[i + n], sys.source[i].im);
        }
    }

    #[test]
    fn rejects_hermite_modes_and_zero_amplitude() {
        let mut b = Bubble::ground(2);
        b.spectrum.insert(vec![0, 1], Complex64::new(0.2, 0.0)).unwrap();
        assert!(matches!(assemble_system(&single(b)), Err(Error::NonGaussian(0))));
        let mut z = Bubble::ground(2);
        z.amplitude = 0.0;
        let e = BubbleEnsemble::new(2, vec![Bubble::ground(2), z]).unwrap();
        assert!(matches!(assemble_system(&e), Err(Error::DegenerateBubble(1))));
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let mut sys = assemble_system(&single(Bubble::ground(2))).unwrap();
        sys.source.fill(Complex64::new(0.0, 0.0));
        let sol = solve_system(&sys, DEFAULT_SVD_RTOL).unwrap();
        assert!(sol.raw.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn duplicated_bubbles_solve_symmetrically() {
        let b = Bubble::gaussian(1.1, 0.9, 0.3, vec![0.2, -0.1], vec![0.4, 0.0], 0.2);
        let e = BubbleEnsemble::new(2, vec![b.clone(), b]).unwrap();
        let sys = assemble_system(&e).unwrap();
        let sol = solve_system(&sys, DEFAULT_SVD_RTOL).unwrap();
        assert!(sol.effective_rank < 16);
        assert!(sol.condition > 1e10);
        let c = &sol.coefficients;
        assert!((c[0].f1 - c[1].f1).abs() < 1e-8 * c[0].f1.abs().max(1.0));
        assert!((c[0].f6 - c[1].f6).abs() < 1e-8 * c[0].f6.abs().max(1.0));
        assert!(c[0].is_finite());
    }

    #[test]
    fn solves_along_a_trajectory_have_small_residual() {
        let opts = NonlinearOptions::default();
        let mut e = BubbleEnsemble::new(
            2,
            vec![
                Bubble::gaussian(PI, 1.0, 0.0, vec![0.0, 2.0], vec![0.0, 0.0], 0.0),
                Bubble::gaussian(2.0, 1.0, 0.0, vec![1.0, 0.0], vec![0.0, 0.0], 0.0),
            ],
        )
        .unwrap();
        for _ in 0..200 {
            for s in 0..20 {
                let h = s as f64 * 5e-5;
                let y: Vec<f64> = pack(&e).iter().map(|v| v + h * v.sin()).collect();
                let sys = assemble_system(&unpack(&e, &y).unwrap()).unwrap();
                let sol = solve_system(&sys, DEFAULT_SVD_RTOL).unwrap();
                let (m, rhs) = sys.real_block();
                let n = sys.gram.nrows();
                let x = DVector::from_iterator(2 * n, sol.raw.iter().map(|c| c.re).chain(sol.raw.iter().map(|c| c.im)));
                assert!((&m * x - &rhs).norm() < 1e-12 * rhs.norm());
            }
            e = step_nonlinear(&e, 5e-4, &opts).unwrap().ensemble;
        }
    }

    #[test]
    fn derivative_substitution() {
        let mut f = TangentCoefficients::zero(2);
        f.f6 = 0.8;
        let b = Bubble::gaussian(1.5, 2.0, 0.6, vec![0.0, 0.0], vec![0.0, 0.0], 0.0);
        let r = rates_from_coefficients(&f, &b);
        assert!((r.scale - 0.4).abs() < 1e-15);
        assert!((r.chirp - 0.6 * 0.8 / 2.0).abs() < 1e-15);
        assert!((r.amplitude - 1.5 * 0.8 / 4.0).abs() < 1e-15);
        let z = rates_from_coefficients(&TangentCoefficients::zero(2), &b);
        assert_eq!(z, ModulationRates::zero(2));
    }

    /// The same rates via the internal-time form and `d/dt = L^{-2} d/ds`.
    #[test]
    fn time_and_internal_time_forms_agree() {
        let b = Bubble::gaussian(0.8, 1.3, -0.7, vec![0.4, -0.2], vec![0.9, 0.3], 0.1);
        let f = TangentCoefficients {
            f1: 0.3,
            f2: -0.8,
            f3: vec![0.25, -0.6],
            f4: vec![1.1, 0.05],
            f5: -0.4,
            f6: 0.7,
        };
        let r = rates_from_coefficients(&f, &b);
        let (a, l, bb) = (b.amplitude, b.scale, b.chirp);
        let l2 = l * l;
        // s-time rates
        let a_s = a * (f.f2 + f.f6);
        let l_s = l * f.f6;
        let b_s = 4.0 * f.f5 + 2.0 * bb * f.f6;
        let x_s: Vec<f64> = f.f4.iter().map(|v| l * v).collect();
        let beta_s: Vec<f64> = (0..2).map(|i| -(f.f3[i] + 0.5 * bb * f.f4[i]) / l).collect();
        let g_s: f64 = (0..2).map(|i| b.momentum[i] * x_s[i]).sum::<f64>() - f.f1;
        let tol = 1e-14;
        assert!((r.amplitude - a_s / l2).abs() < tol);
        assert!((r.scale - l_s / l2).abs() < tol);
        assert!((r.chirp - b_s / l2).abs() < tol);
        assert!((r.phase - g_s / l2).abs() < tol);
        for i in 0..2 {
            assert!((r.center[i] - x_s[i] / l2).abs() < tol);
            assert!((r.momentum[i] - beta_s[i] / l2).abs() < tol);
        }
    }

    #[test]
    fn pack_round_trip() {
        let b1 = Bubble::gaussian(1.0, 0.9, 0.4, vec![0.2, 0.1], vec![0.3, -0.2], 0.5);
        let e = BubbleEnsemble::new(2, vec![b1.clone(), b1]).unwrap();
        assert_eq!(unpack(&e, &pack(&e)).unwrap(), e);
    }

    #[test]
    fn zero_step_is_identity() {
        let e = single(Bubble::gaussian(1.0, 0.9, 0.4, vec![0.2, 0.1], vec![0.3, -0.2], 0.5));
        let out = step_nonlinear(&e, 0.0, &NonlinearOptions::default()).unwrap();
        assert_eq!(out.ensemble, e);
    }

    fn mass(e: &BubbleEnsemble) -> f64 {
        crate::observables::bubble_mass(e).unwrap()
    }

    #[test]
    fn single_bubble_conserves_mass() {
        let e = single(Bubble::ground(2));
        let m0 = mass(&e);
        let mut cur = e;
        let opts = NonlinearOptions::default();
        for _ in 0..100 {
            cur = step_nonlinear(&cur, 1e-2, &opts).unwrap().ensemble;
        }
        assert!(((mass(&cur) - m0) / m0).abs() < 1e-10);
        assert!((m0 - PI).abs() < 1e-14);
    }

    #[test]
    fn common_phase_commutes_with_step() {
        let b1 = Bubble::gaussian(1.0, 0.9, 0.4, vec![0.2, 0.1], vec![0.3, -0.2], 0.5);
        let b2 = Bubble::gaussian(0.7, 1.2, -0.3, vec![-0.8, 0.6], vec![0.0, 0.1], -0.1);
        let e = BubbleEnsemble::new(2, vec![b1, b2]).unwrap();
        let shift = 0.77;
        let mut shifted = e.clone().into_bubbles();
        shifted.iter_mut().for_each(|b| b.phase += shift);
        let shifted = BubbleEnsemble::new(2, shifted).unwrap();
        let opts = NonlinearOptions::default();
        let a = step_nonlinear(&e, 0.05, &opts).unwrap().ensemble;
        let b = step_nonlinear(&shifted, 0.05, &opts).unwrap().ensemble;
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x.amplitude - y.amplitude).abs() < 1e-12);
            assert!((x.scale - y.scale).abs() < 1e-12);
            assert!((x.chirp - y.chirp).abs() < 1e-12);
            assert!((x.phase + shift - y.phase).abs() < 1e-12);
            for i in 0..2 {
                assert!((x.center[i] - y.center[i]).abs() < 1e-12);
                assert!((x.momentum[i] - y.momentum[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotation_commutes_with_step() {
        let rot = |v: &[f64], th: f64| {
            let (s, c) = th.sin_cos();
            vec![c * v[0] - s * v[1], s * v[0] + c * v[1]]
        };
        let b1 = Bubble::gaussian(1.0, 0.9, 0.4, vec![0.2, 0.1], vec![0.3, -0.2], 0.5);
        let b2 = Bubble::gaussian(0.7, 1.2, -0.3, vec![-0.8, 0.6], vec![0.0, 0.1], -0.1);
        let e = BubbleEnsemble::new(2, vec![b1, b2]).unwrap();
        let th = 0.9;
        let rotated: Vec<Bubble> = e
            .iter()
            .map(|b| {
                let mut b = b.clone();
                b.center = rot(&b.center, th);
                b.momentum = rot(&b.momentum, th);
                b
            })
            .collect();
        let rotated = BubbleEnsemble::new(2, rotated).unwrap();
        let opts = NonlinearOptions::default();
        let a = step_nonlinear(&e, 0.05, &opts).unwrap().ensemble;
        let b = step_nonlinear(&rotated, 0.05, &opts).unwrap().ensemble;
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x.scale - y.scale).abs() < 1e-10);
            assert!((x.phase - y.phase).abs() < 1e-10);
            let xc = rot(&x.center, th);
            let xp = rot(&x.momentum, th);
            for i in 0..2 {
                assert!((xc[i] - y.center[i]).abs() < 1e-10);
                assert!((xp[i] - y.momentum[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn linear_residual_centered_bubble() {
        let chk = linear_residual_check(&single(Bubble::ground(2)), DEFAULT_SVD_RTOL).unwrap();
        assert!(chk.conclusive);
        let p = &chk.projected[0];
        assert!(p.scale.abs() < 1e-12 && p.chirp.abs() < 1e-12 && p.amplitude.abs() < 1e-12);
        assert!(chk.max_error() < 1e-12);
    }

    #[test]
    fn linear_residual_generic_bubble() {
        let b = Bubble::gaussian(1.3, 0.8, 0.9, vec![0.5, -0.7], vec![-0.4, 1.2], 0.3);
        let chk = linear_residual_check(&single(b), DEFAULT_SVD_RTOL).unwrap();
        assert!(chk.max_error() < 1e-8, "{}", chk.max_error());
    }
}
