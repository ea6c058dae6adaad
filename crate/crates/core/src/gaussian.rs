//! Closed-form integrals of polynomials against complex Gaussians.
//!
//! A Gaussian bubble is `(A/L) exp(−α|x|² + v·x + c)` with
//! `α = (2+iB)/(4L²)`, `v = iβ + 2αX` and `c = iγ − iβ·X − α|X|²`.
//! Products of such factors (some conjugated) are again of the form
//! `C e^{−z|x|² + a·x − iξ·x}`, whose polynomial moments are the Fourier
//! transforms below, with the convention `f̂(ξ) = ∫ e^{−iξ·x} f(x) dx` and
//! `f(x) = e^{−z|x|² + a·x}`.
//!
//! Prefactors are carried as logarithms and merged with the Gaussian
//! exponent before exponentiation, so well-separated bubbles do not
//! overflow.

use num_complex::Complex64;

use crate::bubble::{Bubble, BubbleEnsemble};
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Polynomial weight of a moment integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Moment {
    One,
    /// `x_m`
    X(usize),
    /// `x_m x_n` (`m == n` gives `x_m²`)
    XX(usize, usize),
    /// `|x|²`
    Radial,
    /// `x_m |x|²`
    XRadial(usize),
    /// `x_m² x_n²`, `m ≠ n`
    SquareSquare(usize, usize),
    /// `x_m⁴`
    Fourth(usize),
    /// `x_m³`
    Cube(usize),
    /// `x_m x_n²`, `m ≠ n`
    XSquare(usize, usize),
    /// `|x|⁴`
    RadialSquared,
}

/// Moments of `C e^{−z|x|² + V·x}` for one `(z, V, log C)`.
#[derive(Clone, Debug)]
pub(crate) struct MomentEval {
    z: Complex64,
    w: Vec<Complex64>,
    ww: Complex64,
    p: Complex64,
}

impl MomentEval {
    /// `exponent = V` (complex linear coefficient), `log_c` the log prefactor.
    pub(crate) fn new(z: Complex64, exponent: &[Complex64], log_c: Complex64) -> Result<Self> {
        if !(z.re > 0.0) {
            return Err(Error::NonDecaying(z.re));
        }
        let d = exponent.len() as f64;
        let w: Vec<Complex64> = exponent.iter().map(|v| I * v).collect();
        let ww: Complex64 = w.iter().map(|v| v * v).sum();
        let base = (Complex64::new(std::f64::consts::PI, 0.0) / z).powf(0.5 * d);
        let p = base * (log_c - ww / (4.0 * z)).exp();
        Ok(Self { z, w, ww, p })
    }

    fn dim(&self) -> usize {
        self.w.len()
    }

    fn one(&self) -> Complex64 {
        self.p
    }

    fn x(&self, m: usize) -> Complex64 {
        -I * self.p * self.w[m] / (2.0 * self.z)
    }

    fn xx(&self, m: usize, n: usize) -> Complex64 {
        let delta = if m == n { 1.0 } else { 0.0 };
        self.p / (2.0 * self.z) * (delta - self.w[m] * self.w[n] / (2.0 * self.z))
    }

    fn radial(&self) -> Complex64 {
        self.p / (2.0 * self.z) * (self.dim() as f64 - self.ww / (2.0 * self.z))
    }

    fn x_radial(&self, m: usize) -> Complex64 {
        let z2 = self.z * self.z;
        -I * self.p / (4.0 * z2) * self.w[m] * (self.dim() as f64 + 2.0 - self.ww / (2.0 * self.z))
    }

    fn square_square(&self, m: usize, n: usize) -> Complex64 {
        let z = self.z;
        self.p / (4.0 * z * z)
            * (1.0 - self.w[n] * self.w[n] / (2.0 * z))
            * (1.0 - self.w[m] * self.w[m] / (2.0 * z))
    }

    fn fourth(&self, m: usize) -> Complex64 {
        let z = self.z;
        let w2 = self.w[m] * self.w[m];
        self.p / (4.0 * z * z) * (3.0 - 6.0 * w2 / (2.0 * z) + w2 * w2 / (4.0 * z * z))
    }

    fn cube(&self, m: usize) -> Complex64 {
        let z = self.z;
        let wm = self.w[m];
        -I * self.p / (4.0 * z * z) * (3.0 * wm - wm * wm * wm / (2.0 * z))
    }

    fn x_square(&self, m: usize, n: usize) -> Complex64 {
        let z = self.z;
        -I * self.p / (2.0 * z) * (1.0 - self.w[n] * self.w[n] / (2.0 * z)) * self.w[m] / (2.0 * z)
    }

    fn radial_squared(&self) -> Complex64 {
        let d = self.dim();
        let mut s = Complex64::new(0.0, 0.0);
        for m in 0..d {
            s += self.fourth(m);
            for n in 0..d {
                if n != m {
                    s += self.square_square(m, n);
                }
            }
        }
        s
    }

    fn moment(&self, moment: Moment) -> Result<Complex64> {
        let d = self.dim();
        let check = |k: usize| {
            if k < d {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: d, got: k + 1 })
            }
        };
        let distinct = |m: usize, n: usize| {
            if m != n {
                Ok(())
            } else {
                Err(Error::InvalidBubble(format!("moment needs distinct axes, got {m} twice")))
            }
        };
        Ok(match moment {
            Moment::One => self.one(),
            Moment::X(m) => {
                check(m)?;
                self.x(m)
            }
            Moment::XX(m, n) => {
                check(m)?;
                check(n)?;
                self.xx(m, n)
            }
            Moment::Radial => self.radial(),
            Moment::XRadial(m) => {
                check(m)?;
                self.x_radial(m)
            }
            Moment::SquareSquare(m, n) => {
                check(m)?;
                check(n)?;
                distinct(m, n)?;
                self.square_square(m, n)
            }
            Moment::Fourth(m) => {
                check(m)?;
                self.fourth(m)
            }
            Moment::Cube(m) => {
                check(m)?;
                self.cube(m)
            }
            Moment::XSquare(m, n) => {
                check(m)?;
                check(n)?;
                distinct(m, n)?;
                self.x_square(m, n)
            }
            Moment::RadialSquared => self.radial_squared(),
        })
    }

    /// `∫ p(x) q̄(x) C e^{−z|x|² + V·x} dx` where `q̄` conjugates the coefficients of `q`.
    ///
    /// Evaluated about the complex centre `m = V/(2z)`: with `x = m + u` the
    /// weight becomes `e^{−z|u|²}` and only even moments survive.
    fn integrate(&self, p: &AffineQuad, q: &AffineQuad) -> Complex64 {
        let d = self.dim() as f64;
        let sigma = 1.0 / (2.0 * self.z);
        let (k1, l1, r1) = self.recentre(p);
        let (k2, l2, r2) = self.recentre(&q.conj());
        let ll: Complex64 = l1.iter().zip(&l2).map(|(a, b)| a * b).sum();
        self.p
            * (k1 * k2
                + sigma * ll
                + d * sigma * (k1 * r2 + k2 * r1)
                + d * (d + 2.0) * sigma * sigma * r1 * r2)
    }

    /// Coefficients of `p(m + u)` as `K + L·u + R|u|²`.
    fn recentre(&self, p: &AffineQuad) -> (Complex64, Vec<Complex64>, Complex64) {
        // m = V/(2z) = −i w/(2z)
        let m: Vec<Complex64> = self.w.iter().map(|w| -I * w / (2.0 * self.z)).collect();
        let mm: Complex64 = m.iter().map(|v| v * v).sum();
        let lm: Complex64 = p.linear.iter().zip(&m).map(|(a, b)| a * b).sum();
        let k = p.constant + lm + p.radial * mm;
        let l = p.linear.iter().zip(&m).map(|(a, b)| a + 2.0 * p.radial * b).collect();
        (k, l, p.radial)
    }

    /// Same integral expanded into the moment table about the origin.
    #[cfg(test)]
    fn integrate_expanded(&self, p: &AffineQuad, q: &AffineQuad) -> Complex64 {
        let d = self.dim();
        let qc = q.conj();
        let mut s = p.constant * qc.constant * self.one();
        s += (p.constant * qc.radial + qc.constant * p.radial) * self.radial();
        s += p.radial * qc.radial * self.radial_squared();
        for m in 0..d {
            s += (p.constant * qc.linear[m] + qc.constant * p.linear[m]) * self.x(m);
            s += (p.radial * qc.linear[m] + qc.radial * p.linear[m]) * self.x_radial(m);
            for n in 0..d {
                s += p.linear[m] * qc.linear[n] * self.xx(m, n);
            }
        }
        s
    }
}

/// Fourier transform of `moment · e^{−z|x|² + a·x}` at frequency `xi`.
pub fn gaussian_moment(z: Complex64, a: &[f64], xi: &[f64], moment: Moment) -> Result<Complex64> {
    if a.len() != xi.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: xi.len(),
        });
    }
    let v: Vec<Complex64> = a.iter().zip(xi).map(|(&ai, &xii)| Complex64::new(ai, -xii)).collect();
    MomentEval::new(z, &v, Complex64::new(0.0, 0.0))?.moment(moment)
}

/// Polynomial `k + ℓ·x + r|x|²` with complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineQuad {
    pub constant: Complex64,
    pub linear: Vec<Complex64>,
    pub radial: Complex64,
}

impl AffineQuad {
    pub fn one(dim: usize) -> Self {
        Self {
            constant: Complex64::new(1.0, 0.0),
            linear: vec![Complex64::new(0.0, 0.0); dim],
            radial: Complex64::new(0.0, 0.0),
        }
    }

    /// Polynomial factor of the tangent basis element `b_{·,row}` of a bubble
    /// (`1`, `y_n`, `|y|²` for rows `1`, `n+1`, `d+2`).
    pub fn basis(b: &Bubble, row: usize) -> Result<Self> {
        let d = b.dim();
        if row == 0 || row > d + 2 {
            return Err(Error::BasisIndex { index: row, max: d + 2 });
        }
        let l = b.scale;
        let mut p = Self::one(d);
        if row == 1 {
            return Ok(p);
        }
        if row <= d + 1 {
            let n = row - 2;
            p.constant = Complex64::new(-b.center[n] / l, 0.0);
            p.linear[n] = Complex64::new(1.0 / l, 0.0);
            return Ok(p);
        }
        let l2 = l * l;
        let x2: f64 = b.center.iter().map(|v| v * v).sum();
        p.constant = Complex64::new(x2 / l2, 0.0);
        for n in 0..d {
            p.linear[n] = Complex64::new(-2.0 * b.center[n] / l2, 0.0);
        }
        p.radial = Complex64::new(1.0 / l2, 0.0);
        Ok(p)
    }

    pub fn conj(&self) -> Self {
        Self {
            constant: self.constant.conj(),
            linear: self.linear.iter().map(|c| c.conj()).collect(),
            radial: self.radial.conj(),
        }
    }

    pub fn scale(mut self, c: Complex64) -> Self {
        self.constant *= c;
        for v in &mut self.linear {
            *v *= c;
        }
        self.radial *= c;
        self
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let x2: f64 = x.iter().map(|v| v * v).sum();
        self.constant
            + self
                .linear
                .iter()
                .zip(x)
                .map(|(c, xi)| c * xi)
                .sum::<Complex64>()
            + self.radial * x2
    }
}

/// `−α|x|² + v·x + c` exponent of a unit-amplitude Gaussian bubble.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianExponent {
    pub alpha: Complex64,
    pub v: Vec<Complex64>,
    pub c: Complex64,
}

impl GaussianExponent {
    /// Exponent of `b_{·,1} = (L/A) u` for a bubble (spectrum ignored).
    pub fn of_bubble(b: &Bubble) -> Self {
        let l2 = b.scale * b.scale;
        let alpha = Complex64::new(2.0, b.chirp) / (4.0 * l2);
        let v = b
            .center
            .iter()
            .zip(&b.momentum)
            .map(|(&x, &p)| Complex64::new(0.0, p) + 2.0 * alpha * x)
            .collect();
        let bx: f64 = b.momentum.iter().zip(&b.center).map(|(p, x)| p * x).sum();
        let x2: f64 = b.center.iter().map(|v| v * v).sum();
        let c = Complex64::new(0.0, b.phase - bx) - alpha * x2;
        Self { alpha, v, c }
    }

    pub fn conj(&self) -> Self {
        Self {
            alpha: self.alpha.conj(),
            v: self.v.iter().map(|c| c.conj()).collect(),
            c: self.c.conj(),
        }
    }

    fn accumulate(&mut self, other: &Self) {
        self.alpha += other.alpha;
        for (a, b) in self.v.iter_mut().zip(&other.v) {
            *a += b;
        }
        self.c += other.c;
    }
}

fn require_gaussian(b: &Bubble, index: usize) -> Result<()> {
    if b.spectrum.is_pure_gaussian() {
        Ok(())
    } else {
        Err(Error::NonGaussian(index))
    }
}

/// Constants of `⟨f_l, f_j⟩` for two unit Gaussians, `f_l` un-conjugated.
#[derive(Clone, Debug)]
pub struct GaussianPairKernel {
    pub z: Complex64,
    pub a: Vec<f64>,
    pub xi: Vec<f64>,
    /// `log C`
    pub log_c: Complex64,
    eval: MomentEval,
}

impl GaussianPairKernel {
    pub fn new(bl: &Bubble, bj: &Bubble) -> Result<Self> {
        if bl.dim() != bj.dim() {
            return Err(Error::DimensionMismatch {
                expected: bl.dim(),
                got: bj.dim(),
            });
        }
        require_gaussian(bl, 0)?;
        require_gaussian(bj, 1)?;
        Self::from_exponents(&GaussianExponent::of_bubble(bl), &GaussianExponent::of_bubble(bj))
    }

    /// Kernel of `∫ e^{el} conj(e^{ej})`.
    pub fn from_exponents(el: &GaussianExponent, ej: &GaussianExponent) -> Result<Self> {
        let mut sum = el.clone();
        sum.accumulate(&ej.conj());
        let eval = MomentEval::new(sum.alpha, &sum.v, sum.c)?;
        Ok(Self {
            z: sum.alpha,
            a: sum.v.iter().map(|v| v.re).collect(),
            xi: sum.v.iter().map(|v| -v.im).collect(),
            log_c: sum.c,
            eval,
        })
    }

    pub fn c(&self) -> Complex64 {
        self.log_c.exp()
    }

    /// `∫ p f_l · conj(q f_j)`.
    pub fn integrate(&self, p: &AffineQuad, q: &AffineQuad) -> Complex64 {
        self.eval.integrate(p, q)
    }
}

/// Constants of the four-fold product `f_k f̄_l f_m f̄_j`, including the
/// amplitude product `A_kA_lA_m/(L_kL_lL_m)`.
#[derive(Clone, Debug)]
pub struct GaussianTripleKernel {
    pub z: Complex64,
    pub a: Vec<f64>,
    pub xi: Vec<f64>,
    pub log_c: Complex64,
    pub amplitude: f64,
    eval: MomentEval,
}

impl GaussianTripleKernel {
    pub fn new(bk: &Bubble, bl: &Bubble, bm: &Bubble, bj: &Bubble) -> Result<Self> {
        for (i, b) in [bk, bl, bm, bj].into_iter().enumerate() {
            if b.dim() != bk.dim() {
                return Err(Error::DimensionMismatch {
                    expected: bk.dim(),
                    got: b.dim(),
                });
            }
            require_gaussian(b, i)?;
        }
        let ex = [bk, bl, bm, bj].map(GaussianExponent::of_bubble);
        let amplitude = [bk, bl, bm]
            .iter()
            .map(|b| b.amplitude / b.scale)
            .product();
        Self::from_exponents(&ex[0], &ex[1], &ex[2], &ex[3], amplitude)
    }

    fn from_exponents(
        ek: &GaussianExponent,
        el: &GaussianExponent,
        em: &GaussianExponent,
        ej: &GaussianExponent,
        amplitude: f64,
    ) -> Result<Self> {
        let mut sum = ek.clone();
        sum.accumulate(&el.conj());
        sum.accumulate(em);
        sum.accumulate(&ej.conj());
        let eval = MomentEval::new(sum.alpha, &sum.v, sum.c)?;
        Ok(Self {
            z: sum.alpha,
            a: sum.v.iter().map(|v| v.re).collect(),
            xi: sum.v.iter().map(|v| -v.im).collect(),
            log_c: sum.c,
            amplitude,
            eval,
        })
    }

    pub fn c(&self) -> Complex64 {
        self.amplitude * self.log_c.exp()
    }

    /// `∫ u_k ū_l u_m · conj(q f_j)`.
    pub fn integrate(&self, q: &AffineQuad) -> Complex64 {
        let one = AffineQuad::one(q.linear.len());
        self.amplitude * self.eval.integrate(&one, q)
    }
}

/// `⟨b_{l,row}, b_{j,col}⟩` for two Gaussian bubbles.
pub fn gram_entry(bl: &Bubble, bj: &Bubble, row: usize, col: usize) -> Result<Complex64> {
    let kernel = GaussianPairKernel::new(bl, bj)?;
    let p = AffineQuad::basis(bl, row)?;
    let q = AffineQuad::basis(bj, col)?;
    Ok(kernel.integrate(&p, &q))
}

fn check_ensemble(e: &BubbleEnsemble) -> Result<()> {
    for (j, b) in e.iter().enumerate() {
        require_gaussian(b, j)?;
        if b.amplitude == 0.0 {
            return Err(Error::DegenerateBubble(j));
        }
    }
    Ok(())
}

/// `⟨u|u|², b_{j,row}⟩` by the triple sum over bubbles.
pub fn interaction_entry(e: &BubbleEnsemble, j: usize, row: usize) -> Result<Complex64> {
    if j >= e.len() {
        return Err(Error::BubbleIndex { index: j, len: e.len() });
    }
    let rows = interaction_rows(e, j)?;
    rows.get(row.wrapping_sub(1)).copied().ok_or(Error::BasisIndex {
        index: row,
        max: e.dim() + 2,
    })
}

/// All `d+2` entries `⟨u|u|², b_{j,r}⟩` for one bubble.
pub fn interaction_rows(e: &BubbleEnsemble, j: usize) -> Result<Vec<Complex64>> {
    check_ensemble(e)?;
    let bubbles = e.bubbles();
    let bj = bubbles.get(j).ok_or(Error::BubbleIndex { index: j, len: e.len() })?;
    let d = e.dim();
    let ex: Vec<GaussianExponent> = bubbles.iter().map(GaussianExponent::of_bubble).collect();
    let amp: Vec<f64> = bubbles.iter().map(|b| b.amplitude / b.scale).collect();
    let polys = (1..=d + 2)
        .map(|r| AffineQuad::basis(bj, r))
        .collect::<Result<Vec<_>>>()?;
    let n = bubbles.len();
    let mut out = vec![Complex64::new(0.0, 0.0); d + 2];
    for k in 0..n {
        for m in k..n {
            // u_k ū_l u_m is symmetric in (k, m)
            let weight = if m == k { 1.0 } else { 2.0 };
            for l in 0..n {
                let kernel = GaussianTripleKernel::from_exponents(
                    &ex[k],
                    &ex[l],
                    &ex[m],
                    &ex[j],
                    weight * amp[k] * amp[l] * amp[m],
                )?;
                for (o, q) in out.iter_mut().zip(&polys) {
                    *o += kernel.integrate(q);
                }
            }
        }
    }
    Ok(out)
}
