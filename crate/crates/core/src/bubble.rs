//! Bubble data model and pointwise evaluation of the modulated ansatz
//!
//! A bubble is
//!
//! ```text
//! u(x) = (A/L) exp(iγ + i L β·y − i (B/4)|y|²) v(y),   y = (x − X)/L,
//! ```
//!
//! where `v` is a finite combination of tensor Hermite functions. The
//! ensemble value is the plain sum over bubbles.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// L²-normalised Hermite function `H_k(z)`, solution of
/// `H'' + (2k + 1 − z²) H = 0`.
///
/// Uses the three-term recurrence on the normalised family, which stays
/// bounded where the factorial form overflows.
pub fn hermite_function(k: usize, z: f64) -> f64 {
    let h0 = PI.powf(-0.25) * (-0.5 * z * z).exp();
    if k == 0 {
        return h0;
    }
    let mut prev = h0;
    let mut cur = std::f64::consts::SQRT_2 * z * h0;
    for n in 1..k {
        let nf = n as f64;
        let next = z * (2.0 / (nf + 1.0)).sqrt() * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `[H_0(z), …, H_kmax(z)]`.
pub fn hermite_table(kmax: usize, z: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(PI.powf(-0.25) * (-0.5 * z * z).exp());
    if kmax >= 1 {
        out.push(std::f64::consts::SQRT_2 * z * out[0]);
    }
    for n in 1..kmax {
        let nf = n as f64;
        let next = z * (2.0 / (nf + 1.0)).sqrt() * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Coefficient of `φ_0` for which `v(y) = e^{−|y|²/2}` exactly, `π^{d/4}`.
pub fn gaussian_coefficient(dim: usize) -> f64 {
    PI.powf(dim as f64 / 4.0)
}

/// Sparse Hermite coefficients `v_n` of the profile in the modulation frame.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteSpectrum {
    dim: usize,
    entries: BTreeMap<Vec<u32>, Complex64>,
}

impl HermiteSpectrum {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// The Gaussian profile `v = e^{−|y|²/2}`, i.e. `φ_0` with coefficient `π^{d/4}`.
    pub fn ground(dim: usize) -> Self {
        let mut s = Self::empty(dim);
        s.entries.insert(vec![0; dim], Complex64::new(gaussian_coefficient(dim), 0.0));
        s
    }

    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Complex64)>,
    {
        let mut s = Self::empty(dim);
        for (n, c) in entries {
            s.insert(n, c)?;
        }
        Ok(s)
    }

    pub fn insert(&mut self, n: Vec<u32>, c: Complex64) -> Result<()> {
        if n.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: n.len(),
            });
        }
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::NonFinite("hermite coefficient"));
        }
        self.entries.insert(n, c);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u32>, &Complex64)> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&Vec<u32>, &mut Complex64)> {
        self.entries.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Only nonzero entry is `n = 0` and the profile is exactly `e^{−|y|²/2}`.
    pub fn is_pure_gaussian(&self) -> bool {
        let nonzero: Vec<_> = self.entries.iter().filter(|(_, c)| c.norm() != 0.0).collect();
        nonzero.len() == 1
            && nonzero[0].0.iter().all(|&k| k == 0)
            && *nonzero[0].1 == Complex64::new(gaussian_coefficient(self.dim), 0.0)
    }

    /// Coefficient of the ground mode when it is the only nonzero entry.
    pub fn ground_only_coefficient(&self) -> Option<Complex64> {
        let mut found = None;
        for (n, c) in &self.entries {
            if c.norm() == 0.0 {
                continue;
            }
            if n.iter().any(|&k| k != 0) || found.is_some() {
                return None;
            }
            found = Some(*c);
        }
        found
    }

    fn max_order(&self) -> usize {
        self.entries
            .keys()
            .flat_map(|n| n.iter().copied())
            .max()
            .unwrap_or(0) as usize
    }

    /// `v(y) = Σ v_n φ_n(y)`.
    pub fn evaluate(&self, y: &[f64]) -> Complex64 {
        if self.entries.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let kmax = self.max_order();
        let tables: Vec<Vec<f64>> = y.iter().map(|&yi| hermite_table(kmax, yi)).collect();
        self.entries
            .iter()
            .map(|(n, c)| {
                let phi: f64 = n
                    .iter()
                    .zip(&tables)
                    .map(|(&k, t)| t[k as usize])
                    .product();
                c * phi
            })
            .sum()
    }
}

/// One modulated wave packet.
#[derive(Clone, Debug, PartialEq)]
pub struct Bubble {
    pub amplitude: f64,
    pub scale: f64,
    pub chirp: f64,
    pub center: Vec<f64>,
    pub momentum: Vec<f64>,
    pub phase: f64,
    /// Internal time `s` of the modulation frame.
    pub internal_time: f64,
    pub spectrum: HermiteSpectrum,
}

impl Bubble {
    /// Gaussian bubble (`v = e^{−|y|²/2}`, internal time 0).
    pub fn gaussian(
        amplitude: f64,
        scale: f64,
        chirp: f64,
        center: Vec<f64>,
        momentum: Vec<f64>,
        phase: f64,
    ) -> Self {
        let dim = center.len();
        Self {
            amplitude,
            scale,
            chirp,
            center,
            momentum,
            phase,
            internal_time: 0.0,
            spectrum: HermiteSpectrum::ground(dim),
        }
    }

    /// Centred unit ground-state bubble in dimension `dim`.
    pub fn ground(dim: usize) -> Self {
        Self::gaussian(1.0, 1.0, 0.0, vec![0.0; dim], vec![0.0; dim], 0.0)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.momentum.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.momentum.len(),
            });
        }
        if self.spectrum.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.spectrum.dim(),
            });
        }
        let scalars = [
            (self.amplitude, "A"),
            (self.scale, "L"),
            (self.chirp, "B"),
            (self.phase, "gamma"),
            (self.internal_time, "s"),
        ];
        for (v, name) in scalars {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        if self.center.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("X"));
        }
        if self.momentum.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("beta"));
        }
        if self.scale <= 0.0 {
            return Err(Error::InvalidBubble(format!(
                "scale L = {} must be positive",
                self.scale
            )));
        }
        Ok(())
    }

    /// Rewrites a single-ground-mode bubble so its profile is exactly
    /// `e^{−|y|²/2}`, folding the modulus of the coefficient into the
    /// amplitude and its argument into the phase.
    /// Returns `None` when the spectrum carries other modes or is empty.
    pub fn to_pure_gaussian(&self) -> Option<Bubble> {
        let c = self.spectrum.ground_only_coefficient()?;
        let mut out = self.clone();
        out.amplitude *= c.norm() / gaussian_coefficient(self.dim());
        out.phase += c.arg();
        out.spectrum = HermiteSpectrum::ground(self.dim());
        Some(out)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> Complex64 {
        let l = self.scale;
        let y: Vec<f64> = x
            .iter()
            .zip(&self.center)
            .map(|(xi, ci)| (xi - ci) / l)
            .collect();
        let beta_y: f64 = self.momentum.iter().zip(&y).map(|(b, yi)| b * yi).sum();
        let y2: f64 = y.iter().map(|v| v * v).sum();
        let theta = (self.phase + l * beta_y - 0.25 * self.chirp * y2).rem_euclid(TAU);
        let carrier = Complex64::from_polar(self.amplitude / l, theta);
        carrier * self.spectrum.evaluate(&y)
    }
}

/// Ordered list of bubbles sharing one spatial dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct BubbleEnsemble {
    dim: usize,
    bubbles: Vec<Bubble>,
}

impl BubbleEnsemble {
    pub fn new(dim: usize, bubbles: Vec<Bubble>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidBubble("dimension must be positive".into()));
        }
        for b in &bubbles {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: b.dim(),
                });
            }
            b.validate()?;
        }
        Ok(Self { dim, bubbles })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.bubbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bubbles.is_empty()
    }

    pub fn bubbles(&self) -> &[Bubble] {
        &self.bubbles
    }

    pub fn into_bubbles(self) -> Vec<Bubble> {
        self.bubbles
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Bubble> {
        self.bubbles.iter()
    }

    /// Same ensemble with every single-ground-mode bubble normalised to a
    /// unit coefficient. Fails on the first bubble carrying other modes.
    pub fn to_pure_gaussian(&self) -> Result<Self> {
        let bubbles = self
            .bubbles
            .iter()
            .enumerate()
            .map(|(j, b)| b.to_pure_gaussian().ok_or(Error::NonGaussian(j)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: self.dim,
            bubbles,
        })
    }

    pub fn evaluate_at(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.bubbles.iter().map(|b| b.evaluate_unchecked(x)).sum())
    }

    /// `u(x)` at every point.
    pub fn evaluate(&self, points: &[Vec<f64>]) -> Result<Vec<Complex64>> {
        points.iter().map(|p| self.evaluate_at(p)).collect()
    }
}

/// Compact serialisable form of a bubble used by configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleRecord {
    #[serde(rename = "A")]
    pub amplitude: f64,
    #[serde(rename = "L")]
    pub scale: f64,
    #[serde(rename = "B")]
    pub chirp: f64,
    #[serde(rename = "X")]
    pub center: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub s: f64,
    /// Rows `[n_1, …, n_d, re, im]`; absent means the Gaussian ground mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hermite: Option<Vec<Vec<f64>>>,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl BubbleRecord {
    pub fn to_bubble(&self) -> Result<Bubble> {
        let dim = self.center.len();
        let spectrum = match &self.hermite {
            None => HermiteSpectrum::ground(dim),
            Some(rows) => {
                let mut spec = HermiteSpectrum::empty(dim);
                for row in rows {
                    if row.len() != dim + 2 {
                        return Err(Error::Config {
                            field: "hermite",
                            reason: format!("expected {} entries per row, got {}", dim + 2, row.len()),
                        });
                    }
                    let n = row[..dim]
                        .iter()
                        .map(|&v| {
                            if v >= 0.0 && v.fract() == 0.0 {
                                Ok(v as u32)
                            } else {
                                Err(Error::Config {
                                    field: "hermite",
                                    reason: format!("mode index {v} is not a non-negative integer"),
                                })
                            }
                        })
                        .collect::<Result<Vec<u32>>>()?;
                    spec.insert(n, Complex64::new(row[dim], row[dim + 1]))?;
                }
                spec
            }
        };
        let b = Bubble {
            amplitude: self.amplitude,
            scale: self.scale,
            chirp: self.chirp,
            center: self.center.clone(),
            momentum: self.beta.clone(),
            phase: self.gamma,
            internal_time: self.s,
            spectrum,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn from_bubble(b: &Bubble) -> Self {
        let hermite = if b.spectrum.is_pure_gaussian() {
            None
        } else {
            Some(
                b.spectrum
                    .iter()
                    .map(|(n, c)| {
                        let mut row: Vec<f64> = n.iter().map(|&k| k as f64).collect();
                        row.push(c.re);
                        row.push(c.im);
                        row
                    })
                    .collect(),
            )
        };
        Self {
            amplitude: b.amplitude,
            scale: b.scale,
            chirp: b.chirp,
            center: b.center.clone(),
            beta: b.momentum.clone(),
            gamma: b.phase,
            s: b.internal_time,
            hermite,
        }
    }
}
