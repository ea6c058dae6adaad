//! Exact propagation of bubbles under the harmonic oscillator
//! `i∂_t u + Δu − |x|²u = 0`.
//!
//! The modulation parameters obey
//!
//! ```text
//! A_t = AB(d−2)/(2L²)   L_t = −B/L   B_t = −4/L² + 4L² − B²/L²
//! X_t = 2β              β_t = −2X    γ_t = |β|² − |X|²      s_t = 1/L²
//! ```
//!
//! which becomes linear in action-angle coordinates: the actions `h`, `a`
//! are constant, `ξ` turns at rate −4 and every `θ_i` at rate 2. Hermite
//! coefficients then rotate by `e^{−(2|n|+d) i Δs}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bubble::{Bubble, BubbleEnsemble};
use crate::error::{Error, Result};

const H_CLAMP: f64 = 1e-12;

/// Time derivatives of the modulation parameters of one bubble.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulationRates {
    pub amplitude: f64,
    pub scale: f64,
    pub chirp: f64,
    pub center: Vec<f64>,
    pub momentum: Vec<f64>,
    pub phase: f64,
}

impl ModulationRates {
    pub fn zero(dim: usize) -> Self {
        Self {
            amplitude: 0.0,
            scale: 0.0,
            chirp: 0.0,
            center: vec![0.0; dim],
            momentum: vec![0.0; dim],
            phase: 0.0,
        }
    }

    /// Right-hand side of the linear modulation system at `b`.
    pub fn harmonic(b: &Bubble) -> Self {
        let d = b.dim() as f64;
        let (a, l, bb) = (b.amplitude, b.scale, b.chirp);
        let l2 = l * l;
        let beta2: f64 = b.momentum.iter().map(|v| v * v).sum();
        let x2: f64 = b.center.iter().map(|v| v * v).sum();
        Self {
            amplitude: a * bb * (d - 2.0) / (2.0 * l2),
            scale: -bb / l,
            chirp: -4.0 / l2 + 4.0 * l2 - bb * bb / l2,
            center: b.momentum.iter().map(|v| 2.0 * v).collect(),
            momentum: b.center.iter().map(|v| -2.0 * v).collect(),
            phase: beta2 - x2,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.amplitude, self.scale, self.chirp, self.phase]
            .iter()
            .chain(&self.center)
            .chain(&self.momentum)
            .all(|v| v.is_finite())
    }
}

/// Canonical coordinates of the linear modulation flow.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionAngleState {
    pub h: f64,
    pub a: Vec<f64>,
    pub xi: f64,
    pub theta: Vec<f64>,
    /// Branch index of `ξ/2` at the reference time.
    pub m0: i64,
    /// `2h − 1`, kept separately so states near the ground point keep
    /// their relative accuracy.
    excess: f64,
}

/// Branch index `m` with `φ − mπ ∈ (−π/2, π/2]`.
pub fn branch_index(phi: f64) -> i64 {
    (phi / PI - 0.5).ceil() as i64
}

impl ActionAngleState {
    pub fn new(h: f64, a: Vec<f64>, xi: f64, theta: Vec<f64>) -> Result<Self> {
        if !h.is_finite() || !xi.is_finite() {
            return Err(Error::NonFinite("action-angle state"));
        }
        if a.len() != theta.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: theta.len(),
            });
        }
        if a.iter().chain(&theta).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("action-angle state"));
        }
        if a.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidBubble("negative action a_i".into()));
        }
        let excess = 2.0 * h - 1.0;
        if excess < -2.0 * H_CLAMP {
            return Err(Error::ActionBelowGround(h));
        }
        let (h, excess) = if excess <= 2.0 * H_CLAMP && excess < 0.0 {
            (0.5, 0.0)
        } else {
            (h, excess)
        };
        Ok(Self {
            h,
            a,
            xi,
            theta,
            m0: branch_index(xi / 2.0),
            excess,
        })
    }

    pub fn from_bubble(b: &Bubble) -> Result<Self> {
        b.validate()?;
        let l2 = b.scale * b.scale;
        let bb = b.chirp;
        // 2h − 1 and 2h − L² without cancellation
        let excess = ((l2 - 1.0).powi(2) + 0.25 * bb * bb) / (2.0 * l2);
        let one_minus_l4 = (1.0 - b.scale) * (1.0 + b.scale) * (1.0 + l2);
        let two_h_minus_l2 = (one_minus_l4 + 0.25 * bb * bb) / (2.0 * l2);
        let h = 0.5 + 0.5 * excess;
        let xi = bb.atan2(2.0 * two_h_minus_l2);
        let a = b
            .center
            .iter()
            .zip(&b.momentum)
            .map(|(x, p)| 0.5 * (x * x + p * p))
            .collect();
        let theta = b
            .center
            .iter()
            .zip(&b.momentum)
            .map(|(x, p)| x.atan2(*p))
            .collect();
        Ok(Self {
            h,
            a,
            xi,
            theta,
            m0: branch_index(xi / 2.0),
            excess,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `2h − 1`.
    pub fn excess(&self) -> f64 {
        self.excess
    }

    /// `√(4h² − 1)`.
    pub fn radius(&self) -> f64 {
        (self.excess * (self.excess + 2.0)).max(0.0).sqrt()
    }

    /// Energy `4h + 2|a|²` of the flow in these coordinates.
    pub fn energy(&self) -> f64 {
        4.0 * self.h + 2.0 * self.a.iter().map(|v| v * v).sum::<f64>()
    }

    /// Branch index of `ξ/2` for the current value of `ξ`.
    pub fn branch(&self) -> i64 {
        branch_index(self.xi / 2.0)
    }

    /// State after flowing for time `t`; `m0` is kept from `self`.
    pub fn advance(&self, t: f64) -> Self {
        Self {
            h: self.h,
            a: self.a.clone(),
            xi: self.xi - 4.0 * t,
            theta: self.theta.iter().map(|th| th + 2.0 * t).collect(),
            m0: self.m0,
            excess: self.excess,
        }
    }

    /// Branch count `m_t` accumulated since the reference time.
    pub fn branch_shift(&self) -> i64 {
        self.m0 - self.branch()
    }

    /// `L²` on the orbit at the current angle.
    pub fn scale_squared(&self) -> f64 {
        let r = self.radius();
        let two_h = 1.0 + self.excess;
        let (s, c) = self.xi.sin_cos();
        if c > 0.0 {
            (1.0 + s * s * r * r) / (two_h + c * r)
        } else {
            two_h - c * r
        }
    }

    pub fn chirp(&self) -> f64 {
        2.0 * self.xi.sin() * self.radius()
    }

    /// Auxiliary coordinate `k = ½ log L`.
    pub fn log_scale_coordinate(&self) -> f64 {
        0.25 * self.scale_squared().ln()
    }
}

/// Parameters reconstructed from an action-angle state.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulationParams {
    pub amplitude: f64,
    pub scale: f64,
    pub chirp: f64,
    pub center: Vec<f64>,
    pub momentum: Vec<f64>,
    pub phase: f64,
}

/// Values at the reference time that the amplitude and phase formulas are
/// relative to.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearReference {
    pub amplitude: f64,
    pub scale: f64,
    pub phase: f64,
    pub theta: Vec<f64>,
}

impl LinearReference {
    pub fn new(b: &Bubble, st: &ActionAngleState) -> Self {
        Self {
            amplitude: b.amplitude,
            scale: b.scale,
            phase: b.phase,
            theta: st.theta.clone(),
        }
    }
}

/// Inverse of [`ActionAngleState::from_bubble`].
pub fn from_action_angle(st: &ActionAngleState, reference: &LinearReference) -> Result<ModulationParams> {
    if st.excess < -2.0 * H_CLAMP {
        return Err(Error::ActionBelowGround(st.h));
    }
    if reference.theta.len() != st.dim() {
        return Err(Error::DimensionMismatch {
            expected: st.dim(),
            got: reference.theta.len(),
        });
    }
    let d = st.dim() as f64;
    let l2 = st.scale_squared();
    let l = l2.sqrt();
    let chirp = st.chirp();
    let mut center = Vec::with_capacity(st.dim());
    let mut momentum = Vec::with_capacity(st.dim());
    let mut dphase = 0.0;
    for ((a, th), th0) in st.a.iter().zip(&st.theta).zip(&reference.theta) {
        let rho = (2.0 * a).sqrt();
        let (s, c) = th.sin_cos();
        center.push(s * rho);
        momentum.push(c * rho);
        dphase += 0.5 * a * ((2.0 * th).sin() - (2.0 * th0).sin());
    }
    let amplitude = reference.amplitude * (l / reference.scale).powf(0.5 * (2.0 - d));
    Ok(ModulationParams {
        amplitude,
        scale: l,
        chirp,
        center,
        momentum,
        phase: reference.phase + dphase,
    })
}

/// `∫_0^φ` primitive of the internal-time integrand, continued across branches.
fn sigma_primitive(k: f64, phi: f64) -> f64 {
    let m = branch_index(phi);
    let reduced = phi - m as f64 * PI;
    let (s, c) = reduced.sin_cos();
    0.5 * ((k * s).atan2(c) + m as f64 * PI)
}

/// Elapsed internal time `Δs = ∫_0^t L(τ)^{−2} dτ` along the orbit with
/// action `h0` starting from angle `xi0`.
pub fn compute_sigma(h0: f64, xi0: f64, t: f64) -> f64 {
    compute_sigma_excess(2.0 * h0 - 1.0, xi0, t)
}

fn compute_sigma_excess(excess: f64, xi0: f64, t: f64) -> f64 {
    let r = (excess * (excess + 2.0)).max(0.0).sqrt();
    if r == 0.0 {
        return t;
    }
    let k = 1.0 + excess + r;
    let phi0 = 0.5 * xi0;
    sigma_primitive(k, phi0) - sigma_primitive(k, phi0 - 2.0 * t)
}

/// Closed-form solution of the harmonic oscillator for one bubble.
pub fn propagate_linear(b: &Bubble, t: f64) -> Result<Bubble> {
    let st0 = ActionAngleState::from_bubble(b)?;
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    let reference = LinearReference::new(b, &st0);
    let st = st0.advance(t);
    let p = from_action_angle(&st, &reference)?;
    let ds = compute_sigma_excess(st0.excess, st0.xi, t);
    let d = b.dim() as f64;
    let mut spectrum = b.spectrum.clone();
    for (n, c) in spectrum.iter_mut() {
        let order: f64 = n.iter().map(|&k| k as f64).sum();
        *c *= Complex64::from_polar(1.0, -(2.0 * order + d) * ds);
    }
    Ok(Bubble {
        amplitude: p.amplitude,
        scale: p.scale,
        chirp: p.chirp,
        center: p.center,
        momentum: p.momentum,
        phase: p.phase,
        internal_time: b.internal_time + ds,
        spectrum,
    })
}

/// Applies [`propagate_linear`] to each bubble independently.
pub fn propagate_ensemble_linear(e: &BubbleEnsemble, t: f64) -> Result<BubbleEnsemble> {
    let bubbles = e
        .iter()
        .map(|b| propagate_linear(b, t))
        .collect::<Result<Vec<_>>>()?;
    BubbleEnsemble::new(e.dim(), bubbles)
}

/// `(1 + B²/4)/L² + L²`, conserved by the linear flow.
pub fn scale_energy(b: &Bubble) -> f64 {
    let l2 = b.scale * b.scale;
    (1.0 + 0.25 * b.chirp * b.chirp) / l2 + l2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::HermiteSpectrum;
    use proptest::prelude::*;

    fn bubble(l: f64, bb: f64, x: Vec<f64>, beta: Vec<f64>) -> Bubble {
        Bubble::gaussian(1.3, l, bb, x, beta, 0.4)
    }

    #[test]
    fn ground_state_actions() {
        let st = ActionAngleState::from_bubble(&Bubble::ground(2)).unwrap();
        assert_eq!(st.h, 0.5);
        assert_eq!(st.a, vec![0.0, 0.0]);
        assert_eq!(st.xi, 0.0);
        assert_eq!(st.theta, vec![0.0, 0.0]);
    }

    #[test]
    fn stretched_chirped_actions() {
        let b = bubble(2f64.sqrt(), 2.0, vec![0.0], vec![0.0]);
        let st = ActionAngleState::from_bubble(&b).unwrap();
        assert!((st.h - 0.75).abs() < 1e-15);
        let want = 2f64.atan2(-1.0);
        assert!((st.xi - want).abs() < 1e-14);
        assert!((st.xi - 2.034443936).abs() < 1e-9);

        let reference = LinearReference::new(&b, &st);
        let p = from_action_angle(&st, &reference).unwrap();
        assert!((p.scale * p.scale - 2.0).abs() < 1e-14);
        assert!((p.chirp - 2.0).abs() < 1e-14);
    }

    #[test]
    fn translation_actions() {
        let b = bubble(1.0, 0.0, vec![1.0], vec![0.0]);
        let st = ActionAngleState::from_bubble(&b).unwrap();
        assert_eq!(st.a, vec![0.5]);
        assert!((st.theta[0] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn ground_orbit_has_unit_scale_for_any_angle() {
        for xi in [-3.0, -1.0, 0.0, 0.3, 2.9] {
            let st = ActionAngleState::new(0.5, vec![0.0], xi, vec![0.0]).unwrap();
            assert_eq!(st.scale_squared(), 1.0);
            assert_eq!(st.chirp(), 0.0);
        }
    }

    #[test]
    fn below_ground_rejected() {
        assert!(matches!(
            ActionAngleState::new(0.49, vec![0.0], 0.0, vec![0.0]),
            Err(Error::ActionBelowGround(_))
        ));
        let st = ActionAngleState::new(0.5 - 1e-13, vec![0.0], 0.0, vec![0.0]).unwrap();
        assert_eq!(st.h, 0.5);
    }

    #[test]
    fn sigma_on_ground_orbit_is_time() {
        assert_eq!(compute_sigma(0.5, 1.234, 0.7), 0.7);
        assert_eq!(compute_sigma(0.5, -2.0, -3.1), -3.1);
    }

    #[test]
    fn sigma_derivative_matches_inverse_scale() {
        let b = bubble(0.6, -1.7, vec![0.2], vec![0.1]);
        let st = ActionAngleState::from_bubble(&b).unwrap();
        let eps = 1e-5;
        for k in 0..50 {
            let t = 0.37 * k as f64;
            let fd = (compute_sigma(st.h, st.xi, t + eps) - compute_sigma(st.h, st.xi, t - eps))
                / (2.0 * eps);
            let want = 1.0 / st.advance(t).scale_squared();
            assert!((fd - want).abs() < 1e-6 * want.max(1.0), "t={t}: {fd} vs {want}");
        }
    }

    #[test]
    fn sigma_is_additive() {
        let b = bubble(1.9, 0.8, vec![0.0], vec![0.0]);
        let st = ActionAngleState::from_bubble(&b).unwrap();
        let (t1, t2) = (0.93, 1.71);
        let whole = compute_sigma(st.h, st.xi, t1 + t2);
        let mid = st.advance(t1);
        let split = compute_sigma(st.h, st.xi, t1) + compute_sigma(mid.h, mid.xi, t2);
        assert!((whole - split).abs() < 1e-10);
    }

    #[test]
    fn ground_bubble_is_stationary_up_to_phase() {
        let b = Bubble::ground(2);
        let t = 0.83;
        let out = propagate_linear(&b, t).unwrap();
        assert_eq!(out.scale, 1.0);
        assert_eq!(out.chirp, 0.0);
        assert_eq!(out.amplitude, 1.0);
        assert_eq!(out.internal_time, t);
        let x = [0.4, -0.7];
        let got = out.evaluate(&x).unwrap();
        let r2 = x[0] * x[0] + x[1] * x[1];
        let want = Complex64::from_polar((-0.5 * r2).exp(), -2.0 * t);
        assert!((got - want).norm() < 1e-15);
    }

    fn rk4_translation(x0: f64, t: f64, dt: f64) -> (f64, f64) {
        let f = |x: f64, p: f64| (2.0 * p, -2.0 * x);
        let (mut x, mut p) = (x0, 0.0);
        let n = (t / dt).round() as usize;
        for _ in 0..n {
            let k1 = f(x, p);
            let k2 = f(x + 0.5 * dt * k1.0, p + 0.5 * dt * k1.1);
            let k3 = f(x + 0.5 * dt * k2.0, p + 0.5 * dt * k2.1);
            let k4 = f(x + dt * k3.0, p + dt * k3.1);
            x += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            p += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        (x, p)
    }

    #[test]
    fn translation_orbit_matches_integration() {
        let b = bubble(1.0, 0.0, vec![1.0, 0.0], vec![0.0, 0.0]);
        let t = 0.9;
        let out = propagate_linear(&b, t).unwrap();
        assert!((out.center[0] - (2.0 * t).cos()).abs() < 1e-14);
        assert!((out.momentum[0] + (2.0 * t).sin()).abs() < 1e-14);
        let (x, p) = rk4_translation(1.0, t, 1e-5);
        assert!((out.center[0] - x).abs() < 1e-8);
        assert!((out.momentum[0] - p).abs() < 1e-8);
    }

    #[test]
    fn returns_after_half_period() {
        let b = bubble(0.7, 1.3, vec![0.5, -1.0], vec![0.2, 0.9]);
        let out = propagate_linear(&b, PI).unwrap();
        assert!((out.scale - b.scale).abs() < 1e-10);
        assert!((out.chirp - b.chirp).abs() < 1e-10);
        assert!((out.phase - b.phase).abs() < 1e-10);
        for i in 0..2 {
            assert!((out.center[i] - b.center[i]).abs() < 1e-10);
            assert!((out.momentum[i] - b.momentum[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn phase_matches_simpson_quadrature() {
        let b = bubble(1.4, -0.6, vec![0.8, -0.3], vec![-0.5, 1.1]);
        let t = 2.7;
        let out = propagate_linear(&b, t).unwrap();
        let n = 10_000;
        let h = t / n as f64;
        let integrand = |tau: f64| {
            let s = propagate_linear(&b, tau).unwrap();
            let p2: f64 = s.momentum.iter().map(|v| v * v).sum();
            let x2: f64 = s.center.iter().map(|v| v * v).sum();
            p2 - x2
        };
        let mut sum = integrand(0.0) + integrand(t);
        for k in 1..n {
            sum += integrand(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let quad = sum * h / 3.0;
        assert!((out.phase - b.phase - quad).abs() < 1e-8);
    }

    #[test]
    fn hermite_mode_phase() {
        let mut b = Bubble::ground(2);
        b.spectrum = HermiteSpectrum::from_entries(2, [(vec![2, 1], Complex64::new(1.0, 0.0))]).unwrap();
        let t = 0.4;
        let out = propagate_linear(&b, t).unwrap();
        let c = out.spectrum.iter().next().unwrap().1;
        let want = Complex64::from_polar(1.0, -8.0 * t);
        assert!((c - want).norm() < 1e-14);
    }

    #[test]
    fn empty_spectrum_stays_empty() {
        let mut b = Bubble::ground(1);
        b.spectrum = HermiteSpectrum::empty(1);
        let e = BubbleEnsemble::new(1, vec![b, Bubble::ground(1)]).unwrap();
        let out = propagate_ensemble_linear(&e, 1.2).unwrap();
        assert!(out.bubbles()[0].spectrum.is_empty());
        assert_eq!(out.bubbles()[1], propagate_linear(&Bubble::ground(1), 1.2).unwrap());
    }

    #[test]
    fn harmonic_rates_vanish_at_ground() {
        let r = ModulationRates::harmonic(&Bubble::ground(3));
        assert_eq!(r, ModulationRates::zero(3));
    }

    fn arb_bubble() -> impl Strategy<Value = Bubble> {
        (1usize..=3)
            .prop_flat_map(|d| {
                (
                    0.2f64..5.0,
                    0.2f64..3.0,
                    -3.0f64..3.0,
                    prop::collection::vec(-3.0f64..3.0, d),
                    prop::collection::vec(-3.0f64..3.0, d),
                    -3.0f64..3.0,
                )
            })
            .prop_map(|(a, l, bb, x, beta, g)| Bubble::gaussian(a, l, bb, x, beta, g))
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    proptest! {
        #[test]
        fn round_trip(b in arb_bubble()) {
            let st = ActionAngleState::from_bubble(&b).unwrap();
            let p = from_action_angle(&st, &LinearReference::new(&b, &st)).unwrap();
            prop_assert!(rel(p.scale, b.scale) < 1e-12);
            prop_assert!(rel(p.chirp, b.chirp) < 1e-12);
            prop_assert!(rel(p.amplitude, b.amplitude) < 1e-12);
            for i in 0..b.dim() {
                prop_assert!(rel(p.center[i], b.center[i]) < 1e-12);
                prop_assert!(rel(p.momentum[i], b.momentum[i]) < 1e-12);
            }
        }

        #[test]
        fn invariants_along_flow(b in arb_bubble(), t in 0.0f64..100.0) {
            let out = propagate_linear(&b, t).unwrap();
            let e0 = scale_energy(&b);
            prop_assert!((scale_energy(&out) - e0).abs() < 1e-12 * e0.max(1.0) * 10.0);
            let r0: f64 = b.center.iter().chain(&b.momentum).map(|v| v * v).sum();
            let r1: f64 = out.center.iter().chain(&out.momentum).map(|v| v * v).sum();
            prop_assert!((r1 - r0).abs() < 1e-12 * r0.max(1.0) * 10.0);
            let d = b.dim() as f64;
            let inv0 = b.amplitude * b.scale.powf(0.5 * (d - 2.0));
            let inv1 = out.amplitude * out.scale.powf(0.5 * (d - 2.0));
            prop_assert!((inv1 - inv0).abs() < 1e-12 * inv0.abs() * 10.0);
            let st = ActionAngleState::from_bubble(&b).unwrap();
            let r = st.radius();
            let l2 = out.scale * out.scale;
            prop_assert!(l2 >= 2.0 * st.h - r - 1e-12 * l2);
            prop_assert!(l2 <= 2.0 * st.h + r + 1e-12 * l2);
        }

        #[test]
        fn reversible(b in arb_bubble(), t in -20.0f64..20.0) {
            let back = propagate_linear(&propagate_linear(&b, t).unwrap(), -t).unwrap();
            prop_assert!(rel(back.scale, b.scale) < 1e-11);
            prop_assert!(rel(back.chirp, b.chirp) < 1e-11);
            prop_assert!(rel(back.amplitude, b.amplitude) < 1e-11);
            prop_assert!(rel(back.phase, b.phase) < 1e-11);
            prop_assert!(back.internal_time.abs() < 1e-11);
            for i in 0..b.dim() {
                prop_assert!(rel(back.center[i], b.center[i]) < 1e-11);
                prop_assert!(rel(back.momentum[i], b.momentum[i]) < 1e-11);
            }
        }

        #[test]
        fn sigma_increasing(b in arb_bubble(), t in 0.0f64..10.0, dt in 1e-4f64..0.5) {
            let st = ActionAngleState::from_bubble(&b).unwrap();
            prop_assert!(compute_sigma(st.h, st.xi, t + dt) > compute_sigma(st.h, st.xi, t));
        }
    }
}
