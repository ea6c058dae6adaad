//! Oracles shared by the integration tests: an adaptive Dormand-Prince
//! integrator, tensor-grid quadrature, direct bubble formulas and seeded
//! random inputs.

#![allow(dead_code)]

use std::f64::consts::PI;

use nls_bubbles::{Bubble, BubbleEnsemble};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(y)` from `t0` through each of the increasing `times`,
/// returning the state at every one of them.
pub fn dormand_prince<F>(f: F, y0: &[f64], t0: f64, times: &[f64], rtol: f64, atol: f64) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut h = 1e-3;
    let mut out = Vec::with_capacity(times.len());
    let mut k = vec![vec![0.0; n]; 7];
    for &target in times {
        while t < target {
            let last = h >= target - t;
            let step = if last { target - t } else { h };
            k[0] = f(&y);
            let mut tmp = vec![0.0; n];
            for s in 1..7 {
                for i in 0..n {
                    tmp[i] = y[i] + step * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                k[s] = f(&tmp);
            }
            let mut err = 0.0f64;
            let mut y5 = vec![0.0; n];
            for i in 0..n {
                y5[i] = y[i] + step * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>();
                let y4 = y[i] + step * (0..7).map(|j| B4[j] * k[j][i]).sum::<f64>();
                let sc = atol + rtol * y[i].abs().max(y5[i].abs());
                err = err.max(((y5[i] - y4) / sc).abs());
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                y = y5;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = step * factor;
        }
        out.push(y.clone());
    }
    out
}

/// Right-hand side of the harmonic modulation system for
/// `(A, L, B, X, β, γ, s)`.
pub fn modulation_rhs(d: usize) -> impl Fn(&[f64]) -> Vec<f64> {
    move |y| {
        let (a, l, b) = (y[0], y[1], y[2]);
        let x = &y[3..3 + d];
        let p = &y[3 + d..3 + 2 * d];
        let l2 = l * l;
        let mut out = vec![0.0; y.len()];
        out[0] = a * b * (d as f64 - 2.0) / (2.0 * l2);
        out[1] = -b / l;
        out[2] = -4.0 / l2 + 4.0 * l2 - b * b / l2;
        for i in 0..d {
            out[3 + i] = 2.0 * p[i];
            out[3 + d + i] = -2.0 * x[i];
        }
        out[3 + 2 * d] = p.iter().map(|v| v * v).sum::<f64>() - x.iter().map(|v| v * v).sum::<f64>();
        out[4 + 2 * d] = 1.0 / l2;
        out
    }
}

pub fn bubble_state(b: &Bubble) -> Vec<f64> {
    let mut y = vec![b.amplitude, b.scale, b.chirp];
    y.extend_from_slice(&b.center);
    y.extend_from_slice(&b.momentum);
    y.push(b.phase);
    y.push(b.internal_time);
    y
}

// ---------------------------------------------------------------------------
// direct formulas

/// `(A/L) e^{iγ + iLβ·y − i(B/4)|y|²} e^{−|y|²/2}`, `y = (x − X)/L`, written
/// out without the library.
pub fn gaussian_value(b: &Bubble, x: &[f64]) -> Complex64 {
    let l = b.scale;
    let mut y2 = 0.0;
    let mut by = 0.0;
    for i in 0..x.len() {
        let y = (x[i] - b.center[i]) / l;
        y2 += y * y;
        by += b.momentum[i] * y;
    }
    let phase = b.phase + l * by - 0.25 * b.chirp * y2;
    Complex64::from_polar(b.amplitude / l * (-0.5 * y2).exp(), phase)
}

/// Tangent basis element `b_{·,row}`: `(L/A)u · {1, y_n, |y|²}`.
pub fn basis_value(b: &Bubble, row: usize, x: &[f64]) -> Complex64 {
    let d = x.len();
    let u = gaussian_value(b, x) * (b.scale / b.amplitude);
    let y: Vec<f64> = (0..d).map(|i| (x[i] - b.center[i]) / b.scale).collect();
    match row {
        1 => u,
        r if r <= d + 1 => u * y[r - 2],
        _ => u * y.iter().map(|v| v * v).sum::<f64>(),
    }
}

// ---------------------------------------------------------------------------
// quadrature

/// Midpoint nodes on `[−r, r]`, `n` per axis, and the cell area.
pub fn square_nodes(r: f64, n: usize) -> (Vec<f64>, f64) {
    let h = 2.0 * r / n as f64;
    ((0..n).map(|i| -r + (i as f64 + 0.5) * h).collect(), h * h)
}

/// `∫ f` over `[−r, r]²` by the midpoint rule with `n²` cells.
pub fn quad2<F: FnMut(&[f64; 2]) -> Complex64>(r: f64, n: usize, mut f: F) -> Complex64 {
    let (nodes, w) = square_nodes(r, n);
    let mut acc = Complex64::new(0.0, 0.0);
    for &x in &nodes {
        let mut row = Complex64::new(0.0, 0.0);
        for &y in &nodes {
            row += f(&[x, y]);
        }
        acc += row;
    }
    acc * w
}

// ---------------------------------------------------------------------------
// random inputs

pub struct BubbleRanges {
    pub amplitude: (f64, f64),
    pub scale: (f64, f64),
    pub chirp: f64,
    pub center: f64,
    pub momentum: f64,
}

impl BubbleRanges {
    pub const MODERATE: BubbleRanges = BubbleRanges {
        amplitude: (0.5, 2.0),
        scale: (0.5, 2.0),
        chirp: 2.0,
        center: 2.0,
        momentum: 2.0,
    };
    pub const OVERLAPPING: BubbleRanges = BubbleRanges {
        amplitude: (0.5, 1.5),
        scale: (0.7, 1.4),
        chirp: 1.0,
        center: 1.5,
        momentum: 1.0,
    };
}

pub fn random_bubble<R: Rng>(rng: &mut R, d: usize, r: &BubbleRanges) -> Bubble {
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    Bubble::gaussian(
        sign * rng.gen_range(r.amplitude.0..r.amplitude.1),
        rng.gen_range(r.scale.0..r.scale.1),
        rng.gen_range(-r.chirp..=r.chirp),
        (0..d).map(|_| rng.gen_range(-r.center..=r.center)).collect(),
        (0..d).map(|_| rng.gen_range(-r.momentum..=r.momentum)).collect(),
        rng.gen_range(-PI..PI),
    )
}

pub fn random_ensemble<R: Rng>(rng: &mut R, d: usize, n: usize, r: &BubbleRanges) -> BubbleEnsemble {
    BubbleEnsemble::new(d, (0..n).map(|_| random_bubble(rng, d, r)).collect()).unwrap()
}

/// `|a − b| / max(|b|, floor)`.
pub fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

pub fn crel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

/// Angle difference reduced to `[0, π]`.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}
