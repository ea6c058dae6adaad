//! Regenerates `data/tc3_bubbles.toml`, the nine-bubble fit of
//! `√(16 − |x|²)` on the disk of radius 4.
//!
//! One central Gaussian plus a ring of eight at radius `R`. For each
//! `(L_center, L_ring, R)` on a small search grid the two amplitudes
//! (centre, shared ring) are fitted by linear least squares against the
//! profile sampled on `[−5, 5]²`; the best triple is kept.
//!
//! ```text
//! cargo run --release --example fit_tc3 [output path]
//! ```

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use nls_bubbles::driver::{ConfigFile, RunConfig, TestCase};
use nls_bubbles::{Bubble, BubbleEnsemble, BubbleRecord};

const M: f64 = 4.0;
const H: f64 = 0.05;
const EXTENT: f64 = 5.0;

fn profile(x: f64, y: f64) -> f64 {
    (M * M - x * x - y * y).max(0.0).sqrt()
}

fn ring(r: f64) -> Vec<[f64; 2]> {
    (0..8)
        .map(|k| {
            let a = TAU * k as f64 / 8.0;
            [r * a.cos(), r * a.sin()]
        })
        .collect()
}

struct Fit {
    l_center: f64,
    l_ring: f64,
    radius: f64,
    amp_center: f64,
    amp_ring: f64,
    residual: f64,
}

fn fit(points: &[[f64; 2]], target: &DVector<f64>, lc: f64, lr: f64, r: f64) -> Fit {
    let centres = ring(r);
    let g = |p: &[f64; 2], c: &[f64; 2], l: f64| {
        (-((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)) / (2.0 * l * l)).exp()
    };
    let a = DMatrix::from_fn(points.len(), 2, |i, j| {
        let p = &points[i];
        if j == 0 {
            g(p, &[0.0, 0.0], lc)
        } else {
            centres.iter().map(|c| g(p, c, lr)).sum()
        }
    });
    let sol = a.clone().svd(true, true).solve(target, 1e-12).expect("least squares");
    let residual = (&a * &sol - target).norm() * H;
    Fit {
        l_center: lc,
        l_ring: lr,
        radius: r,
        amp_center: sol[0],
        amp_ring: sol[1],
        residual,
    }
}

fn bubble(peak: f64, l: f64, c: [f64; 2]) -> Bubble {
    // envelope (A/L) e^{-|x-X|^2/(2L^2)}, common phase 1 + |x|^2/2
    Bubble::gaussian(
        peak * l,
        l,
        -2.0 * l * l,
        c.to_vec(),
        c.to_vec(),
        1.0 + 0.5 * (c[0] * c[0] + c[1] * c[1]),
    )
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/tc3_bubbles.toml").to_string());

    let n = (2.0 * EXTENT / H).round() as usize + 1;
    let points: Vec<[f64; 2]> = (0..n * n)
        .map(|i| [-EXTENT + H * (i / n) as f64, -EXTENT + H * (i % n) as f64])
        .collect();
    let target = DVector::from_iterator(points.len(), points.iter().map(|p| profile(p[0], p[1])));

    let mut best: Option<Fit> = None;
    for i in 0..=20 {
        let lc = (8 + i) as f64 / 10.0;
        for j in 0..=14 {
            let lr = (6 + j) as f64 / 10.0;
            for k in 0..=8 {
                let r = (20 + k) as f64 / 10.0;
                let f = fit(&points, &target, lc, lr, r);
                if best.as_ref().map_or(true, |b| f.residual < b.residual) {
                    best = Some(f);
                }
            }
        }
    }
    let best = best.unwrap();
    println!(
        "L_center = {:.2}, L_ring = {:.2}, R = {:.2}, peaks = ({:.6}, {:.6}), L2 residual = {:.4}",
        best.l_center, best.l_ring, best.radius, best.amp_center, best.amp_ring, best.residual
    );

    let mut bubbles = vec![bubble(best.amp_center, best.l_center, [0.0, 0.0])];
    bubbles.extend(ring(best.radius).into_iter().map(|c| bubble(best.amp_ring, best.l_ring, c)));
    let ensemble = BubbleEnsemble::new(2, bubbles).expect("valid ensemble");
    let mass = nls_bubbles::observables::bubble_mass(&ensemble).expect("mass");
    println!(
        "mass = {mass:.6}, target 128π = {:.6}, relative error = {:.3e}",
        128.0 * PI,
        (mass - 128.0 * PI).abs() / (128.0 * PI)
    );

    let file = ConfigFile {
        run: RunConfig {
            testcase: TestCase::Custom,
            ..RunConfig::default()
        },
        bubbles: ensemble.iter().map(BubbleRecord::from_bubble).collect(),
    };
    let body = toml::to_string(&file).expect("serialise");
    let text = format!(
        "# Nine-bubble fit of sqrt(16 - |x|^2) e^(i(1 + |x|^2/2)).\n\
         # Regenerate with `cargo run --release --example fit_tc3`.\n\n{body}"
    );
    std::fs::write(&out, text).expect("write output");
    println!("wrote {out}");
}
