mod common;

use std::f64::consts::PI;

use nls_bubbles::{hermite_function, Bubble, BubbleEnsemble};
use num_complex::Complex64;

use common::*;

#[test]
fn third_hermite_function_from_polynomial_coefficients() {
    // physicists' H_3 = 8z³ − 12z, norm √(2³·3!·√π)
    let z: f64 = 1.25;
    let exact = (8.0 * z.powi(3) - 12.0 * z) * (-0.5 * z * z).exp() / (48.0 * PI.sqrt()).sqrt();
    assert!((hermite_function(3, z) - exact).abs() < 1e-12);
}

#[test]
fn oblique_bubble_against_direct_formula() {
    let b = Bubble::gaussian(2.0, 2.0, 1.0, vec![1.0, 0.0], vec![0.5, 0.0], 0.3);
    let x = [0.5, -0.5];
    // y = (−0.25, −0.25), |y|² = 1/8, Lβ·y = −0.25
    let exact = Complex64::from_polar((-1.0f64 / 16.0).exp(), 0.3 - 0.25 - 1.0 / 32.0);
    let u = b.evaluate(&x).unwrap();
    assert!((u - exact).norm() < 1e-13 * exact.norm());
    assert!((u - gaussian_value(&b, &x)).norm() < 1e-13 * exact.norm());
}

#[test]
fn ensemble_is_linear_in_amplitudes() {
    let mut rng = rng(31);
    let e = random_ensemble(&mut rng, 2, 4, &BubbleRanges::MODERATE);
    let scaled = BubbleEnsemble::new(
        2,
        e.iter()
            .map(|b| Bubble {
                amplitude: -1.7 * b.amplitude,
                ..b.clone()
            })
            .collect(),
    )
    .unwrap();
    for x in [[0.1, 0.2], [-1.3, 0.7], [2.0, -2.5]] {
        let u = e.evaluate_at(&x).unwrap();
        let v = scaled.evaluate_at(&x).unwrap();
        assert!((v + 1.7 * u).norm() < 1e-15 * u.norm().max(1e-300) * 4.0);
    }
}
