//! The three preset initial data in `d = 2`.
//!
//! Bubble envelopes are `(A/L)e^{−|x−X|²/(2L²)}` with phase
//! `γ + β·(x−X) − B|x−X|²/(4L²)`. The `cosh` phases are replaced by
//! `1 + r²/2` on the bubble side only; the spectral side gets the exact
//! formulas below.
//!
//! * 1: `π e^{−|x−μ₁|²/2} + 2e^{−|x−μ₂|²/2}`, `μ₁ = (0,2)`, `μ₂ = (1,0)`.
//!   Two bubbles with `L = 1`, `A = π` and `A = 2`.
//! * 2: `e^{−|x−μ₃|²} e^{i cosh|x−μ₃|}`, `μ₃ = (1,1)`.
//!   One bubble with `L = 1/√2`, `A = 1/√2`, `B = −1`, `γ = 1`.
//! * 3: `√(M²−|x|²) e^{i cosh|x|}` on `|x| < M = 4`, zero outside.
//!   Nine bubbles read from `data/tc3_bubbles.toml`, each with
//!   `B = −2L²`, `β = X`, `γ = 1 + |X|²/2` so that all share the phase
//!   `1 + |x|²/2`. The file is produced by `cargo run --example fit_tc3`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::bubble::{Bubble, BubbleEnsemble};
use crate::error::{Error, Result};

use super::config::RunConfig;

/// Radius of the test case 3 profile.
pub const TC3_RADIUS: f64 = 4.0;

/// Bundled nine-bubble fit of test case 3.
pub const TC3_BUBBLES: &str = include_str!("../../data/tc3_bubbles.toml");

/// Bubble decomposition plus the closed-form initial field.
#[derive(Clone, Debug)]
pub struct TestCaseData {
    pub ensemble: BubbleEnsemble,
    pub initial: fn(&[f64]) -> Complex64,
}

fn tc1_field(x: &[f64]) -> Complex64 {
    let g = |c: [f64; 2]| (-0.5 * ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2))).exp();
    Complex64::new(PI * g([0.0, 2.0]) + 2.0 * g([1.0, 0.0]), 0.0)
}

fn tc2_field(x: &[f64]) -> Complex64 {
    let r2 = (x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2);
    Complex64::from_polar((-r2).exp(), r2.sqrt().cosh())
}

fn tc3_field(x: &[f64]) -> Complex64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let m2 = TC3_RADIUS * TC3_RADIUS;
    if r2 < m2 {
        Complex64::from_polar((m2 - r2).sqrt(), r2.sqrt().cosh())
    } else {
        Complex64::new(0.0, 0.0)
    }
}

pub fn load_test_case(id: u8) -> Result<TestCaseData> {
    match id {
        1 => Ok(TestCaseData {
            ensemble: BubbleEnsemble::new(
                2,
                vec![
                    Bubble::gaussian(PI, 1.0, 0.0, vec![0.0, 2.0], vec![0.0, 0.0], 0.0),
                    Bubble::gaussian(2.0, 1.0, 0.0, vec![1.0, 0.0], vec![0.0, 0.0], 0.0),
                ],
            )?,
            initial: tc1_field,
        }),
        2 => Ok(TestCaseData {
            ensemble: BubbleEnsemble::new(
                2,
                vec![Bubble::gaussian(
                    FRAC_1_SQRT_2,
                    FRAC_1_SQRT_2,
                    -1.0,
                    vec![1.0, 1.0],
                    vec![0.0, 0.0],
                    1.0,
                )],
            )?,
            initial: tc2_field,
        }),
        3 => {
            let mut cfg = RunConfig::from_toml_str(TC3_BUBBLES)?;
            cfg.d = 2;
            Ok(TestCaseData {
                ensemble: cfg.custom_ensemble()?,
                initial: tc3_field,
            })
        }
        other => Err(Error::UnknownTestCase(other.to_string())),
    }
}
