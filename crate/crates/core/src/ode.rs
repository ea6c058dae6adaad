//! Explicit Runge-Kutta stepping over flat `f64` state vectors.

use crate::error::{Error, Result};

/// Butcher tableau of an explicit scheme (`a` strictly lower triangular).
#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ButcherTableau {
    /// Classical fourth-order scheme.
    pub fn rk4() -> Self {
        Self {
            a: vec![
                vec![],
                vec![0.5],
                vec![0.0, 0.5],
                vec![0.0, 0.0, 1.0],
            ],
            b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            c: vec![0.0, 0.5, 0.5, 1.0],
        }
    }

    /// Heun's second-order scheme.
    pub fn heun() -> Self {
        Self {
            a: vec![vec![], vec![1.0]],
            b: vec![0.5, 0.5],
            c: vec![0.0, 1.0],
        }
    }

    /// Three-stage strong-stability-preserving third-order scheme.
    pub fn ssp_rk3() -> Self {
        Self {
            a: vec![vec![], vec![1.0], vec![0.25, 0.25]],
            b: vec![1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
            c: vec![0.0, 1.0, 0.5],
        }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }
}

/// One step `y ← y + dt Σ b_i k_i` of an autonomous system `y' = f(y)`.
pub fn explicit_step<F>(tableau: &ButcherTableau, y: &[f64], dt: f64, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = y.len();
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(tableau.stages());
    for (i, row) in tableau.a.iter().enumerate() {
        let mut stage = y.to_vec();
        for (aij, kj) in row.iter().zip(&ks) {
            if *aij != 0.0 {
                for (s, k) in stage.iter_mut().zip(kj) {
                    *s += dt * aij * k;
                }
            }
        }
        let k = f(&stage)?;
        if k.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: k.len() });
        }
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteStage(i + 1));
        }
        ks.push(k);
    }
    let mut out = y.to_vec();
    for (bi, k) in tableau.b.iter().zip(&ks) {
        for (o, kv) in out.iter_mut().zip(k) {
            *o += dt * bi * kv;
        }
    }
    Ok(out)
}
