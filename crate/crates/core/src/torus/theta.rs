//! Level-k theta sections of the degree-k bundle on `ℂ/(ℤ + τℤ)`.
//!
//! `θ_j(z) = Σ_{|n| ≤ M} exp(iπkτν² + 2πikzν)`, `ν = n + j/k`, satisfying
//! `θ(z + 1) = θ(z)` and `θ(z + τ) = e^{-iπkτ - 2πikz} θ(z)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Target size of the discarded tail relative to the leading term.
pub const TAIL_TOL: f64 = 1e-17;

#[derive(Clone, Debug)]
pub struct ThetaBasis {
    pub tau: Complex64,
    pub k: u32,
    pub truncation: usize,
}

/// Smallest `M` whose tail is below [`TAIL_TOL`] for `b ∈ [0, 1]`.
///
/// With `Im z ≤ Im τ` each term is bounded by `exp(-πk Im τ ((|ν| - 1)² - 1))`,
/// so it suffices that this is below the tolerance at `|ν| = M - 1`.
pub fn required_truncation(tau: Complex64, k: u32) -> usize {
    let decay = PI * k as f64 * tau.im;
    let need = (1.0 - TAIL_TOL.ln() / decay).sqrt();
    (need.ceil() as usize) + 3
}

impl ThetaBasis {
    pub fn new(tau: Complex64, k: u32, truncation: Option<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Precondition("degree k must be at least 1".into()));
        }
        if !(tau.im > 0.0) {
            return Err(Error::Precondition(format!("Im tau must be positive, got {tau}")));
        }
        let need = required_truncation(tau, k);
        let truncation = match truncation {
            Some(m) if m < need => {
                return Err(Error::Accuracy(format!(
                    "theta truncation {m} too small for tau = {tau}, k = {k}; need at least {need}"
                )))
            }
            Some(m) => m,
            None => need,
        };
        Ok(Self { tau, k, truncation })
    }

    pub fn len(&self) -> usize {
        self.k as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval(&self, j: usize, z: Complex64) -> Complex64 {
        let k = self.k as f64;
        let m = self.truncation as i64;
        let ipi = Complex64::new(0.0, PI);
        (-m..=m)
            .map(|n| {
                let nu = n as f64 + j as f64 / k;
                (ipi * k * self.tau * nu * nu + ipi * 2.0 * k * z * nu).exp()
            })
            .sum()
    }

    /// All `k` sections at `z = a + bτ`.
    pub fn eval_all(&self, a: f64, b: f64) -> Vec<Complex64> {
        let z = Complex64::new(a, 0.0) + self.tau * b;
        (0..self.len()).map(|j| self.eval(j, z)).collect()
    }

    /// Multiplier for `z → z + τ`.
    pub fn multiplier_tau(&self, z: Complex64) -> Complex64 {
        let ipi = Complex64::new(0.0, PI);
        (-ipi * self.k as f64 * self.tau - ipi * 2.0 * self.k as f64 * z).exp()
    }

    /// Largest relative violation of both automorphy rules over `points`.
    pub fn quasi_periodicity_residual(&self, points: &[Complex64]) -> f64 {
        let mut worst = 0.0f64;
        for &z in points {
            for j in 0..self.len() {
                let v = self.eval(j, z);
                let scale = v.norm().max(1e-300);
                let r1 = (self.eval(j, z + 1.0) - v).norm() / scale;
                let r2 = (self.eval(j, z + self.tau) - self.multiplier_tau(z) * v).norm()
                    / (self.multiplier_tau(z) * v).norm().max(1e-300);
                worst = worst.max(r1).max(r2);
            }
        }
        worst
    }
}
