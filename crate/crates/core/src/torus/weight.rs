//! Closed-form metric weight `φ(t, z) = φ0(z) + ψ(t, z)` on `ℂ/(ℤ + τℤ)`.
//!
//! Points are written `z = a + bτ` with `a, b ∈ [0, 1)`. The flat part is
//! `φ0 = 2πk b² Im τ = 2πk (Im z)² / Im τ`, and the perturbation is
//! `ψ = Re Σ_m P_m(t, t̄) e_m` with `e_m = exp(2πi(m1 a + m2 b))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `coeff · t^p · t̄^q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TMonomial {
    pub coeff: Complex64,
    pub p: u32,
    pub q: u32,
}

/// One Fourier mode of `ψ` with a polynomial coefficient in `(t, t̄)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub m: [i32; 2],
    pub poly: Vec<TMonomial>,
}

/// Orders of differentiation in `t, t̄, z, z̄`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Deriv {
    pub t: u32,
    pub tb: u32,
    pub z: u32,
    pub zb: u32,
}

impl Deriv {
    pub const fn new(t: u32, tb: u32, z: u32, zb: u32) -> Self {
        Self { t, tb, z, zb }
    }

    fn conjugate(self) -> Self {
        Self::new(self.tb, self.t, self.zb, self.z)
    }
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

fn poly_der(poly: &[TMonomial], t: Complex64, dt: u32, dtb: u32) -> Complex64 {
    poly.iter()
        .filter(|m| m.p >= dt && m.q >= dtb)
        .map(|m| {
            m.coeff * falling(m.p, dt) * falling(m.q, dtb) * t.powu(m.p - dt) * t.conj().powu(m.q - dtb)
        })
        .sum()
}

/// Pointwise derivatives of `φ` needed by the curvature formulas.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointJets {
    pub phi: f64,
    pub phi_t: Complex64,
    /// `φ_{tt̄}` (real).
    pub phi_ttb: f64,
    pub phi_tzb: Complex64,
    pub phi_ztb: Complex64,
    /// `φ_{zz̄}` (real, the fiber metric density).
    pub phi_zzb: f64,
    pub phi_zzbzb: Complex64,
    pub phi_tzbzb: Complex64,
}

#[derive(Clone, Debug)]
pub struct Weight {
    pub tau: Complex64,
    pub k: u32,
    pub psi: Vec<FourierTerm>,
    /// `∂_z m·(a,b)` and `∂_z̄ m·(a,b)` times `2πi` per term.
    kappa: Vec<(Complex64, Complex64)>,
}

impl Weight {
    pub fn new(tau: Complex64, k: u32, psi: Vec<FourierTerm>) -> Result<Self> {
        if !(tau.im > 0.0) {
            return Err(Error::Precondition(format!("Im tau must be positive, got {tau}")));
        }
        if k == 0 {
            return Err(Error::Precondition("degree k must be at least 1".into()));
        }
        let it = tau.im;
        let i2 = Complex64::new(0.0, 2.0 * it);
        let da_dz = Complex64::new(0.5, 0.0) - tau.re / i2;
        let db_dz = i2.inv();
        let da_dzb = Complex64::new(0.5, 0.0) + tau.re / i2;
        let db_dzb = -i2.inv();
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        let kappa = psi
            .iter()
            .map(|term| {
                let (m1, m2) = (term.m[0] as f64, term.m[1] as f64);
                (
                    two_pi_i * (da_dz * m1 + db_dz * m2),
                    two_pi_i * (da_dzb * m1 + db_dzb * m2),
                )
            })
            .collect();
        Ok(Self { tau, k, psi, kappa })
    }

    /// `φ0_{zz̄} = πk / Im τ`.
    pub fn flat_density(&self) -> f64 {
        PI * self.k as f64 / self.tau.im
    }

    fn s_der(&self, t: Complex64, a: f64, b: f64, d: Deriv) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (term, &(kz, kzb)) in self.psi.iter().zip(&self.kappa) {
            let p = poly_der(&term.poly, t, d.t, d.tb);
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let phase = Complex64::from_polar(1.0, 2.0 * PI * (term.m[0] as f64 * a + term.m[1] as f64 * b));
            acc += p * kz.powu(d.z) * kzb.powu(d.zb) * phase;
        }
        acc
    }

    /// `∂^d ψ`; `ψ = (S + S̄)/2` so conjugate orders go to `S̄`.
    pub fn psi_der(&self, t: Complex64, a: f64, b: f64, d: Deriv) -> Complex64 {
        (self.s_der(t, a, b, d) + self.s_der(t, a, b, d.conjugate()).conj()) * 0.5
    }

    pub fn phi0(&self, b: f64) -> f64 {
        2.0 * PI * self.k as f64 * b * b * self.tau.im
    }

    pub fn phi(&self, t: Complex64, a: f64, b: f64) -> f64 {
        self.phi0(b) + self.psi_der(t, a, b, Deriv::default()).re
    }

    /// `ψ` alone (real).
    pub fn psi(&self, t: Complex64, a: f64, b: f64) -> f64 {
        self.psi_der(t, a, b, Deriv::default()).re
    }

    /// `∂_z ψ`; the flat part `-2πik b` is handled in closed form by callers.
    pub fn psi_z(&self, t: Complex64, a: f64, b: f64) -> Complex64 {
        self.psi_der(t, a, b, Deriv::new(0, 0, 1, 0))
    }

    pub fn phi_z(&self, t: Complex64, a: f64, b: f64) -> Complex64 {
        Complex64::new(0.0, -2.0 * PI * self.k as f64 * b) + self.psi_z(t, a, b)
    }

    pub fn phi_zzb(&self, t: Complex64, a: f64, b: f64) -> f64 {
        self.flat_density() + self.psi_der(t, a, b, Deriv::new(0, 0, 1, 1)).re
    }

    pub fn jets(&self, t: Complex64, a: f64, b: f64) -> PointJets {
        let d = |dt, dtb, dz, dzb| self.psi_der(t, a, b, Deriv::new(dt, dtb, dz, dzb));
        PointJets {
            phi: self.phi(t, a, b),
            phi_t: d(1, 0, 0, 0),
            phi_ttb: d(1, 1, 0, 0).re,
            phi_tzb: d(1, 0, 0, 1),
            phi_ztb: d(0, 1, 1, 0),
            phi_zzb: self.flat_density() + d(0, 0, 1, 1).re,
            // φ0_{zz̄} is constant, so only ψ contributes.
            phi_zzbzb: d(0, 0, 1, 2),
            phi_tzbzb: d(1, 0, 0, 2),
        }
    }
}
