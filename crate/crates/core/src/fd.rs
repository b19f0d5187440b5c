//! Finite differences in the complex base variable `t`.
//!
//! Stencil values are indexed as `[0, h, -h, ih, -ih, h+ih, h-ih, -h+ih, -h-ih]`.

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::{self, CMat};

/// Number of points on the square stencil.
pub const STENCIL_LEN: usize = 9;

/// Offsets of the square stencil of half-width `h`.
pub fn stencil_offsets(h: f64) -> [Complex64; STENCIL_LEN] {
    let c = Complex64::new;
    [
        c(0.0, 0.0),
        c(h, 0.0),
        c(-h, 0.0),
        c(0.0, h),
        c(0.0, -h),
        c(h, h),
        c(h, -h),
        c(-h, h),
        c(-h, -h),
    ]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceScheme {
    /// Axis points only.
    #[default]
    FivePoint,
    /// Isotropic 9-point formula using the corners as well.
    NinePoint,
}

/// `∂_t ∂_t̄ f = Δf / 4` at the centre from stencil values.
pub fn fd_dbar_d(values: &[f64; STENCIL_LEN], h: f64, scheme: LaplaceScheme) -> f64 {
    let f0 = values[0];
    let axis = values[1] + values[2] + values[3] + values[4];
    let lap = match scheme {
        LaplaceScheme::FivePoint => (axis - 4.0 * f0) / (h * h),
        LaplaceScheme::NinePoint => {
            let corners = values[5] + values[6] + values[7] + values[8];
            (4.0 * axis + corners - 20.0 * f0) / (6.0 * h * h)
        }
    };
    lap / 4.0
}

/// `∂_t = (∂_x - i ∂_y) / 2` by centred differences, for any vector-space
/// valued stencil data.
pub fn d_dt<T>(values: &[T], h: f64) -> T
where
    T: Clone + std::ops::Sub<Output = T> + std::ops::Mul<Complex64, Output = T> + std::ops::Add<Output = T>,
{
    let dx = (values[1].clone() - values[2].clone()) * Complex64::new(0.5 / h, 0.0);
    let dy = (values[3].clone() - values[4].clone()) * Complex64::new(0.5 / h, 0.0);
    (dx + dy * Complex64::new(0.0, -1.0)) * Complex64::new(0.5, 0.0)
}

/// `(4 E(h/2) - E(h)) / 3`.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// `⟨Θu, u⟩` at the stencil centre from Gram matrices on the stencil.
///
/// The section is moved along `u + (t - t0) a` with `a` chosen so that
/// `∂_t ⟨ũ, ·⟩` vanishes at the centre, then `-∂_t ∂_t̄ ‖ũ‖²` is taken.
pub fn dprime_curvature(grams: &[CMat], h: f64, u: &[Complex64], scheme: LaplaceScheme) -> Result<f64> {
    let g0 = &grams[0];
    let gt = d_dt(grams, h);
    let uc = CMat::from_column_slice(u.len(), 1, u);
    let a = -linalg::solve(&g0.transpose(), &(gt.transpose() * &uc))?;
    let offsets = stencil_offsets(h);
    let values: [f64; STENCIL_LEN] = std::array::from_fn(|k| {
        let t = offsets[k];
        let ut: Vec<Complex64> = (0..u.len()).map(|i| u[i] + t * a[(i, 0)]).collect();
        linalg::section_norm2(&grams[k], &ut)
    });
    Ok(-fd_dbar_d(&values, h, scheme))
}

/// `∂_t ∂_t̄ f(t0)` for a closure, optionally Richardson-extrapolated from
/// `h` and `h/2`.
pub fn dbar_d_of<F>(f: F, t0: Complex64, h: f64, scheme: LaplaceScheme, extrapolate: bool) -> f64
where
    F: Fn(Complex64) -> f64,
{
    let est = |h: f64| {
        let offs = stencil_offsets(h);
        let vals: [f64; STENCIL_LEN] = std::array::from_fn(|k| f(t0 + offs[k]));
        fd_dbar_d(&vals, h, scheme)
    };
    if extrapolate {
        richardson(est(h), est(h / 2.0))
    } else {
        est(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn modulus_squared_has_unit_laplacian() {
        for scheme in [LaplaceScheme::FivePoint, LaplaceScheme::NinePoint] {
            let v = dbar_d_of(|t| t.norm_sqr(), c(0.0, 0.0), 1e-2, scheme, false);
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn harmonic_function_vanishes() {
        let h = 1e-2;
        let v = dbar_d_of(|t| (t * t * t).re, c(0.3, -0.2), h, LaplaceScheme::FivePoint, true);
        assert!(v.abs() < 1e-15 / (h * h) * 10.0);
    }

    #[test]
    fn quartic_modulus_recentred() {
        let at0 = dbar_d_of(|t| t.norm_sqr().powi(2), c(0.0, 0.0), 1e-2, LaplaceScheme::FivePoint, true);
        assert!(at0.abs() < 1e-9);
        let at1 = dbar_d_of(|t| t.norm_sqr().powi(2), c(1.0, 0.0), 1e-2, LaplaceScheme::FivePoint, true);
        assert!((at1 - 4.0).abs() < 1e-8, "{at1}");
    }

    #[test]
    fn holomorphic_derivative() {
        let h = 1e-3;
        let offs = stencil_offsets(h);
        let t0 = c(0.4, 0.1);
        let vals: Vec<Complex64> = offs.iter().map(|&d| (t0 + d).exp() + (t0 + d).conj()).collect();
        let d = d_dt(&vals, h);
        assert!((d - t0.exp()).norm() < 1e-6);
    }
}
