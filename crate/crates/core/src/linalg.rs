//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// `[[0, I_g], [-I_g, 0]]`.
pub fn standard_symplectic(g: usize) -> CMat {
    let mut j = CMat::zeros(2 * g, 2 * g);
    for k in 0..g {
        j[(k, g + k)] = c(1.0, 0.0);
        j[(g + k, k)] = c(-1.0, 0.0);
    }
    j
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of the Hermitian part `(M + M^H)/2`, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Distance from Hermitian, relative to the largest entry.
pub fn hermitian_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint())) / max_abs(m).max(f64::MIN_POSITIVE)
}

/// 2-norm condition number of a Hermitian positive definite matrix.
pub fn hpd_condition(m: &CMat) -> f64 {
    let ev = hermitian_eigenvalues(m);
    let lo = ev.first().copied().unwrap_or(0.0);
    let hi = ev.last().copied().unwrap_or(0.0);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `a x = b` by LU; a singular `a` is an internal error.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Internal("singular linear system".into()))
}

/// `v^H M w`.
pub fn sesquilinear(m: &CMat, v: &[Complex64], w: &[Complex64]) -> Complex64 {
    let mut acc = c(0.0, 0.0);
    for (i, vi) in v.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            acc += vi.conj() * m[(i, j)] * wj;
        }
    }
    acc
}

/// `u^T M conj(u)`, the Gram-matrix convention used for section norms.
pub fn section_norm2(g: &CMat, u: &[Complex64]) -> f64 {
    let mut acc = c(0.0, 0.0);
    for (i, ui) in u.iter().enumerate() {
        for (j, uj) in u.iter().enumerate() {
            acc += ui * g[(i, j)] * uj.conj();
        }
    }
    acc.re
}

pub fn row_vector(v: &[Complex64]) -> CMat {
    CMat::from_row_slice(1, v.len(), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symplectic_form_squares_to_minus_identity() {
        let j = standard_symplectic(3);
        let sq = &j * &j;
        assert!(max_abs(&(sq + CMat::identity(6, 6))) == 0.0);
    }

    #[test]
    fn eigenvalues_of_hermitian_matrix() {
        let m = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let ev = hermitian_eigenvalues(&m);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        assert!((hpd_condition(&m) - 3.0).abs() < 1e-13);
        assert_eq!(hermitian_defect(&m), 0.0);
    }

    #[test]
    fn solve_roundtrip() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0), c(3.0, 0.5)]);
        let x = CMat::from_row_slice(2, 1, &[c(0.3, -0.2), c(1.0, 2.0)]);
        let b = &a * &x;
        let got = solve(&a, &b).unwrap();
        assert!(max_abs(&(got - x)) < 1e-14);
        assert!(solve(&CMat::zeros(2, 2), &b).is_err());
    }
}
