//! Complex polynomials and simultaneous (Aberth–Ehrlich) root finding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense polynomial, `coeffs[k]` multiplies `z^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

/// Relative separation below which two roots count as coincident.
pub const SEP_TOL: f64 = 1e-8;

const MAX_ITERS: usize = 2000;

impl ComplexPoly {
    /// Builds from ascending coefficients; trailing zeros are dropped.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Self { coeffs }
    }

    /// Builds from coefficients listed highest degree first.
    pub fn from_descending(coeffs: &[Complex64]) -> Self {
        Self::new(coeffs.iter().rev().copied().collect())
    }

    pub fn from_real(ascending: &[f64]) -> Self {
        Self::new(ascending.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// `∏ (z - r)`.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= r * ck;
            }
            c = next;
        }
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().expect("never empty")
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `(p(z), p'(z))` by Horner.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> ComplexPoly {
        if self.coeffs.len() <= 1 {
            return Self::new(vec![Complex64::new(0.0, 0.0)]);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// `self + t·other`.
    pub fn add_scaled(&self, t: Complex64, other: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        Self::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(zero)
                        + t * other.coeffs.get(k).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }

    /// `Σ |k a_k| |z|^{k-1}`, the scale against which `|p'(z)|` is judged.
    fn derivative_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c.norm() * r.powi(k as i32 - 1))
            .sum()
    }

    /// All roots, polished, sorted by real part then imaginary part.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let d = self.degree();
        if d == 0 || self.is_zero() {
            return Err(Error::InvalidInput("polynomial has no roots".into()));
        }
        if self.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite polynomial coefficient".into()));
        }
        let mut z = self.initial_guesses();
        let mut best = f64::INFINITY;
        let mut stalled = 0;
        for _ in 0..MAX_ITERS {
            let mut max_step = 0.0f64;
            for j in 0..d {
                let (p, dpj) = self.eval_with_derivative(z[j]);
                if p.norm() == 0.0 {
                    continue;
                }
                let ratio = if dpj.norm() == 0.0 {
                    Complex64::new(f64::INFINITY, 0.0)
                } else {
                    p / dpj
                };
                let repulsion: Complex64 = (0..d)
                    .filter(|&k| k != j)
                    .map(|k| (z[j] - z[k]).inv())
                    .sum();
                let step = if ratio.re.is_finite() {
                    ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion)
                } else {
                    repulsion.inv()
                };
                if step.re.is_finite() && step.im.is_finite() {
                    z[j] -= step;
                    max_step = max_step.max(step.norm() / z[j].norm().max(1.0));
                }
            }
            if max_step < 1e-16 {
                break;
            }
            // Near convergence the step is rounding noise; stop once it stops shrinking.
            if max_step < best {
                best = max_step;
                stalled = 0;
            } else if best < 1e-10 {
                stalled += 1;
                if stalled >= 8 {
                    break;
                }
            }
        }
        for zj in z.iter_mut() {
            *zj = self.newton_polish(*zj);
        }
        z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(z)
    }

    /// Roots with the simple-root checks used for smooth fibers.
    pub fn simple_roots(&self) -> Result<Vec<Complex64>> {
        if self.leading().norm() == 0.0 {
            return Err(Error::InvalidInput("zero leading coefficient".into()));
        }
        let roots = self.roots()?;
        let scale = roots.iter().map(|r| r.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                let dist = (roots[i] - roots[j]).norm();
                if dist < SEP_TOL * scale {
                    return Err(Error::DegenerateCurve(format!(
                        "roots {} and {} are {dist:.2e} apart (tolerance {:.2e})",
                        fmt_c(roots[i]),
                        fmt_c(roots[j]),
                        SEP_TOL * scale
                    )));
                }
                if dist < 1e-5 * scale {
                    // Aberth resolves a multiple root only to ~sqrt(eps); a
                    // vanishing derivative at both members flags it.
                    let flat = |r: Complex64| {
                        let (_, d) = self.eval_with_derivative(r);
                        d.norm() <= 1e-6 * self.derivative_scale(r)
                    };
                    if flat(roots[i]) && flat(roots[j]) {
                        return Err(Error::DegenerateCurve(format!(
                            "repeated root near {}",
                            fmt_c((roots[i] + roots[j]) * 0.5)
                        )));
                    }
                }
            }
        }
        Ok(roots)
    }

    fn initial_guesses(&self) -> Vec<Complex64> {
        let d = self.degree();
        let lead = self.leading();
        let center = -self.coeffs[d - 1] / (lead * d as f64);
        // Recentre, then take the largest k-th root of the shifted coefficients.
        let shifted = self.taylor_shift(center);
        let radius = (1..=d)
            .map(|k| (shifted.coeffs[d - k] / lead).norm().powf(1.0 / k as f64))
            .fold(0.0, f64::max)
            .max(1e-3);
        (0..d)
            .map(|j| {
                let angle = 2.0 * std::f64::consts::PI * j as f64 / d as f64 + 0.4;
                center + Complex64::from_polar(radius, angle)
            })
            .collect()
    }

    /// Coefficients of `p(z + c)`.
    fn taylor_shift(&self, c: Complex64) -> ComplexPoly {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for k in (i..n - 1).rev() {
                let next = a[k + 1];
                a[k] += c * next;
            }
        }
        Self::new(a)
    }

    fn newton_polish(&self, mut z: Complex64) -> Complex64 {
        for _ in 0..4 {
            let (p, dp) = self.eval_with_derivative(z);
            if dp.norm() == 0.0 {
                break;
            }
            let cand = z - p / dp;
            if self.eval(cand).norm() < p.norm() {
                z = cand;
            } else {
                break;
            }
        }
        z
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

pub(crate) fn fmt_c(z: Complex64) -> String {
    format!("{:.6}{:+.6}i", z.re, z.im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((integral - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn fifth_roots_of_unity() {
        let p = ComplexPoly::from_real(&[-1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let roots = p.simple_roots().unwrap();
        assert_eq!(roots.len(), 5);
        for k in 0..5 {
            let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 5.0);
            assert!(roots.iter().any(|r| (r - w).norm() < 1e-13), "missing {w}");
        }
        for w in roots.windows(2) {
            assert!(w[0].re <= w[1].re);
        }
    }

    #[test]
    fn integer_roots_sorted() {
        let p = ComplexPoly::from_roots(&[c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let roots = p.simple_roots().unwrap();
        for (r, want) in roots.iter().zip([0.0, 1.0, 2.0]) {
            assert!((r - c(want, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn double_root_is_degenerate() {
        let p = ComplexPoly::from_real(&[0.0, 0.0, -1.0, 1.0]);
        assert!(matches!(p.simple_roots(), Err(Error::DegenerateCurve(_))));
    }

    #[test]
    fn descending_constructor_and_derivative() {
        let p = ComplexPoly::from_descending(&[c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(p.degree(), 3);
        let (v, d) = p.eval_with_derivative(c(2.0, 0.0));
        assert_eq!(v, c(6.0, 0.0));
        assert_eq!(d, c(11.0, 0.0));
        assert_eq!(p.derivative().eval(c(2.0, 0.0)), d);
    }

    #[test]
    fn complex_coefficients() {
        let want = [c(-1.0, 0.5), c(0.3, -0.2), c(0.7, 1.1), c(2.0, 0.0)];
        let p = ComplexPoly::from_roots(&want).add_scaled(c(0.0, 0.0), &ComplexPoly::from_real(&[1.0]));
        let roots = p.simple_roots().unwrap();
        for w in want {
            assert!(roots.iter().any(|r| (r - w).norm() < 1e-12));
        }
    }
}
