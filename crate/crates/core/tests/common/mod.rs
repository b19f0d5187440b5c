//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use hodgelab_core::linalg::CMat;
use hodgelab_core::poly::{gauss_legendre, ComplexPoly};
use hodgelab_core::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Arithmetic–geometric mean of two positive reals.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let (na, nb) = ((a + b) / 2.0, (a * b).sqrt());
        a = na;
        b = nb;
        if (a - b).abs() <= 1e-17 * a {
            break;
        }
    }
    (a + b) / 2.0
}

/// `∫_{e1}^{e2} dx / sqrt(f)` and `∫_{e2}^{e3} dx / sqrt(-f)` for
/// `f = (x-e1)(x-e2)(x-e3)`, `e1 < e2 < e3` real.
pub fn elliptic_half_periods(e1: f64, e2: f64, e3: f64) -> (f64, f64) {
    (
        PI / agm((e3 - e1).sqrt(), (e3 - e2).sqrt()),
        PI / agm((e3 - e1).sqrt(), (e2 - e1).sqrt()),
    )
}

/// Reduces `τ` into the standard fundamental domain of `SL2(Z)`.
pub fn reduce_tau(mut tau: Complex64) -> Complex64 {
    for _ in 0..1000 {
        tau.re -= tau.re.round();
        if tau.norm_sqr() < 1.0 - 1e-15 {
            tau = -tau.inv();
        } else {
            break;
        }
    }
    tau
}

/// Brute-force `G_ij = 4 ∫_C z^i conj(z)^j / |f(z)| dA` (both sheets),
/// split by a partition of unity centred on the branch points and
/// integrated in polar coordinates around each.
pub fn gram_2d(f: &ComplexPoly, roots: &[Complex64], genus: usize, radial: usize, angular: usize) -> CMat {
    let (s_nodes, s_weights) = gauss_legendre(radial);
    let spread = roots.iter().map(|e| e.norm()).fold(1.0, f64::max);
    let big_r = spread;
    let mut g = CMat::zeros(genus, genus);
    for &e in roots {
        for (sn, sw) in s_nodes.iter().zip(&s_weights) {
            let s = 0.5 * (sn + 1.0);
            let r = big_r * s / (1.0 - s);
            let dr = big_r / ((1.0 - s) * (1.0 - s)) * 0.5 * sw;
            for t in 0..angular {
                let theta = 2.0 * PI * (t as f64 + 0.5) / angular as f64;
                let z = e + Complex64::from_polar(r, theta);
                let mut denom = 0.0;
                let mut own = 0.0;
                for &ek in roots {
                    let w = (z - ek).norm().powi(-4);
                    denom += w;
                    if ek == e {
                        own = w;
                    }
                }
                let weight = own / denom;
                let base = 4.0 * weight / f.eval(z).norm() * r * dr * (2.0 * PI / angular as f64);
                let mut zi = c(1.0, 0.0);
                for i in 0..genus {
                    let mut zj = c(1.0, 0.0);
                    for j in 0..genus {
                        g[(i, j)] += zi * zj.conj() * base;
                        zj *= z;
                    }
                    zi *= z;
                }
            }
        }
    }
    g
}

pub fn poly_from_roots(lead: Complex64, roots: &[Complex64]) -> ComplexPoly {
    let p = ComplexPoly::from_roots(roots);
    ComplexPoly::new(p.coeffs().iter().map(|&x| x * lead).collect())
}

pub fn real_desc(coeffs: &[f64]) -> ComplexPoly {
    ComplexPoly::from_descending(&coeffs.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())
}

/// Test corpus of fibers with well separated branch points.
pub fn curve_corpus() -> Vec<(&'static str, ComplexPoly)> {
    vec![
        ("lemniscatic", real_desc(&[1.0, 0.0, -1.0, 0.0])),
        ("legendre-2", real_desc(&[1.0, -3.0, 2.0, 0.0])),
        (
            "elliptic-quartic",
            poly_from_roots(c(0.7, 0.2), &[c(-1.3, 0.4), c(-0.2, -0.9), c(0.5, 0.6), c(1.4, -0.3)]),
        ),
        ("bolza-like", real_desc(&[1.0, 0.0, 0.0, 0.0, 0.0, -1.0])),
        (
            "genus2-sextic",
            poly_from_roots(
                c(1.0, 0.0),
                &[c(-2.0, 0.1), c(-1.1, 0.7), c(-0.4, -0.8), c(0.5, 0.9), c(1.2, -0.5), c(2.1, 0.2)],
            ),
        ),
        ("genus3-septic", real_desc(&[1.0, 0.2, 0.0, -1.0, 0.0, 1.0, 0.5, -1.0])),
        ("genus3-octic", real_desc(&[1.0, 0.0, -2.0, 0.1, 1.0, 0.0, -0.5, 0.0, 1.3])),
    ]
}
