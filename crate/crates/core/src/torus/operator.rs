//! Discrete `□′ + 1` on `(0,1)`-form coefficients in unitary gauge.
//!
//! `∇′_z` is a fourth-order covariant difference with link phases
//! `exp ∫ A`, where `A_a = -i Im φ_z` and `A_b = -i Im(τ φ_z)`. Edges that
//! wrap in the `b` direction pick up the unimodular part of the `z → z + τ`
//! multiplier. The operator is `B^H diag(1/φ_{zz̄}) B + I`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::weight::Weight;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::par::{self, Execution};
use crate::poly::gauss_legendre;

/// Central fourth-order first-derivative weights (times the step).
const FOURTH_ORDER: [(i64, f64); 4] = [(1, 8.0 / 12.0), (2, -1.0 / 12.0), (-1, -8.0 / 12.0), (-2, 1.0 / 12.0)];

/// Smallest grid on which the stencil touches distinct points.
pub const MIN_GRID: usize = 8;

#[derive(Clone, Debug)]
struct Csr {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl Csr {
    fn apply(&self, exec: Execution, x: &[Complex64]) -> Vec<Complex64> {
        par::map_slice(exec, &self.rows, |row| row.iter().map(|&(j, v)| v * x[j]).sum())
    }

    fn adjoint(&self) -> Csr {
        let mut rows = vec![Vec::new(); self.rows.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                rows[j].push((i, v.conj()));
            }
        }
        Csr { rows }
    }
}

#[derive(Clone, Debug)]
pub struct BoxPrimeOperator {
    pub n: usize,
    b: Csr,
    bh: Csr,
    inv_g: Vec<f64>,
    exec: Execution,
}

fn unimodular_multiplier(k: u32, tau: Complex64, a: f64, b: f64) -> Complex64 {
    let kf = k as f64;
    Complex64::from_polar(1.0, -PI * kf * tau.re - 2.0 * PI * kf * (a + b * tau.re))
}

impl BoxPrimeOperator {
    /// Assembles the operator for the fiber over `t` on an `n × n` grid,
    /// integrating link phases with `link_quad` Gauss–Legendre nodes.
    pub fn new(weight: &Weight, t: Complex64, n: usize, link_quad: usize, exec: Execution) -> Result<Self> {
        if n < MIN_GRID {
            return Err(Error::Precondition(format!("grid size {n} below {MIN_GRID}")));
        }
        if link_quad == 0 {
            return Err(Error::Precondition("link quadrature needs at least one node".into()));
        }
        let tau = weight.tau;
        let (nodes, wts) = gauss_legendre(link_quad);
        let link = |a: f64, b: f64, da: f64, db: f64| -> Complex64 {
            let mut s = Complex64::new(0.0, 0.0);
            for (x, w) in nodes.iter().zip(&wts) {
                let sx = 0.5 * (x + 1.0);
                let pz = weight.phi_z(t, a + sx * da, b + sx * db);
                let aa = Complex64::new(0.0, -pz.im);
                let ab = Complex64::new(0.0, -(tau * pz).im);
                s += (aa * da + ab * db) * (0.5 * w);
            }
            s.exp()
        };
        let step = 1.0 / n as f64;
        let den = tau.conj() - tau;
        let cz_a = tau.conj() / den;
        let cz_b = -den.inv();
        let ni = n as i64;
        let idx = |i: i64, j: i64| (i.rem_euclid(ni) as usize) * n + j.rem_euclid(ni) as usize;
        let rows = par::map_range(exec, n * n, |p| {
            let (i, j) = ((p / n) as i64, (p % n) as i64);
            let (a, b) = (i as f64 * step, j as f64 * step);
            let mut row = Vec::with_capacity(8);
            for &(s, cf) in &FOURTH_ORDER {
                let sd = s as f64 * step;
                row.push((idx(i + s, j), cz_a * (cf / step) * link(a, b, sd, 0.0)));
                let jj = j + s;
                let wrap = if jj >= ni {
                    unimodular_multiplier(weight.k, tau, a, b + sd - 1.0)
                } else if jj < 0 {
                    unimodular_multiplier(weight.k, tau, a, b + sd).inv()
                } else {
                    Complex64::new(1.0, 0.0)
                };
                row.push((idx(i, jj), cz_b * (cf / step) * link(a, b, 0.0, sd) * wrap));
            }
            row
        });
        let inv_g = par::map_range(exec, n * n, |p| {
            let (a, b) = ((p / n) as f64 * step, (p % n) as f64 * step);
            1.0 / weight.phi_zzb(t, a, b)
        });
        if let Some(p) = inv_g.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Precondition(format!("fiber metric not positive at grid point {p}")));
        }
        let b = Csr { rows };
        let bh = b.adjoint();
        Ok(Self { n, b, bh, inv_g, exec })
    }

    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut bx = self.b.apply(self.exec, x);
        for (v, w) in bx.iter_mut().zip(&self.inv_g) {
            *v *= w;
        }
        let mut out = self.bh.apply(self.exec, &bx);
        for (o, xi) in out.iter_mut().zip(x) {
            *o += xi;
        }
        out
    }

    /// `|⟨y, Lx⟩ - ⟨Ly, x⟩| / (‖y‖‖Lx‖ + ‖Ly‖‖x‖)` and the smallest Rayleigh
    /// quotient seen, over a few seeded random vectors.
    pub fn self_adjointness_check(&self, seed: u64, trials: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rand_vec = || -> Vec<Complex64> {
            (0..self.dim())
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        };
        let mut defect = 0.0f64;
        let mut rayleigh = f64::INFINITY;
        for _ in 0..trials {
            let x = rand_vec();
            let y = rand_vec();
            let lx = self.apply(&x);
            let ly = self.apply(&y);
            let lhs = dot(self.exec, &y, &lx);
            let rhs = dot(self.exec, &ly, &x);
            let scale = norm(self.exec, &y) * norm(self.exec, &lx) + norm(self.exec, &ly) * norm(self.exec, &x);
            defect = defect.max((lhs - rhs).norm() / scale);
            rayleigh = rayleigh.min(dot(self.exec, &x, &lx).re / dot(self.exec, &x, &x).re);
        }
        (defect, rayleigh)
    }

    /// Dense matrix of the operator, column by column.
    pub fn to_dense(&self) -> CMat {
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        let mut e = vec![Complex64::new(0.0, 0.0); d];
        for col in 0..d {
            e[col] = Complex64::new(1.0, 0.0);
            let v = self.apply(&e);
            for (row, x) in v.into_iter().enumerate() {
                m[(row, col)] = x;
            }
            e[col] = Complex64::new(0.0, 0.0);
        }
        m
    }
}

/// `Σ conj(x) y` with a scheduler-independent reduction.
pub fn dot(exec: Execution, x: &[Complex64], y: &[Complex64]) -> Complex64 {
    par::chunked_sum(exec, x.len(), |i| x[i].conj() * y[i])
}

pub fn norm(exec: Execution, x: &[Complex64]) -> f64 {
    dot(exec, x, x).re.sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Conjugate gradients for the Hermitian positive operator.
pub fn conjugate_gradient(op: &BoxPrimeOperator, rhs: &[Complex64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let exec = op.exec;
    let bnorm = norm(exec, rhs);
    let mut x = vec![Complex64::new(0.0, 0.0); rhs.len()];
    if bnorm == 0.0 {
        return Ok(CgOutcome { x, iterations: 0, residual: 0.0 });
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = dot(exec, &r, &r).re;
    let mut trace = Vec::new();
    for it in 1..=max_iter {
        let ap = op.apply(&p);
        let alpha = rr / dot(exec, &p, &ap).re;
        for i in 0..x.len() {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rr_new = dot(exec, &r, &r).re;
        let rel = rr_new.sqrt() / bnorm;
        trace.push(rel);
        if rel <= tol {
            return Ok(CgOutcome { x, iterations: it, residual: rel });
        }
        let beta = rr_new / rr;
        for i in 0..p.len() {
            p[i] = r[i] + p[i] * beta;
        }
        rr = rr_new;
    }
    let residual = trace.last().copied().unwrap_or(1.0);
    Err(Error::Solver { iterations: max_iter, residual, trace })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxPrimeSolution {
    pub xi: Vec<Complex64>,
    /// `⟨(□′+1)⁻¹η, η⟩` with the grid area element.
    pub pairing: f64,
    pub eta_norm2: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// `ξ = (□′+1)⁻¹η` and its pairing with `η`.
pub fn box_prime_solve(
    op: &BoxPrimeOperator,
    eta: &[Complex64],
    area: f64,
    tol: f64,
    max_iter: usize,
) -> Result<BoxPrimeSolution> {
    if eta.len() != op.dim() {
        return Err(Error::InvalidInput(format!("eta has {} values, grid has {}", eta.len(), op.dim())));
    }
    let cg = conjugate_gradient(op, eta, tol, max_iter)?;
    let pairing = dot(op.exec, eta, &cg.x).re * area;
    let eta_norm2 = dot(op.exec, eta, eta).re * area;
    Ok(BoxPrimeSolution { xi: cg.x, pairing, eta_norm2, iterations: cg.iterations, residual: cg.residual })
}
