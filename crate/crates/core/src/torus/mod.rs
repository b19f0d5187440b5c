//! Twisted curvature testbed on the trivial fibration `Δ × ℂ/(ℤ + τℤ)`.
//!
//! The fiber space `E_t = H⁰(T, K_T + L)` is spanned by the level-k theta
//! sections (with `K_T` trivialized by `dz`). The left side of the identity
//! is the finite-difference curvature of their Gram matrix; the right side
//! is `∫ c(φ)|û|²e^{-φ} + ⟨(□′+1)⁻¹η, η⟩` with `η = -∂_z̄ W · û dz̄`.

pub mod operator;
pub mod theta;
pub mod weight;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use operator::{box_prime_solve, BoxPrimeOperator, BoxPrimeSolution};
pub use theta::ThetaBasis;
pub use weight::{Deriv, FourierTerm, PointJets, TMonomial, Weight};

use crate::error::{Error, Result};
use crate::fd::{self, LaplaceScheme, STENCIL_LEN};
use crate::linalg::{self, CMat};
use crate::par::{self, Execution};

pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_H: f64 = 1e-2;
pub const DEFAULT_CG_TOL: f64 = 1e-10;
pub const DEFAULT_CG_MAX_ITER: usize = 5000;
pub const DEFAULT_LINK_QUAD: usize = 10;
pub const DEFAULT_TOL: f64 = 1e-3;
/// Both sides below this multiple of `‖u‖²` count as vanishing.
pub const VANISHING_TOL: f64 = 1e-8;
/// Allowed violation of the upper bound, relative to `‖u‖²`.
pub const BOUND_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusTwistedConfig {
    pub tau: Complex64,
    pub k: u32,
    /// Theta truncation; derived from `τ, k` when absent.
    pub truncation: Option<usize>,
    pub n: usize,
    pub h: f64,
    pub t0: Complex64,
    pub psi: Vec<FourierTerm>,
    pub richardson: bool,
    pub scheme: LaplaceScheme,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub link_quad: usize,
    pub tol: f64,
}

impl TorusTwistedConfig {
    pub fn new(tau: Complex64, k: u32, psi: Vec<FourierTerm>) -> Self {
        Self {
            tau,
            k,
            truncation: None,
            n: DEFAULT_GRID,
            h: DEFAULT_H,
            t0: Complex64::new(0.0, 0.0),
            psi,
            richardson: true,
            scheme: LaplaceScheme::FivePoint,
            cg_tol: DEFAULT_CG_TOL,
            cg_max_iter: DEFAULT_CG_MAX_ITER,
            link_quad: DEFAULT_LINK_QUAD,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_grid(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    /// `|t|²`, which makes `c ≡ 1` and `η ≡ 0`.
    pub fn psi_norm_squared() -> Vec<FourierTerm> {
        vec![FourierTerm { m: [0, 0], poly: vec![TMonomial { coeff: Complex64::new(1.0, 0.0), p: 1, q: 1 }] }]
    }

    /// `2 Re(λt)`, which makes `c ≡ 0` and `η ≡ 0`.
    pub fn psi_harmonic(lambda: Complex64) -> Vec<FourierTerm> {
        vec![FourierTerm { m: [0, 0], poly: vec![TMonomial { coeff: lambda * 2.0, p: 1, q: 0 }] }]
    }

    /// Area of one grid cell for the form `i dz ∧ dz̄ = 2 dx dy`.
    pub fn area_element(&self) -> f64 {
        2.0 * self.tau.im / (self.n * self.n) as f64
    }

    pub fn grid_point(&self, p: usize) -> (f64, f64) {
        let s = 1.0 / self.n as f64;
        ((p / self.n) as f64 * s, (p % self.n) as f64 * s)
    }

    fn validate(&self) -> Result<()> {
        if self.n < operator::MIN_GRID {
            return Err(Error::Precondition(format!("grid size {} below {}", self.n, operator::MIN_GRID)));
        }
        if !(self.h > 0.0) {
            return Err(Error::Precondition(format!("stencil step must be positive, got {}", self.h)));
        }
        if !(self.cg_tol > 0.0) || self.cg_max_iter == 0 {
            return Err(Error::Precondition("solver tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }
}

/// `c(φ)` from the norm form `φ_{tt̄} - |φ_{tz̄}|²/φ_{zz̄}` and from the
/// determinant form `det[[φ_{tt̄}, φ_{tz̄}], [φ_{zt̄}, φ_{zz̄}]] / φ_{zz̄}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CPhi {
    pub norm_form: f64,
    pub det_form: f64,
}

pub fn c_phi_from_jets(j: &PointJets) -> Result<CPhi> {
    if !(j.phi_zzb > 0.0) {
        return Err(Error::Precondition(format!("fiber metric not positive: phi_zzb = {}", j.phi_zzb)));
    }
    let norm_form = j.phi_ttb - j.phi_tzb.norm_sqr() / j.phi_zzb;
    let det = Complex64::new(j.phi_ttb * j.phi_zzb, 0.0) - j.phi_tzb * j.phi_ztb;
    Ok(CPhi { norm_form, det_form: det.re / j.phi_zzb })
}

pub fn c_phi(weight: &Weight, t: Complex64, a: f64, b: f64) -> Result<CPhi> {
    c_phi_from_jets(&weight.jets(t, a, b))
}

/// Per-point fiber data on the grid at one `t`.
#[derive(Clone, Debug, Default)]
pub struct FiberFieldData {
    pub t: Complex64,
    pub phi: Vec<f64>,
    pub phi_t: Vec<Complex64>,
    /// `ω^t = i∂∂̄_z φ` density.
    pub omega: Vec<f64>,
    /// `W = φ_{tz̄} / φ_{zz̄}`, the `∂/∂z` component of the complex gradient.
    pub w: Vec<Complex64>,
    pub dw_dzb: Vec<Complex64>,
    pub c: Vec<f64>,
    /// Holomorphic section values `û = Σ u_j θ_j`.
    pub u_hat: Vec<Complex64>,
    /// `η = -∂_z̄W · û`, coefficient of `dz̄` in the holomorphic frame.
    pub eta: Vec<Complex64>,
    /// `η e^{-φ/2}`, the unitary-gauge coefficient.
    pub eta_unitary: Vec<Complex64>,
    pub lemma41_residual_max: f64,
    pub det_identity_residual_max: f64,
}

/// Grid, theta values and weight for one configuration.
#[derive(Clone, Debug)]
pub struct Testbed {
    pub config: TorusTwistedConfig,
    pub weight: Weight,
    pub theta: ThetaBasis,
    /// `theta_values[p][j] = θ_j` at grid point `p`.
    pub theta_values: Vec<Vec<Complex64>>,
    pub exec: Execution,
}

impl Testbed {
    pub fn new(config: TorusTwistedConfig, exec: Execution) -> Result<Self> {
        config.validate()?;
        let weight = Weight::new(config.tau, config.k, config.psi.clone())?;
        let theta = ThetaBasis::new(config.tau, config.k, config.truncation)?;
        let theta_values = par::map_range(exec, config.n * config.n, |p| {
            let (a, b) = config.grid_point(p);
            theta.eval_all(a, b)
        });
        Ok(Self { config, weight, theta, theta_values, exec })
    }

    pub fn points(&self) -> usize {
        self.config.n * self.config.n
    }

    fn check_section(&self, u: &[Complex64]) -> Result<()> {
        if u.len() != self.theta.len() {
            return Err(Error::InvalidInput(format!(
                "section has {} coefficients, basis has {}",
                u.len(),
                self.theta.len()
            )));
        }
        Ok(())
    }

    /// `G_ij(t) = Σ θ_i θ̄_j e^{-φ(t)} dA`; fails if the fiber metric is
    /// not positive somewhere on the grid.
    pub fn gram(&self, t: Complex64) -> Result<CMat> {
        let cfg = &self.config;
        let samples = par::map_range(self.exec, self.points(), |p| {
            let (a, b) = cfg.grid_point(p);
            ((-self.weight.phi(t, a, b)).exp(), self.weight.phi_zzb(t, a, b))
        });
        if let Some(p) = samples.iter().position(|s| !(s.1 > 0.0)) {
            let (a, b) = cfg.grid_point(p);
            return Err(Error::Precondition(format!("fiber metric not positive at t = {t}, (a, b) = ({a}, {b})")));
        }
        let k = self.theta.len();
        let da = cfg.area_element();
        let mut g = CMat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                let v = &self.theta_values;
                g[(i, j)] = par::chunked_sum(self.exec, self.points(), |p| v[p][i] * v[p][j].conj() * samples[p].0) * da;
            }
        }
        Ok(g)
    }

    pub fn section_values(&self, u: &[Complex64]) -> Vec<Complex64> {
        self.theta_values.iter().map(|th| th.iter().zip(u).map(|(a, b)| a * b).sum()).collect()
    }

    /// `‖u‖²` at `t`.
    pub fn section_norm2(&self, u: &[Complex64], t: Complex64) -> Result<f64> {
        self.check_section(u)?;
        Ok(linalg::section_norm2(&self.gram(t)?, u))
    }

    /// `W`, `c(φ)` and `η` on the grid, with the pointwise identity residuals.
    pub fn fiber_field_data(&self, u: &[Complex64], t: Complex64) -> Result<FiberFieldData> {
        self.check_section(u)?;
        let cfg = &self.config;
        let u_hat = self.section_values(u);
        let jets = par::map_range(self.exec, self.points(), |p| {
            let (a, b) = cfg.grid_point(p);
            self.weight.jets(t, a, b)
        });
        let mut out = FiberFieldData { t, u_hat, ..Default::default() };
        for (p, j) in jets.iter().enumerate() {
            let cp = c_phi_from_jets(j).map_err(|e| {
                let (a, b) = cfg.grid_point(p);
                Error::Precondition(format!("{e} at (a, b) = ({a}, {b})"))
            })?;
            let g = j.phi_zzb;
            let w = j.phi_tzb / g;
            // δ_V ∂∂̄φ with V = ∂_t - W ∂_z has dt̄ part A - W C and dz̄ part B - W D.
            let lemma = (Complex64::new(j.phi_ttb - cp.norm_form, 0.0) - w * j.phi_ztb).norm()
                + (j.phi_tzb - w * g).norm();
            let dw = (j.phi_tzbzb * g - j.phi_tzb * j.phi_zzbzb) / (g * g);
            let eta = -dw * out.u_hat[p];
            out.lemma41_residual_max = out.lemma41_residual_max.max(lemma);
            out.det_identity_residual_max = out.det_identity_residual_max.max((cp.norm_form - cp.det_form).abs());
            out.phi.push(j.phi);
            out.phi_t.push(j.phi_t);
            out.omega.push(g);
            out.w.push(w);
            out.dw_dzb.push(dw);
            out.c.push(cp.norm_form);
            out.eta.push(eta);
            out.eta_unitary.push(eta * (-0.5 * j.phi).exp());
        }
        Ok(out)
    }

    /// `∫ c(φ)|û|²e^{-φ}` and `‖η‖² = ∫ |∂̄V|²_ω |û|²e^{-φ}`.
    pub fn rhs_integrals(&self, data: &FiberFieldData) -> (f64, f64) {
        let da = self.config.area_element();
        let term1 = par::chunked_sum(self.exec, self.points(), |p| {
            Complex64::new(data.c[p] * data.u_hat[p].norm_sqr() * (-data.phi[p]).exp(), 0.0)
        });
        let eta2 = par::chunked_sum(self.exec, self.points(), |p| Complex64::new(data.eta_unitary[p].norm_sqr(), 0.0));
        (term1.re * da, eta2.re * da)
    }

    pub fn operator(&self, t: Complex64) -> Result<BoxPrimeOperator> {
        BoxPrimeOperator::new(&self.weight, t, self.config.n, self.config.link_quad, self.exec)
    }

    pub fn solve(&self, op: &BoxPrimeOperator, eta_unitary: &[Complex64]) -> Result<BoxPrimeSolution> {
        box_prime_solve(op, eta_unitary, self.config.area_element(), self.config.cg_tol, self.config.cg_max_iter)
    }

    /// Finite-difference `⟨Θu, u⟩` at `t0` on the stencil of half-width `h`.
    pub fn curvature_plain(&self, u: &[Complex64], h: f64) -> Result<f64> {
        self.check_section(u)?;
        let offs = fd::stencil_offsets(h);
        let grams = (0..STENCIL_LEN).map(|k| self.gram(self.config.t0 + offs[k])).collect::<Result<Vec<_>>>()?;
        fd::dprime_curvature(&grams, h, u, self.config.scheme)
    }

    /// `[E(h), E(h/2)]` and the reported value.
    pub fn curvature(&self, u: &[Complex64]) -> Result<(f64, [f64; 2])> {
        let h = self.config.h;
        let coarse = self.curvature_plain(u, h)?;
        let fine = self.curvature_plain(u, h / 2.0)?;
        let value = if self.config.richardson { fd::richardson(coarse, fine) } else { coarse };
        Ok((value, [coarse, fine]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thm12Report {
    pub lhs: f64,
    pub lhs_plain: [f64; 2],
    pub rhs_term1: f64,
    pub rhs_term2: f64,
    pub rhs: f64,
    pub rel_err: f64,
    pub scale: f64,
    pub eta_norm2: f64,
    pub lemma41_residual_max: f64,
    pub det_identity_residual_max: f64,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    pub n: usize,
    pub h: f64,
    pub tol: f64,
    pub vanishing: bool,
    pub pass: bool,
}

pub fn relative_error(lhs: f64, rhs: f64, scale: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(VANISHING_TOL * scale)
}

/// Compares the finite-difference curvature with the right side of the
/// twisted identity at `t0`.
pub fn verify_thm_1_2(config: &TorusTwistedConfig, u: &[Complex64], exec: Execution) -> Result<Thm12Report> {
    let bed = Testbed::new(config.clone(), exec)?;
    thm_1_2_on(&bed, u)
}

pub fn thm_1_2_on(bed: &Testbed, u: &[Complex64]) -> Result<Thm12Report> {
    let cfg = &bed.config;
    let (lhs, lhs_plain) = bed.curvature(u)?;
    let data = bed.fiber_field_data(u, cfg.t0)?;
    let (term1, eta2) = bed.rhs_integrals(&data);
    let op = bed.operator(cfg.t0)?;
    let sol = bed.solve(&op, &data.eta_unitary)?;
    let scale = bed.section_norm2(u, cfg.t0)?;
    let rhs = term1 + sol.pairing;
    let rel_err = relative_error(lhs, rhs, scale);
    let vanishing = lhs.abs().max(rhs.abs()) <= VANISHING_TOL * scale;
    Ok(Thm12Report {
        lhs,
        lhs_plain,
        rhs_term1: term1,
        rhs_term2: sol.pairing,
        rhs,
        rel_err,
        scale,
        eta_norm2: eta2,
        lemma41_residual_max: data.lemma41_residual_max,
        det_identity_residual_max: data.det_identity_residual_max,
        cg_iterations: sol.iterations,
        cg_residual: sol.residual,
        n: cfg.n,
        h: cfg.h,
        tol: cfg.tol,
        vanishing,
        pass: rel_err <= cfg.tol || vanishing,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound15Report {
    pub lhs: f64,
    pub term1: f64,
    pub eta_norm2: f64,
    pub bound: f64,
    pub margin: f64,
    pub scale: f64,
    pub eta_vanishes: bool,
    pub slack: f64,
    pub pass: bool,
}

/// Checks `⟨Θu, u⟩ ≤ ∫ (c(φ) + |∂̄V|²)|u|²e^{-φ}` up to [`BOUND_SLACK`]; when
/// `η ≡ 0` the two sides must also agree to that slack.
pub fn verify_bound_1_5(config: &TorusTwistedConfig, u: &[Complex64], exec: Execution) -> Result<Bound15Report> {
    let bed = Testbed::new(config.clone(), exec)?;
    bound_1_5_on(&bed, u)
}

pub fn bound_1_5_on(bed: &Testbed, u: &[Complex64]) -> Result<Bound15Report> {
    let cfg = &bed.config;
    let (lhs, _) = bed.curvature(u)?;
    let data = bed.fiber_field_data(u, cfg.t0)?;
    let (term1, eta2) = bed.rhs_integrals(&data);
    let scale = bed.section_norm2(u, cfg.t0)?;
    let bound = term1 + eta2;
    let margin = bound - lhs;
    let peak = data.u_hat.iter().zip(&data.phi).map(|(v, f)| v.norm() * (-0.5 * f).exp()).fold(0.0, f64::max);
    let eta_vanishes = data.eta_unitary.iter().all(|e| e.norm() <= 1e-14 * peak);
    let slack = BOUND_SLACK * scale;
    let pass = margin >= -slack && (!eta_vanishes || margin.abs() <= slack);
    Ok(Bound15Report { lhs, term1, eta_norm2: eta2, bound, margin, scale, eta_vanishes, slack, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// One row per `(n, h)` level.
pub fn convergence_table(
    config: &TorusTwistedConfig,
    u: &[Complex64],
    levels: &[(usize, f64)],
    exec: Execution,
) -> Result<Vec<ConvergenceRow>> {
    levels
        .iter()
        .map(|&(n, h)| {
            let r = verify_thm_1_2(&config.clone().with_grid(n).with_h(h), u, exec)?;
            Ok(ConvergenceRow { n, h, lhs: r.lhs, rhs: r.rhs, rel_err: r.rel_err })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn c_phi_closed_forms() {
        let tau = c(0.0, 1.0);
        let w = Weight::new(tau, 1, TorusTwistedConfig::psi_norm_squared()).unwrap();
        let v = c_phi(&w, c(0.1, 0.2), 0.3, 0.4).unwrap();
        assert!((v.norm_form - 1.0).abs() < 1e-15);
        let w = Weight::new(tau, 1, TorusTwistedConfig::psi_harmonic(c(0.3, -0.2))).unwrap();
        assert_eq!(c_phi(&w, c(0.1, 0.2), 0.3, 0.4).unwrap().norm_form, 0.0);
    }

    #[test]
    fn cosine_weight_determinant_identity() {
        // |t|² cos 2πa
        let psi = vec![FourierTerm { m: [1, 0], poly: vec![TMonomial { coeff: c(1.0, 0.0), p: 1, q: 1 }] }];
        let cfg = TorusTwistedConfig::new(c(0.15, 1.1), 2, psi).with_grid(16);
        let bed = Testbed::new(cfg, Execution::Sequential).unwrap();
        let data = bed.fiber_field_data(&[c(1.0, 0.0), c(0.0, 0.0)], c(0.2, 0.1)).unwrap();
        assert!(data.det_identity_residual_max <= 1e-12);
        assert!(data.lemma41_residual_max <= 1e-10);
    }

    #[test]
    fn non_positive_metric_is_rejected() {
        let psi = vec![FourierTerm { m: [1, 0], poly: vec![TMonomial { coeff: c(5.0, 0.0), p: 0, q: 0 }] }];
        let cfg = TorusTwistedConfig::new(c(0.0, 1.0), 1, psi).with_grid(8);
        let bed = Testbed::new(cfg, Execution::Sequential).unwrap();
        assert!(matches!(bed.gram(c(0.0, 0.0)), Err(Error::Precondition(_))));
        assert!(bed.fiber_field_data(&[c(1.0, 0.0)], c(0.0, 0.0)).is_err());
    }

    #[test]
    fn z_independent_weight_has_no_eta() {
        let cfg = TorusTwistedConfig::new(c(0.0, 1.0), 1, TorusTwistedConfig::psi_harmonic(c(0.5, 0.5))).with_grid(8);
        let bed = Testbed::new(cfg, Execution::Sequential).unwrap();
        let data = bed.fiber_field_data(&[c(1.0, 0.0)], c(0.0, 0.0)).unwrap();
        assert!(data.w.iter().all(|w| w.norm() == 0.0));
        assert!(data.eta.iter().all(|e| e.norm() == 0.0));
        let zero = bed.fiber_field_data(&[c(0.0, 0.0)], c(0.0, 0.0)).unwrap();
        assert!(zero.eta.iter().all(|e| e.norm() == 0.0));
    }

    #[test]
    fn theta_gram_is_positive() {
        let cfg = TorusTwistedConfig::new(c(0.15, 1.1), 3, vec![]).with_grid(32);
        let bed = Testbed::new(cfg, Execution::Sequential).unwrap();
        let ev = linalg::hermitian_eigenvalues(&bed.gram(c(0.0, 0.0)).unwrap());
        assert!(ev[0] > 0.0, "{ev:?}");
    }
}
