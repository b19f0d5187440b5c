//! Curvature of the L² metric on `H^0(K)` over families `y^2 = f0 + t g`.
//!
//! Two independent routes to the same number:
//!
//! * the Chern curvature `⟨Θu, u⟩ = -∂_t∂_t̄ ‖ũ_t‖²` of a section `ũ` with
//!   vanishing `(1,0)` covariant derivative at the base point, from finite
//!   differences of period-derived Gram matrices;
//! * the squared norm of the Kodaira–Spencer action, read off the
//!   `(0,1)`-part of `∂_t` of the flat periods of `u`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::{self, LaplaceScheme, STENCIL_LEN};
use crate::linalg::{self, c, CMat};
use crate::par::{self, Execution};
use crate::periods::{self, HomologyBasis, HyperellipticCurve, PeriodData};
use crate::poly::ComplexPoly;

/// Root matching needs the nearest candidate to beat the runner-up by this factor.
pub const MATCH_MARGIN: f64 = 3.0;

/// Largest acceptable condition number of `G(t0)`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveFamily {
    pub f0: ComplexPoly,
    pub g_pert: ComplexPoly,
    pub radius: f64,
    pub t0: Complex64,
}

impl CurveFamily {
    pub fn new(f0: ComplexPoly, g_pert: ComplexPoly, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
        }
        if g_pert.degree() > f0.degree() && !g_pert.is_zero() {
            return Err(Error::InvalidInput("perturbation raises the degree".into()));
        }
        if !g_pert.is_zero() && g_pert.degree() == f0.degree() {
            let lead_shift = g_pert.leading().norm() * radius;
            if lead_shift >= f0.leading().norm() {
                return Err(Error::InvalidInput("leading coefficient can vanish on the disk".into()));
            }
        }
        Ok(Self {
            f0,
            g_pert,
            radius,
            t0: Complex64::new(0.0, 0.0),
        })
    }

    pub fn with_base_point(mut self, t0: Complex64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn fiber_poly(&self, t: Complex64) -> ComplexPoly {
        self.f0.add_scaled(t, &self.g_pert)
    }

    pub fn genus(&self) -> usize {
        (self.f0.degree().max(1) - 1) / 2
    }

    /// Default stencil width `1e-2 · radius`.
    pub fn default_h(&self) -> f64 {
        1e-2 * self.radius
    }
}

#[derive(Clone, Debug)]
pub struct FamilyOptions {
    pub quad_order: usize,
    pub exec: Execution,
    pub scheme: LaplaceScheme,
    pub richardson: bool,
    /// Optional `S' ∈ Sp(2g, ℤ)` applied to the frame at every stencil point.
    pub frame_change: Option<Vec<Vec<i64>>>,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        Self {
            quad_order: periods::DEFAULT_QUAD_ORDER,
            exec: Execution::default(),
            scheme: LaplaceScheme::default(),
            richardson: true,
            frame_change: None,
        }
    }
}

/// Period data on the 9-point stencil, all in the base point's frame.
#[derive(Clone, Debug)]
pub struct GramStencil {
    pub h: f64,
    pub t0: Complex64,
    pub offsets: [Complex64; STENCIL_LEN],
    pub data: Vec<PeriodData>,
}

impl GramStencil {
    pub fn center(&self) -> &PeriodData {
        &self.data[0]
    }

    pub fn grams(&self) -> Vec<CMat> {
        self.data.iter().map(|d| d.gram.clone()).collect()
    }
}

/// Assigns each reference root its nearest neighbour among `roots`,
/// refusing ambiguous or non-injective matches.
pub fn match_roots(reference: &[Complex64], roots: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut used = vec![false; roots.len()];
    let mut out = Vec::with_capacity(reference.len());
    for (i, &r) in reference.iter().enumerate() {
        let mut d: Vec<(f64, usize)> = roots.iter().enumerate().map(|(k, &x)| ((x - r).norm(), k)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (best, k) = d[0];
        let runner = d.get(1).map_or(f64::INFINITY, |x| x.0);
        if runner < MATCH_MARGIN * best || used[k] {
            return Err(Error::StencilTooCoarse(format!(
                "branch point {i} moved {best:.3e}, next candidate at {runner:.3e}; use a smaller h"
            )));
        }
        used[k] = true;
        out.push(roots[k]);
    }
    Ok(out)
}

fn fiber_data(
    family: &CurveFamily,
    t: Complex64,
    center_roots: &[Complex64],
    center_loops: &CMat,
    homology: &HomologyBasis,
    quad_order: usize,
    exec: Execution,
) -> Result<PeriodData> {
    let poly = family.fiber_poly(t);
    let g = homology.genus;
    if poly.degree() != family.f0.degree() {
        return Err(Error::InvalidInput(format!("fiber degree drops at t = {t}")));
    }
    let roots = match periods::branch_points(&poly) {
        Ok(r) => r,
        Err(Error::DegenerateCurve(msg)) => {
            return Err(Error::StencilTooCoarse(format!("fiber at t = {t} is singular: {msg}")))
        }
        Err(e) => return Err(e),
    };
    let matched = match_roots(center_roots, &roots)?;
    periods::check_admissible(&matched, g)?;
    let mut p = periods::loop_periods(&matched, poly.leading(), g, quad_order, exec)?;
    let mut signs = vec![1i64; 2 * g];
    for j in 0..2 * g {
        let reference = center_loops.column(j);
        let overlap: Complex64 = reference.iter().zip(p.column(j).iter()).map(|(a, b)| a.conj() * b).sum();
        let scale = reference.norm() * p.column(j).norm();
        if overlap.re.abs() < 0.5 * scale {
            return Err(Error::StencilTooCoarse(format!("loop {j} period jumps at t = {t}")));
        }
        if overlap.re < 0.0 {
            p.column_mut(j).neg_mut();
            signs[j] = -1;
        }
    }
    // Loops re-oriented to follow the base point must meet as they did there.
    let raw = periods::raw_intersections(&matched, g)?;
    let consistent = (0..2 * g).all(|i| (0..2 * g).all(|j| signs[i] * signs[j] * raw[i][j] == homology.raw_intersection[i][j]));
    if !consistent {
        return Err(Error::StencilTooCoarse(format!("intersection pattern changes at t = {t}")));
    }
    PeriodData::assemble(quad_order, matched, homology.clone(), p)
}

/// Validated period data at the 9 stencil points around `family.t0`, with
/// loops transported continuously from the base point.
pub fn gram_stencil(family: &CurveFamily, h: f64, opts: &FamilyOptions) -> Result<GramStencil> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("stencil width must be positive, got {h}")));
    }
    let center_curve = HyperellipticCurve::new(family.fiber_poly(family.t0))?;
    let mut center = periods::compute_period_data(&center_curve, opts.quad_order, opts.exec)?;
    if let Some(s) = &opts.frame_change {
        center = center.change_frame(s)?;
    }
    let offsets = fd::stencil_offsets(h);
    let rest = par::map_slice(opts.exec, &offsets[1..], |&d| {
        fiber_data(
            family,
            family.t0 + d,
            &center.roots,
            &center.loop_periods,
            &center.homology,
            opts.quad_order,
            opts.exec,
        )
    });
    let mut data = vec![center];
    for r in rest {
        data.push(r?);
    }
    Ok(GramStencil {
        h,
        t0: family.t0,
        offsets,
        data,
    })
}

/// Section coefficients `u_i` of `Σ u_i z^{i-1} dz / y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionSpec {
    pub u: Vec<Complex64>,
}

impl SectionSpec {
    pub fn new(u: Vec<Complex64>) -> Result<Self> {
        if u.iter().all(|x| x.norm() == 0.0) {
            return Err(Error::InvalidInput("section must be nonzero".into()));
        }
        Ok(Self { u })
    }
}

fn check_section(st: &GramStencil, u: &[Complex64]) -> Result<()> {
    let g = st.center().genus;
    if u.len() != g {
        return Err(Error::InvalidInput(format!("section has {} coefficients, genus is {g}", u.len())));
    }
    Ok(())
}

/// `⟨Θu, u⟩` at the centre of one stencil (no extrapolation).
pub fn curvature_from_stencil(st: &GramStencil, u: &[Complex64], scheme: LaplaceScheme) -> Result<f64> {
    check_section(st, u)?;
    let g0 = &st.center().gram;
    let cond = linalg::hpd_condition(g0);
    if cond > MAX_CONDITION {
        return Err(Error::Conditioning(cond));
    }
    fd::dprime_curvature(&st.grams(), st.h, u, scheme)
}

/// Kodaira–Spencer data from one stencil: the `(0,1)` coefficients `y` of
/// `∂_t` of the flat periods of `u`, and the harmonic norm of that class.
pub fn ks_from_stencil(st: &GramStencil, u: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
    check_section(st, u)?;
    let g = u.len();
    let row = linalg::row_vector(u);
    let flat: Vec<CMat> = st.data.iter().map(|d| &row * &d.pi).collect();
    let dpi = fd::d_dt(&flat, st.h);
    let pi0 = &st.center().pi;
    let mut m = CMat::zeros(2 * g, 2 * g);
    m.rows_mut(0, g).copy_from(pi0);
    m.rows_mut(g, g).copy_from(&pi0.map(|z| z.conj()));
    let xy = linalg::solve(&m.transpose(), &dpi.transpose())?;
    let y: Vec<Complex64> = (0..g).map(|i| xy[(g + i, 0)]).collect();
    let alpha_periods: Vec<Complex64> = (&linalg::row_vector(&y) * pi0.map(|z| z.conj())).iter().copied().collect();
    let p = periods::pairings_from_periods(&alpha_periods, pi0)?;
    let norm2 = periods::harmonic_01_norm(&p, &st.center().gram)?;
    Ok((y, norm2))
}

/// `⟨Θu, u⟩` with the configured extrapolation.
pub fn curvature_pairing(family: &CurveFamily, u: &SectionSpec, h: f64, opts: &FamilyOptions) -> Result<f64> {
    let coarse = gram_stencil(family, h, opts)?;
    let th = curvature_from_stencil(&coarse, &u.u, opts.scheme)?;
    if !opts.richardson {
        return Ok(th);
    }
    let fine = gram_stencil(family, h / 2.0, opts)?;
    Ok(fd::richardson(th, curvature_from_stencil(&fine, &u.u, opts.scheme)?))
}

/// `(ks_vector, ‖𝒦·u‖²)` with the configured extrapolation of the norm.
pub fn ks_action(family: &CurveFamily, u: &SectionSpec, h: f64, opts: &FamilyOptions) -> Result<(Vec<Complex64>, f64)> {
    let coarse = gram_stencil(family, h, opts)?;
    let (y, n) = ks_from_stencil(&coarse, &u.u)?;
    if !opts.richardson {
        return Ok((y, n));
    }
    let fine = gram_stencil(family, h / 2.0, opts)?;
    let (y2, n2) = ks_from_stencil(&fine, &u.u)?;
    let y_ex = y.iter().zip(&y2).map(|(a, b)| (b * 4.0 - a) / 3.0).collect();
    Ok((y_ex, fd::richardson(n, n2)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub theta_uu: f64,
    pub ks_vector: Vec<Complex64>,
    pub ks_norm2: f64,
    pub rel_err: f64,
    pub h: f64,
    pub richardson: bool,
    /// `‖u‖²` at the base point.
    pub scale: f64,
    /// Plain estimates at `h` and `h/2`.
    pub theta_plain: [f64; 2],
    pub ks_plain: [f64; 2],
    /// `|θ - ks|` at `h` over the same at `h/2` (plain estimates).
    pub contraction: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Relative threshold below which both sides count as zero.
pub const VANISHING_TOL: f64 = 1e-6;

pub fn relative_error(theta: f64, ks: f64, scale: f64) -> f64 {
    (theta - ks).abs() / theta.abs().max(ks).max(VANISHING_TOL * scale)
}

/// Compares the two sides of the curvature identity at `family.t0`.
pub fn verify_thm_1_1(family: &CurveFamily, u: &SectionSpec, h: f64, tol: f64, opts: &FamilyOptions) -> Result<CurvatureReport> {
    let coarse = gram_stencil(family, h, opts)?;
    let fine = gram_stencil(family, h / 2.0, opts)?;
    let th = [
        curvature_from_stencil(&coarse, &u.u, opts.scheme)?,
        curvature_from_stencil(&fine, &u.u, opts.scheme)?,
    ];
    let (y1, k1) = ks_from_stencil(&coarse, &u.u)?;
    let (y2, k2) = ks_from_stencil(&fine, &u.u)?;
    let (theta, ks, y) = if opts.richardson {
        (
            fd::richardson(th[0], th[1]),
            fd::richardson(k1, k2),
            y1.iter().zip(&y2).map(|(a, b)| (b * 4.0 - a) / 3.0).collect(),
        )
    } else {
        (th[0], k1, y1)
    };
    let scale = linalg::section_norm2(&coarse.center().gram, &u.u);
    let rel_err = relative_error(theta, ks, scale);
    let e1 = (th[0] - k1).abs();
    let e2 = (th[1] - k2).abs();
    let contraction = if e2 > 0.0 { e1 / e2 } else { f64::INFINITY };
    let vanishing = theta.abs().max(ks) <= VANISHING_TOL * scale;
    Ok(CurvatureReport {
        theta_uu: theta,
        ks_vector: y,
        ks_norm2: ks,
        rel_err,
        h,
        richardson: opts.richardson,
        scale,
        theta_plain: th,
        ks_plain: [k1, k2],
        contraction,
        tol,
        pass: rel_err <= tol || vanishing,
    })
}

/// Kodaira–Spencer functional of the direction `g` on the even quadratic
/// differentials `z^a dz^2 / y^2`, up to a constant: `Σ_k g(e_k) e_k^a / f'(e_k)^2`.
pub fn rauch_functional(f0: &ComplexPoly, g_pert: &ComplexPoly, genus: usize) -> Result<Vec<Complex64>> {
    let roots = periods::branch_points(f0)?;
    let df = f0.derivative();
    Ok((0..2 * genus - 1)
        .map(|a| {
            roots
                .iter()
                .map(|&e| g_pert.eval(e) * e.powu(a as u32) / df.eval(e).powu(2))
                .sum()
        })
        .collect())
}

/// Minimum-norm direction `g` (degree `< deg f0`) whose functional equals `target`.
pub fn direction_for_functional(f0: &ComplexPoly, genus: usize, target: &[Complex64]) -> Result<ComplexPoly> {
    if target.len() != 2 * genus - 1 {
        return Err(Error::InvalidInput("target functional must have 2g-1 entries".into()));
    }
    let roots = periods::branch_points(f0)?;
    let df = f0.derivative();
    let d = f0.degree();
    let m = CMat::from_fn(2 * genus - 1, d, |a, p| {
        roots
            .iter()
            .map(|&e| e.powu((a + p) as u32) / df.eval(e).powu(2))
            .sum()
    });
    let b = CMat::from_column_slice(target.len(), 1, target);
    let x = m
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Internal(format!("least squares failed: {e}")))?;
    Ok(ComplexPoly::new(x.iter().copied().collect()))
}

/// Random fiber polynomial with branch points near `0, 1, …, d-1`:
/// `x_k = k + U(-0.3, 0.3)`, `y_k = U(-1, 1)`.
pub fn random_f0<R: Rng + ?Sized>(degree: usize, rng: &mut R) -> ComplexPoly {
    let roots: Vec<Complex64> = (0..degree)
        .map(|k| c(k as f64 + rng.random_range(-0.3..0.3), rng.random_range(-1.0..1.0)))
        .collect();
    ComplexPoly::from_roots(&roots)
}

/// Random perturbation of degree `< deg f0`, rescaled so that the fastest
/// branch point moves with speed `|g(e)/f0'(e)| = 1/2`.
pub fn random_g<R: Rng + ?Sized>(f0: &ComplexPoly, rng: &mut R) -> Result<ComplexPoly> {
    let d = f0.degree();
    let raw = ComplexPoly::new(
        (0..d)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect(),
    );
    let df = f0.derivative();
    let speed = periods::branch_points(f0)?
        .iter()
        .map(|&e| (raw.eval(e) / df.eval(e)).norm())
        .fold(0.0, f64::max);
    if speed == 0.0 {
        return Ok(raw);
    }
    Ok(ComplexPoly::new(raw.coeffs().iter().map(|&x| x * (0.5 / speed)).collect()))
}

pub fn random_section<R: Rng + ?Sized>(genus: usize, rng: &mut R) -> SectionSpec {
    SectionSpec {
        u: (0..genus)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub family: usize,
    pub section: usize,
    pub genus: usize,
    pub theta_uu: f64,
    pub scale: f64,
}

impl SweepEntry {
    pub fn normalized(&self) -> f64 {
        self.theta_uu / self.scale
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    /// Extremes and median of `⟨Θu,u⟩ / ‖u‖²`.
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub pos_tol: f64,
    pub pass: bool,
}

/// `⟨Θu,u⟩` for every family and section; passes iff every value is
/// `≥ -pos_tol · ‖u‖²`.
pub fn positivity_sweep(
    families: &[(CurveFamily, Vec<SectionSpec>)],
    h_rel: f64,
    pos_tol: f64,
    opts: &FamilyOptions,
) -> Result<SweepReport> {
    let per_family = par::map_slice(opts.exec, families, |(fam, sections)| -> Result<Vec<SweepEntry>> {
        let h = h_rel * fam.radius;
        let coarse = gram_stencil(fam, h, opts)?;
        let fine = if opts.richardson { Some(gram_stencil(fam, h / 2.0, opts)?) } else { None };
        sections
            .iter()
            .enumerate()
            .map(|(si, s)| {
                let t1 = curvature_from_stencil(&coarse, &s.u, opts.scheme)?;
                let theta = match &fine {
                    Some(f) => fd::richardson(t1, curvature_from_stencil(f, &s.u, opts.scheme)?),
                    None => t1,
                };
                Ok(SweepEntry {
                    family: 0,
                    section: si,
                    genus: fam.genus(),
                    theta_uu: theta,
                    scale: linalg::section_norm2(&coarse.center().gram, &s.u),
                })
            })
            .collect()
    });
    let mut entries = Vec::new();
    for (fi, r) in per_family.into_iter().enumerate() {
        for mut e in r? {
            e.family = fi;
            entries.push(e);
        }
    }
    if entries.is_empty() {
        return Err(Error::InvalidInput("empty sweep".into()));
    }
    let mut norm: Vec<f64> = entries.iter().map(SweepEntry::normalized).collect();
    norm.sort_by(f64::total_cmp);
    let n = norm.len();
    let median = if n % 2 == 1 { norm[n / 2] } else { 0.5 * (norm[n / 2 - 1] + norm[n / 2]) };
    Ok(SweepReport {
        min: norm[0],
        median,
        max: norm[n - 1],
        pass: norm[0] >= -pos_tol,
        pos_tol,
        entries,
    })
}

/// Seeded sweep corpus: `count` random families alternating genus 2 and 3
/// (odd and even degree), plus one trivial family, with `sections` random
/// sections each.
pub fn random_sweep_corpus<R: Rng + ?Sized>(count: usize, sections: usize, rng: &mut R) -> Result<Vec<(CurveFamily, Vec<SectionSpec>)>> {
    let mut out = Vec::with_capacity(count + 1);
    for i in 0..count {
        let genus = 2 + i % 2;
        let degree = 2 * genus + 1 + (i / 2) % 2;
        let f0 = random_f0(degree, rng);
        let g = random_g(&f0, rng)?;
        let fam = CurveFamily::new(f0, g, 1.0)?;
        let secs = (0..sections).map(|_| random_section(genus, rng)).collect();
        out.push((fam, secs));
    }
    let f0 = random_f0(5, rng);
    let trivial = CurveFamily::new(f0, ComplexPoly::new(vec![c(0.0, 0.0)]), 1.0)?;
    out.push((trivial, (0..sections).map(|_| random_section(2, rng)).collect()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc(coeffs: &[f64]) -> ComplexPoly {
        ComplexPoly::from_descending(&coeffs.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())
    }

    #[test]
    fn trivial_family_has_constant_gram() {
        let fam = CurveFamily::new(desc(&[1.0, 0.0, 0.0, 0.0, 0.0, -1.0]), desc(&[0.0]), 1.0).unwrap();
        let st = gram_stencil(&fam, 1e-2, &FamilyOptions::default()).unwrap();
        for d in &st.data {
            assert!(linalg::max_abs(&(&d.gram - &st.center().gram)) < 1e-10);
        }
    }

    #[test]
    fn nearest_neighbour_matching() {
        let a = [c(0.0, 0.0), c(1.0, 0.0)];
        let b = [c(1.01, 0.0), c(0.01, 0.0)];
        assert_eq!(match_roots(&a, &b).unwrap(), vec![b[1], b[0]]);
        let far = [c(0.6, 0.0), c(0.4, 0.0)];
        assert!(matches!(match_roots(&a, &far), Err(Error::StencilTooCoarse(_))));
    }

    #[test]
    fn coarse_stencil_is_detected() {
        let fam = CurveFamily::new(desc(&[1.0, 0.0, 0.0, 0.0, 0.0, -1.0]), desc(&[1.0, 0.0]), 1.0).unwrap();
        let err = gram_stencil(&fam, 0.9, &FamilyOptions::default()).unwrap_err();
        assert!(matches!(err, Error::StencilTooCoarse(_)), "{err}");
    }

    #[test]
    fn rauch_direction_reproduces_target() {
        let f0 = desc(&[1.0, 0.1, -2.0, 0.0, 1.0, -0.7]);
        let target = [c(0.25, 0.0), c(-0.5, 0.0), c(1.0, 0.0)];
        let g = direction_for_functional(&f0, 2, &target).unwrap();
        let mu = rauch_functional(&f0, &g, 2).unwrap();
        for (a, b) in mu.iter().zip(&target) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}
