//! Periods, intersection form and L² Gram matrices of hyperelliptic curves.
//!
//! Branch points `e_1, …, e_d` are sorted by real part, then imaginary
//! part. Loop `j` (for `j = 1..2g`) encircles the segment `[e_j, e_{j+1}]`,
//! and its period is twice the segment integral of `z^{i-1} dz / y`. The
//! segment integral is computed with Gauss–Chebyshev nodes, which absorb
//! the two inverse square roots at the endpoints; the remaining factor
//! `sqrt(h)` with `h = f / ((z - e_j)(z - e_{j+1}))` is evaluated as a
//! product of principal square roots of ratios that stay off the negative
//! axis as long as no other branch point lies on the segment.
//!
//! The raw intersection form of the chain of loops is tridiagonal with
//! entries `±1`; an integer symplectic reduction turns it into the
//! standard form `J = [[0, I], [-I, 0]]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, I};
use crate::par::{self, Execution};
use crate::poly::ComplexPoly;

/// Minimum Gauss–Chebyshev order accepted by [`loop_periods`].
pub const MIN_QUAD_ORDER: usize = 16;

/// Default Gauss–Chebyshev order.
pub const DEFAULT_QUAD_ORDER: usize = 128;

/// Relative distance to a branch point below which the square-root branch
/// is considered lost.
pub const TRACK_TOL: f64 = 1e-12;

/// Relative tolerance on `‖Π J Πᵀ‖ / ‖Π‖²`.
pub const RIEMANN_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct HyperellipticCurve {
    poly: ComplexPoly,
    roots: Vec<Complex64>,
    genus: usize,
}

impl HyperellipticCurve {
    /// `y^2 = f(z)` with `deg f >= 3` and simple roots.
    pub fn new(poly: ComplexPoly) -> Result<Self> {
        let roots = branch_points(&poly)?;
        Self::with_roots(poly, roots)
    }

    /// Uses the given root order (e.g. roots matched to a reference fiber).
    pub fn with_roots(poly: ComplexPoly, roots: Vec<Complex64>) -> Result<Self> {
        let d = poly.degree();
        if d < 3 {
            return Err(Error::InvalidInput(format!("degree {d} < 3 does not define a curve of genus >= 1")));
        }
        if roots.len() != d {
            return Err(Error::InvalidInput(format!("{} roots for a degree {d} polynomial", roots.len())));
        }
        Ok(Self {
            genus: (d - 1) / 2,
            poly,
            roots,
        })
    }

    pub fn poly(&self) -> &ComplexPoly {
        &self.poly
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn leading(&self) -> Complex64 {
        self.poly.leading()
    }
}

/// Sorted simple roots of `f`.
pub fn branch_points(f: &ComplexPoly) -> Result<Vec<Complex64>> {
    if f.degree() < 3 {
        return Err(Error::InvalidInput(format!("degree {} < 3", f.degree())));
    }
    f.simple_roots()
}

#[derive(Clone, Debug)]
struct Segment {
    m: Complex64,
    r: Complex64,
    others: Vec<Complex64>,
    /// `sqrt(lead) · ∏ sqrt(m - e_k)`.
    base: Complex64,
}

impl Segment {
    fn new(roots: &[Complex64], j: usize, lead: Complex64) -> Self {
        let (a, b) = (roots[j], roots[j + 1]);
        let m = (a + b) * 0.5;
        let others: Vec<Complex64> = roots
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j && k != j + 1)
            .map(|(_, &e)| e)
            .collect();
        let base = others.iter().fold(lead.sqrt(), |acc, &e| acc * (m - e).sqrt());
        Self {
            m,
            r: (b - a) * 0.5,
            others,
            base,
        }
    }

    fn point(&self, x: f64) -> Complex64 {
        self.m + self.r * x
    }

    /// Continuous branch of `sqrt(h(m + r x))` on `x ∈ [-1, 1]`.
    fn sqrt_h(&self, x: f64) -> Complex64 {
        let z = self.point(x);
        self.others
            .iter()
            .fold(self.base, |acc, &e| acc * ((z - e) / (self.m - e)).sqrt())
    }

    /// Unit-free tangent of the lifted loop at the start (`x = -1`) or end
    /// (`x = 1`) of the segment.
    fn end_tangent(&self, x: f64) -> Complex64 {
        I * self.r * (2.0 / self.r.norm()).sqrt() * self.sqrt_h(x)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyBasis {
    pub genus: usize,
    /// Loop `j` encircles branch points `(j, j+1)` (0-based).
    pub loop_pairs: Vec<(usize, usize)>,
    pub raw_intersection: Vec<Vec<i64>>,
    /// Rows `a_1..a_g, b_1..b_g` in terms of the loops.
    pub symplectic_transform: Vec<Vec<i64>>,
}

impl HomologyBasis {
    pub fn s_matrix(&self) -> CMat {
        int_to_cmat(&self.symplectic_transform)
    }
}

fn int_to_cmat(m: &[Vec<i64>]) -> CMat {
    let n = m.len();
    let k = m.first().map_or(0, Vec::len);
    CMat::from_fn(n, k, |i, j| c(m[i][j] as f64, 0.0))
}

fn int_matmul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    let k = b.len();
    let m = b.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

fn int_transpose(a: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    let m = a.first().map_or(0, Vec::len);
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

/// Standard symplectic form as integers.
pub fn standard_j_int(g: usize) -> Vec<Vec<i64>> {
    let mut j = vec![vec![0i64; 2 * g]; 2 * g];
    for k in 0..g {
        j[k][g + k] = 1;
        j[g + k][k] = -1;
    }
    j
}

/// `S K Sᵀ == J`.
pub fn is_symplectic_for(s: &[Vec<i64>], k: &[Vec<i64>]) -> bool {
    let g = s.len() / 2;
    int_matmul(&int_matmul(s, k), &int_transpose(s)) == standard_j_int(g)
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn dot(a: Complex64, b: Complex64) -> f64 {
    a.re * b.re + a.im * b.im
}

fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let t = (dot(p - a, ab) / ab.norm_sqr()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn segments_cross(a: Complex64, b: Complex64, p: Complex64, q: Complex64, tol: f64) -> bool {
    let d1 = cross(b - a, p - a);
    let d2 = cross(b - a, q - a);
    let d3 = cross(q - p, a - p);
    let d4 = cross(q - p, b - p);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    point_segment_distance(p, a, b) < tol
        || point_segment_distance(q, a, b) < tol
        || point_segment_distance(a, p, q) < tol
        || point_segment_distance(b, p, q) < tol
}

/// Geometric admissibility of the chain of segments `[e_j, e_{j+1}]`,
/// `j < 2g`, used both as loops and as branch-tracking paths.
pub fn check_admissible(roots: &[Complex64], genus: usize) -> Result<()> {
    let n = 2 * genus;
    if roots.len() < n + 1 {
        return Err(Error::InvalidInput("too few branch points".into()));
    }
    for w in roots.windows(2) {
        if w[0].re == w[1].re && w[0].im == w[1].im {
            return Err(Error::UnsupportedConfiguration(format!(
                "ambiguous ordering: repeated branch point {}",
                crate::poly::fmt_c(w[0])
            )));
        }
    }
    let spread = roots
        .iter()
        .flat_map(|a| roots.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);
    let tol = 1e-9 * spread;
    for j in 0..n {
        let (a, b) = (roots[j], roots[j + 1]);
        for (k, &e) in roots.iter().enumerate() {
            if k != j && k != j + 1 && point_segment_distance(e, a, b) < tol {
                return Err(Error::UnsupportedConfiguration(format!(
                    "branch point {k} lies on cut [{j}, {}]",
                    j + 1
                )));
            }
        }
        for l in j + 1..n {
            let (p, q) = (roots[l], roots[l + 1]);
            if l == j + 1 {
                // Shared endpoint b == p: the two segments must not fold back.
                if cross(a - b, q - b).abs() <= tol * (a - b).norm().max(tol) && dot(a - b, q - b) > 0.0 {
                    return Err(Error::UnsupportedConfiguration(format!("cuts {j} and {l} overlap")));
                }
            } else if segments_cross(a, b, p, q, tol) {
                return Err(Error::UnsupportedConfiguration(format!("cuts {j} and {l} cross")));
            }
        }
    }
    Ok(())
}

/// Intersection numbers of the chain of loops. Adjacent loops meet once
/// near their shared branch point; the sign is read off the tangents of the
/// lifted loops there.
pub fn raw_intersections(roots: &[Complex64], genus: usize) -> Result<Vec<Vec<i64>>> {
    let n = 2 * genus;
    let segs: Vec<Segment> = (0..n).map(|j| Segment::new(roots, j, c(1.0, 0.0))).collect();
    let mut k = vec![vec![0i64; n]; n];
    for j in 0..n - 1 {
        let lin = segs[j].end_tangent(1.0);
        let lout = segs[j + 1].end_tangent(-1.0);
        let im = (lin.conj() * lout).im;
        if im.abs() <= 1e-8 * lin.norm() * lout.norm() {
            return Err(Error::UnsupportedConfiguration(format!(
                "loops {j} and {} meet tangentially",
                j + 1
            )));
        }
        let s = if im > 0.0 { -1 } else { 1 };
        k[j][j + 1] = s;
        k[j + 1][j] = -s;
    }
    Ok(k)
}

fn pair(k: &[Vec<i64>], x: &[i64], y: &[i64]) -> i64 {
    let mut acc = 0;
    for (i, xi) in x.iter().enumerate() {
        if *xi == 0 {
            continue;
        }
        for (j, yj) in y.iter().enumerate() {
            acc += xi * k[i][j] * yj;
        }
    }
    acc
}

/// Symplectic Gram–Schmidt over ℤ for a unimodular antisymmetric form.
pub fn symplectic_reduction(k: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    let n = k.len();
    if n % 2 != 0 {
        return Err(Error::Internal("odd-dimensional intersection form".into()));
    }
    let mut pool: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect();
    let (mut a_rows, mut b_rows) = (Vec::new(), Vec::new());
    while !pool.is_empty() {
        let e = pool.remove(0);
        let f_idx = loop {
            let nonzero: Vec<usize> = (0..pool.len()).filter(|&i| pair(k, &e, &pool[i]) != 0).collect();
            let Some(&pivot) = nonzero.iter().min_by_key(|&&i| pair(k, &e, &pool[i]).abs()) else {
                return Err(Error::Internal("intersection form is degenerate".into()));
            };
            if nonzero.len() == 1 {
                break pivot;
            }
            let pp = pair(k, &e, &pool[pivot]);
            for &i in &nonzero {
                if i == pivot {
                    continue;
                }
                let q = Integer::div_floor(&pair(k, &e, &pool[i]), &pp);
                let pv = pool[pivot].clone();
                for (x, y) in pool[i].iter_mut().zip(&pv) {
                    *x -= q * y;
                }
            }
        };
        let mut f = pool.remove(f_idx);
        let ef = pair(k, &e, &f);
        if ef.abs() != 1 {
            return Err(Error::Internal(format!("intersection form is not unimodular (pairing {ef})")));
        }
        if ef < 0 {
            f.iter_mut().for_each(|x| *x = -*x);
        }
        for v in pool.iter_mut() {
            let vf = pair(k, v, &f);
            let ve = pair(k, v, &e);
            for i in 0..n {
                v[i] += -vf * e[i] + ve * f[i];
            }
        }
        a_rows.push(e);
        b_rows.push(f);
    }
    a_rows.extend(b_rows);
    if !is_symplectic_for(&a_rows, k) {
        return Err(Error::Internal("symplectic reduction failed".into()));
    }
    Ok(a_rows)
}

/// Loop chain, raw intersections and the integer symplectic frame.
pub fn homology_basis(roots: &[Complex64], genus: usize) -> Result<HomologyBasis> {
    if genus == 0 {
        return Err(Error::InvalidInput("genus 0".into()));
    }
    check_admissible(roots, genus)?;
    let raw = raw_intersections(roots, genus)?;
    let s = symplectic_reduction(&raw)?;
    Ok(HomologyBasis {
        genus,
        loop_pairs: (0..2 * genus).map(|j| (j, j + 1)).collect(),
        raw_intersection: raw,
        symplectic_transform: s,
    })
}

/// `g × 2g` matrix of loop periods of `z^{i-1} dz / y`.
pub fn loop_periods(
    roots: &[Complex64],
    lead: Complex64,
    genus: usize,
    quad_order: usize,
    exec: Execution,
) -> Result<CMat> {
    if quad_order < MIN_QUAD_ORDER {
        return Err(Error::InvalidInput(format!(
            "quad_order {quad_order} below minimum {MIN_QUAD_ORDER}"
        )));
    }
    let scale = roots.iter().map(|e| e.norm()).fold(1.0, f64::max);
    let nodes: Vec<f64> = (1..=quad_order)
        .map(|k| ((2 * k - 1) as f64 * PI / (2 * quad_order) as f64).cos())
        .collect();
    let columns = par::map_range(exec, 2 * genus, |j| -> Result<Vec<Complex64>> {
        let seg = Segment::new(roots, j, lead);
        let mut acc = vec![c(0.0, 0.0); genus];
        for &x in &nodes {
            let z = seg.point(x);
            if seg.others.iter().any(|&e| (z - e).norm() < TRACK_TOL * scale) {
                return Err(Error::QuadraturePath(format!("node on loop {j} hits a branch point")));
            }
            let w = seg.sqrt_h(x).inv();
            let mut zp = c(1.0, 0.0);
            for a in acc.iter_mut() {
                *a += zp * w;
                zp *= z;
            }
        }
        let factor = -I * (2.0 * PI / quad_order as f64);
        Ok(acc.into_iter().map(|a| a * factor).collect())
    });
    let mut p = CMat::zeros(genus, 2 * genus);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col?.into_iter().enumerate() {
            p[(i, j)] = v;
        }
    }
    Ok(p)
}

/// Periods over the symplectic cycles: `Π = P Sᵀ`.
pub fn period_matrix(curve: &HyperellipticCurve, homology: &HomologyBasis, quad_order: usize, exec: Execution) -> Result<CMat> {
    let p = loop_periods(curve.roots(), curve.leading(), curve.genus(), quad_order, exec)?;
    Ok(p * homology.s_matrix().transpose())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖Π J Πᵀ‖_F`.
    pub riemann_sym: f64,
    /// `‖Π J Πᵀ‖_F / ‖Π‖_F²`.
    pub riemann_rel: f64,
    /// Smallest eigenvalue of `i Π J Π^H`.
    pub min_positivity: f64,
}

/// Riemann's bilinear relations for a `g × 2g` period matrix in the
/// standard symplectic frame.
pub fn validate_riemann_relations(pi: &CMat) -> Result<Residuals> {
    let g = pi.nrows();
    if pi.ncols() != 2 * g || g == 0 {
        return Err(Error::InvalidInput(format!("period matrix has shape {}x{}", g, pi.ncols())));
    }
    let j = linalg::standard_symplectic(g);
    let sym = pi * &j * pi.transpose();
    let riemann_sym = sym.norm();
    let riemann_rel = riemann_sym / pi.norm_squared().max(f64::MIN_POSITIVE);
    let form = pi * &j * pi.adjoint() * I;
    let min_positivity = linalg::hermitian_eigenvalues(&form)[0];
    let res = Residuals {
        riemann_sym,
        riemann_rel,
        min_positivity,
    };
    if !(riemann_rel <= RIEMANN_TOL) || !(min_positivity > 0.0) {
        return Err(Error::InvalidPeriodData {
            riemann_sym,
            min_positivity,
        });
    }
    Ok(res)
}

/// `G_ij = i ∫ ω_i ∧ conj(ω_j) = i (Π J Π^H)_ij`.
pub fn gram_from_periods(pi: &CMat) -> Result<CMat> {
    let g = pi.nrows();
    let j = linalg::standard_symplectic(g);
    let raw = pi * &j * pi.adjoint() * I;
    let gram = (&raw + raw.adjoint()) * c(0.5, 0.0);
    let ev = linalg::hermitian_eigenvalues(&gram);
    if ev[0] <= 0.0 {
        return Err(Error::Orientation(format!(
            "Gram matrix from periods is not positive definite (min eigenvalue {:.3e})",
            ev[0]
        )));
    }
    Ok(gram)
}

/// Pairings `p_j = ∫ α ∧ ω_j` from the symplectic periods of a closed
/// 1-form `α`: `p = per(α) J Πᵀ`.
pub fn pairings_from_periods(alpha_periods: &[Complex64], pi: &CMat) -> Result<Vec<Complex64>> {
    let g = pi.nrows();
    if alpha_periods.len() != 2 * g {
        return Err(Error::InvalidInput("period vector length must be 2g".into()));
    }
    let row = linalg::row_vector(alpha_periods) * linalg::standard_symplectic(g) * pi.transpose();
    Ok(row.iter().copied().collect())
}

/// Squared L² norm of the harmonic (0,1)-form with pairings `p`:
/// writing it as `Σ c_i conj(ω_i)` gives `p = i G c`, hence `p^H G^{-1} p`.
pub fn harmonic_01_norm(p: &[Complex64], gram: &CMat) -> Result<f64> {
    let g = gram.nrows();
    if p.len() != g {
        return Err(Error::InvalidInput("pairing vector length must be g".into()));
    }
    let rhs = CMat::from_column_slice(g, 1, p);
    let x = linalg::solve(gram, &rhs)?;
    Ok(p.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum::<Complex64>().re)
}

#[derive(Clone, Debug)]
pub struct PeriodData {
    pub genus: usize,
    pub quad_order: usize,
    pub roots: Vec<Complex64>,
    pub homology: HomologyBasis,
    pub loop_periods: CMat,
    pub pi: CMat,
    pub gram: CMat,
    pub residuals: Residuals,
}

impl PeriodData {
    /// Combines loop periods with a homology frame and validates.
    pub fn assemble(
        quad_order: usize,
        roots: Vec<Complex64>,
        homology: HomologyBasis,
        loop_periods: CMat,
    ) -> Result<Self> {
        let pi = &loop_periods * homology.s_matrix().transpose();
        let residuals = validate_riemann_relations(&pi)?;
        let gram = gram_from_periods(&pi)?;
        Ok(Self {
            genus: homology.genus,
            quad_order,
            roots,
            homology,
            loop_periods,
            pi,
            gram,
            residuals,
        })
    }

    pub fn a_periods(&self) -> CMat {
        self.pi.columns(0, self.genus).into_owned()
    }

    pub fn b_periods(&self) -> CMat {
        self.pi.columns(self.genus, self.genus).into_owned()
    }

    /// Same data in the frame `S' · (a, b)` for `S' ∈ Sp(2g, ℤ)`.
    pub fn change_frame(&self, s_prime: &[Vec<i64>]) -> Result<Self> {
        let g = self.genus;
        if !is_symplectic_for(s_prime, &standard_j_int(g)) {
            return Err(Error::InvalidInput("frame change is not symplectic".into()));
        }
        let mut homology = self.homology.clone();
        homology.symplectic_transform = int_matmul(s_prime, &self.homology.symplectic_transform);
        Self::assemble(self.quad_order, self.roots.clone(), homology, self.loop_periods.clone())
    }

    pub fn to_record(&self) -> PeriodRecord {
        PeriodRecord {
            genus: self.genus,
            quad_order: self.quad_order,
            roots: self.roots.clone(),
            homology: self.homology.clone(),
            loop_periods: (0..self.loop_periods.nrows())
                .map(|i| self.loop_periods.row(i).iter().copied().collect())
                .collect(),
        }
    }

    pub fn from_record(rec: &PeriodRecord) -> Result<Self> {
        let g = rec.genus;
        if rec.loop_periods.len() != g || rec.loop_periods.iter().any(|r| r.len() != 2 * g) {
            return Err(Error::InvalidInput("period record has inconsistent shape".into()));
        }
        let p = CMat::from_fn(g, 2 * g, |i, j| rec.loop_periods[i][j]);
        Self::assemble(rec.quad_order, rec.roots.clone(), rec.homology.clone(), p)
    }
}

/// Serializable form of [`PeriodData`]; derived quantities are recomputed
/// on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub genus: usize,
    pub quad_order: usize,
    pub roots: Vec<Complex64>,
    pub homology: HomologyBasis,
    pub loop_periods: Vec<Vec<Complex64>>,
}

/// Full pipeline for one fiber.
pub fn compute_period_data(curve: &HyperellipticCurve, quad_order: usize, exec: Execution) -> Result<PeriodData> {
    let homology = homology_basis(curve.roots(), curve.genus())?;
    let p = loop_periods(curve.roots(), curve.leading(), curve.genus(), quad_order, exec)?;
    PeriodData::assemble(quad_order, curve.roots().to_vec(), homology, p)
}

/// Random element of `Sp(2g, ℤ)` as a product of elementary symplectic
/// generators with small coefficients.
pub fn random_symplectic<R: Rng + ?Sized>(g: usize, steps: usize, rng: &mut R) -> Vec<Vec<i64>> {
    let n = 2 * g;
    let mut s: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..steps {
        let i = rng.random_range(0..g);
        let k = if rng.random_bool(0.5) { 1 } else { -1 } * rng.random_range(1..=2);
        let add = |s: &mut Vec<Vec<i64>>, dst: usize, src: usize, k: i64| {
            let row = s[src].clone();
            for (x, y) in s[dst].iter_mut().zip(row) {
                *x += k * y;
            }
        };
        match rng.random_range(0..4) {
            0 => add(&mut s, i, g + i, k),
            1 => add(&mut s, g + i, i, k),
            2 if g > 1 => {
                let j = (i + 1 + rng.random_range(0..g - 1)) % g;
                add(&mut s, i, j, k);
                add(&mut s, g + j, g + i, -k);
            }
            _ => {
                let a = s[i].clone();
                let b = s[g + i].clone();
                s[i] = b;
                s[g + i] = a.into_iter().map(|x| -x).collect();
            }
        }
    }
    s
}
