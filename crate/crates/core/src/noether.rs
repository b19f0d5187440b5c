//! Exact multiplication-map certificates on hyperelliptic curves and plane
//! quartics.
//!
//! On `y^2 = f(z)` with `deg f = 2g+2` (or `2g+1`) the canonical sections are
//! `z^{i-1} dz/y`, `i = 1..g`, and quadratic differentials split into an even
//! part `z^a dz^2/y^2`, `a = 0..2g-2`, and an odd part `z^b dz^2/y`,
//! `b = 0..g-3`. Products of canonical sections land in the even part only,
//! which is what makes the symmetric-square map fail to be onto for `g >= 3`.
//!
//! The dual space of quadratic differentials is identified with its
//! coordinate space through the monomial basis above, so a functional `μ` is
//! a vector of length `3g-3` and `μ·u = 0` means `μ(u v) = 0` for every `v`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ExactMatrix, Field, GaussianRational, Rational};

/// Curve model handed to [`canonical_bases`].
#[derive(Clone, Debug, PartialEq)]
pub enum GenusModel {
    Hyperelliptic { genus: usize },
    PlaneQuartic(PlaneQuartic),
}

impl GenusModel {
    pub fn genus(&self) -> usize {
        match self {
            GenusModel::Hyperelliptic { genus } => *genus,
            GenusModel::PlaneQuartic(_) => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    /// `z^a dz^2 / y^2`
    Even,
    /// `z^b dz^2 / y`
    Odd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadMonomial {
    pub parity: Parity,
    pub exponent: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalBases {
    pub genus: usize,
    /// Exponent `i-1` of `z^{i-1} dz/y`.
    pub holo: Vec<u32>,
    /// Even part in ascending exponent, then odd part in ascending exponent.
    pub quad: Vec<QuadMonomial>,
}

impl CanonicalBases {
    pub fn even_len(&self) -> usize {
        2 * self.genus - 1
    }

    pub fn odd_len(&self) -> usize {
        self.genus - 2
    }
}

fn check_genus(g: usize) -> Result<()> {
    if g < 2 {
        return Err(Error::Precondition(format!("genus must be at least 2, got {g}")));
    }
    Ok(())
}

pub fn quad_dim(g: usize) -> usize {
    3 * g - 3
}

pub fn canonical_bases(model: &GenusModel) -> Result<CanonicalBases> {
    let g = match model {
        GenusModel::Hyperelliptic { genus } => *genus,
        GenusModel::PlaneQuartic(_) => {
            return Err(Error::UnsupportedModel(
                "canonical monomial bases are only defined for hyperelliptic models".into(),
            ))
        }
    };
    check_genus(g)?;
    let holo = (0..g as u32).collect();
    let quad = (0..(2 * g - 1) as u32)
        .map(|a| QuadMonomial {
            parity: Parity::Even,
            exponent: a,
        })
        .chain((0..(g - 2) as u32).map(|b| QuadMonomial {
            parity: Parity::Odd,
            exponent: b,
        }))
        .collect();
    Ok(CanonicalBases { genus: g, holo, quad })
}

/// Matrix of `Sym^2 H^0(K) -> H^0(2K)`; columns are pairs `i <= j`.
pub fn sym2_matrix<F: Field>(g: usize) -> Result<ExactMatrix<F>> {
    check_genus(g)?;
    let pairs: Vec<(usize, usize)> = (0..g).flat_map(|i| (i..g).map(move |j| (i, j))).collect();
    let mut m = ExactMatrix::zeros(quad_dim(g), pairs.len());
    for (col, &(i, j)) in pairs.iter().enumerate() {
        m.set(i + j, col, F::one());
    }
    Ok(m)
}

/// `(rank, coker_dim)` of `Sym^2 H^0(K) -> H^0(2K)`.
pub fn sym2_multiplication_rank(g: usize) -> Result<(usize, usize)> {
    let rank = sym2_matrix::<Rational>(g)?.rank();
    Ok((rank, quad_dim(g) - rank))
}

/// Matrix of `v -> u v : H^0(K) -> H^0(2K)`, shape `(3g-3) x g`.
pub fn mult_by_u_matrix<F: Field>(g: usize, u: &[F]) -> Result<ExactMatrix<F>> {
    check_genus(g)?;
    if u.len() != g {
        return Err(Error::InvalidInput(format!(
            "section has {} coefficients, genus is {g}",
            u.len()
        )));
    }
    let mut m = ExactMatrix::<F>::zeros(quad_dim(g), g);
    for j in 0..g {
        for (i, ui) in u.iter().enumerate() {
            let v = m.get(i + j, j).clone() + ui.clone();
            m.set(i + j, j, v);
        }
    }
    Ok(m)
}

/// `dim {μ : μ·u = 0}` computed as `(3g-3) - rank(v -> u v)`.
pub fn mult_by_u_kernel<F: Field>(g: usize, u: &[F]) -> Result<usize> {
    let m = mult_by_u_matrix(g, u)?;
    Ok(quad_dim(g) - m.rank())
}

/// Explicit basis of `{μ : μ·u = 0}`, i.e. the null space of the transpose.
pub fn dual_kernel_basis<F: Field>(g: usize, u: &[F]) -> Result<Vec<Vec<F>>> {
    Ok(mult_by_u_matrix(g, u)?.transpose().kernel())
}

/// Basis of the functionals supported on the even part that kill `u`.
/// These are the directions reachable by hyperelliptic deformations.
pub fn even_kernel_basis<F: Field>(g: usize, u: &[F]) -> Result<Vec<Vec<F>>> {
    let m = mult_by_u_matrix(g, u)?;
    let even = 2 * g - 1;
    let mut mt = ExactMatrix::zeros(g, even);
    for r in 0..g {
        for c in 0..even {
            mt.set(r, c, m.get(c, r).clone());
        }
    }
    Ok(mt.kernel())
}

/// `dim ∩_u ker(μ -> μ u)` from the stacked transposes over the basis `u = e_i`.
pub fn common_kernel_dim(g: usize) -> Result<usize> {
    check_genus(g)?;
    let mut stacked: Option<ExactMatrix<Rational>> = None;
    for i in 0..g {
        let mut e = vec![<Rational as Zero>::zero(); g];
        e[i] = <Rational as Field>::one();
        let mt = mult_by_u_matrix(g, &e)?.transpose();
        stacked = Some(match stacked {
            None => mt,
            Some(s) => s.vstack(&mt)?,
        });
    }
    let s = stacked.expect("genus is at least 2");
    Ok(s.kernel().len())
}

/// Random nonzero exact vector with small numerators and denominators.
pub fn random_u<R: Rng + ?Sized>(g: usize, rng: &mut R) -> Vec<Rational> {
    loop {
        let u: Vec<Rational> = (0..g)
            .map(|_| crate::exact::rational(rng.random_range(-20..=20), rng.random_range(1..=9)))
            .collect();
        if u.iter().any(|x| !Zero::is_zero(x)) {
            return u;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoetherCertificate {
    pub genus: usize,
    pub sym2_rank: usize,
    pub coker_dim: usize,
    /// Coefficients rendered as `"p/q"` or `"a+bi"`.
    pub tested_u: Vec<Vec<String>>,
    pub kernel_dims: Vec<usize>,
    pub common_kernel_dim: usize,
}

impl NoetherCertificate {
    /// Computes every entry and cross-checks the two kernel routes and the
    /// dimension identities; any disagreement is an internal error.
    pub fn build<F: Field>(g: usize, tested: &[Vec<F>]) -> Result<Self> {
        let (sym2_rank, coker_dim) = sym2_multiplication_rank(g)?;
        let common = common_kernel_dim(g)?;
        if common != coker_dim {
            return Err(Error::Internal(format!(
                "common kernel {common} differs from cokernel {coker_dim}"
            )));
        }
        let mut kernel_dims = Vec::with_capacity(tested.len());
        for u in tested {
            let by_rank = mult_by_u_kernel(g, u)?;
            let by_dual = dual_kernel_basis(g, u)?.len();
            if by_rank != by_dual {
                return Err(Error::Internal(format!(
                    "kernel by rank {by_rank} disagrees with dual kernel {by_dual}"
                )));
            }
            if u.iter().any(|x| !x.is_zero()) && by_rank < 2 * g - 3 {
                return Err(Error::Internal(format!(
                    "kernel {by_rank} below the lower bound {}",
                    2 * g - 3
                )));
            }
            kernel_dims.push(by_rank);
        }
        Ok(Self {
            genus: g,
            sym2_rank,
            coker_dim,
            tested_u: tested
                .iter()
                .map(|u| u.iter().map(|x| x.to_string()).collect())
                .collect(),
            kernel_dims,
            common_kernel_dim: common,
        })
    }

    /// `true` when the symmetric-square map is onto, i.e. the exact data
    /// admits nonzero curvature in every direction.
    pub fn noether_surjective(&self) -> bool {
        self.coker_dim == 0
    }
}

impl fmt::Display for NoetherCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = self.genus;
        writeln!(f, "hyperelliptic genus {g}")?;
        writeln!(
            f,
            "  Sym^2 H0(K) -> H0(2K): rank {} of {}, cokernel {}",
            self.sym2_rank,
            3 * g - 3,
            self.coker_dim
        )?;
        writeln!(f, "  common kernel of mu -> mu.u: {}", self.common_kernel_dim)?;
        for (u, k) in self.tested_u.iter().zip(&self.kernel_dims) {
            writeln!(f, "  u = ({}): kernel {k} (bound {})", u.join(", "), 2 * g - 3)?;
        }
        if self.common_kernel_dim > 0 {
            write!(f, "  degenerate directions exist for every section")
        } else {
            write!(f, "  no direction is degenerate for every section")
        }
    }
}

/// Exponent triple of `x^a y^b w^c`.
pub type Exponent = [u32; 3];

/// Homogeneous ternary form with Gaussian-rational coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct TernaryForm {
    degree: u32,
    terms: BTreeMap<Exponent, GaussianRational>,
}

/// Degree-4 ternary form.
pub type PlaneQuartic = TernaryForm;

/// Monomials of degree `d` in three variables, in descending lex order.
pub fn monomials(d: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    for a in (0..=d).rev() {
        for b in (0..=d - a).rev() {
            out.push([a, b, d - a - b]);
        }
    }
    out
}

impl TernaryForm {
    pub fn new(degree: u32, terms: impl IntoIterator<Item = (Exponent, GaussianRational)>) -> Result<Self> {
        let mut map: BTreeMap<Exponent, GaussianRational> = BTreeMap::new();
        for (e, c) in terms {
            if e.iter().sum::<u32>() != degree {
                return Err(Error::InvalidInput(format!(
                    "monomial {e:?} is not of degree {degree}"
                )));
            }
            let entry = map.entry(e).or_insert_with(GaussianRational::zero);
            *entry = entry.clone() + c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Self { degree, terms: map })
    }

    pub fn quartic(terms: impl IntoIterator<Item = (Exponent, GaussianRational)>) -> Result<Self> {
        let q = Self::new(4, terms)?;
        if q.terms.is_empty() {
            return Err(Error::InvalidInput("quartic has no nonzero coefficient".into()));
        }
        Ok(q)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, GaussianRational> {
        &self.terms
    }

    pub fn partial(&self, var: usize) -> TernaryForm {
        let terms = self.terms.iter().filter(|(e, _)| e[var] > 0).map(|(e, c)| {
            let mut d = *e;
            d[var] -= 1;
            let k = GaussianRational::real(crate::exact::rational(e[var] as i64, 1));
            (d, c.clone() * k)
        });
        TernaryForm::new(self.degree.saturating_sub(1), terms).expect("degrees are consistent")
    }

    pub fn mul(&self, other: &TernaryForm) -> TernaryForm {
        let mut terms = Vec::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                terms.push(([a[0] + b[0], a[1] + b[1], a[2] + b[2]], ca.clone() * cb.clone()));
            }
        }
        TernaryForm::new(self.degree + other.degree, terms).expect("degrees are consistent")
    }
}

/// Macaulay matrix of the gradient ideal in degree `d`: rows `m·∂_v F` for
/// all monomials `m` of degree `d - deg ∂F`, columns the degree-`d` monomials.
fn gradient_macaulay(q: &PlaneQuartic, d: u32) -> ExactMatrix<GaussianRational> {
    let cols = monomials(d);
    let index: BTreeMap<Exponent, usize> = cols.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let grads: Vec<TernaryForm> = (0..3).map(|v| q.partial(v)).collect();
    let shift = monomials(d - (q.degree() - 1));
    let mut m = ExactMatrix::zeros(3 * shift.len(), cols.len());
    let mut row = 0;
    for grad in &grads {
        for s in &shift {
            for (e, c) in grad.terms() {
                let col = index[&[e[0] + s[0], e[1] + s[1], e[2] + s[2]]];
                m.set(row, col, c.clone());
            }
            row += 1;
        }
    }
    m
}

/// Result of the plane-quartic check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuarticCertificate {
    /// Rank of the degree-7 gradient Macaulay matrix (36 iff smooth).
    pub macaulay_rank: usize,
    pub macaulay_cols: usize,
    /// Rank of `Sym^2 H^0(K) -> H^0(2K)` on the canonical model (6 iff onto).
    pub product_rank: usize,
    pub surjective: bool,
}

/// Decides smoothness exactly and, for a smooth quartic, certifies that the
/// symmetric-square map onto quadrics is onto.
///
/// A plane quartic is smooth iff its three partials have no common zero,
/// iff the gradient ideal contains every form of degree `3·(3-1)+1 = 7`.
/// Singular quartics are classified by the growth of the quotient
/// dimension between degrees 10 and 11: growth means a curve of singular
/// points, i.e. a multiple component.
pub fn plane_quartic_noether(q: &PlaneQuartic) -> Result<QuarticCertificate> {
    if q.degree() != 4 {
        return Err(Error::InvalidInput(format!("expected a quartic, got degree {}", q.degree())));
    }
    let mac = gradient_macaulay(q, 7);
    let rank = mac.rank();
    let cols = mac.ncols();
    if rank < cols {
        let corank = |d: u32| {
            let m = gradient_macaulay(q, d);
            m.ncols() - m.rank()
        };
        let (c10, c11) = (corank(10), corank(11));
        let witness = format!(
            "gradient ideal misses {} of {cols} degree-7 forms; quotient dims {c10} (deg 10), {c11} (deg 11)",
            cols - rank
        );
        return Err(if c11 > c10 {
            Error::Precondition(format!("quartic is non-reduced ({witness})"))
        } else {
            Error::Precondition(format!("quartic is singular at {c11} point(s) counted with multiplicity ({witness})"))
        });
    }
    // The canonical map is the plane embedding: H^0(K) = linear forms and
    // H^0(2K) = quadrics modulo the quartic's degree-2 part, which is zero.
    let linear = monomials(1);
    let quad = monomials(2);
    let index: BTreeMap<Exponent, usize> = quad.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let mut prod = ExactMatrix::<GaussianRational>::zeros(quad.len(), 6);
    let mut col = 0;
    for i in 0..3 {
        for j in i..3 {
            let (a, b) = (linear[i], linear[j]);
            prod.set(index[&[a[0] + b[0], a[1] + b[1], a[2] + b[2]]], col, GaussianRational::one());
            col += 1;
        }
    }
    let product_rank = prod.rank();
    Ok(QuarticCertificate {
        macaulay_rank: rank,
        macaulay_cols: cols,
        product_rank,
        surjective: product_rank == quad.len(),
    })
}
