//! TOML experiment configs.
//!
//! Polynomial coefficients are listed highest degree first as strings in
//! any form accepted by the exact parser: `"3"`, `"-1/4"`, `"0.25"`,
//! `"1e-3"`, `"2-3i"`.

use std::collections::BTreeMap;
use std::path::Path;

use hodgelab_core::exact::parse_gaussian;
use hodgelab_core::fd::LaplaceScheme;
use hodgelab_core::poly::ComplexPoly;
use hodgelab_core::torus::{self, FourierTerm, TMonomial, TorusTwistedConfig};
use hodgelab_core::Complex64;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Noether,
    Periods,
    Thm11,
    Sweep,
    Thm12,
    Bound15,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Noether => "noether",
            Kind::Periods => "periods",
            Kind::Thm11 => "thm11",
            Kind::Sweep => "sweep",
            Kind::Thm12 => "thm12",
            Kind::Bound15 => "bound15",
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    #[serde(default)]
    pub plots: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
    pub noether: Option<NoetherPayload>,
    pub periods: Option<PeriodsPayload>,
    pub thm11: Option<Thm11Payload>,
    pub sweep: Option<SweepPayload>,
    pub torus: Option<TorusPayload>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuarticTerm {
    /// Exponents of `x, y, w`.
    pub exp: [u32; 3],
    pub coeff: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuarticFile {
    pub term: Vec<QuarticTerm>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoetherPayload {
    pub genus: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Extra sections to test, as coefficient strings.
    #[serde(default)]
    pub u: Vec<Vec<String>>,
    #[serde(default)]
    pub quartic: Option<QuarticFile>,
}

fn default_trials() -> usize {
    100
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub id: String,
    pub f: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodsPayload {
    #[serde(default = "default_quad")]
    pub quad_order: usize,
    #[serde(default = "default_riemann_tol")]
    pub riemann_tol: f64,
    pub curve: Vec<CurveSpec>,
}

fn default_quad() -> usize {
    hodgelab_core::periods::DEFAULT_QUAD_ORDER
}

fn default_riemann_tol() -> f64 {
    hodgelab_core::periods::RIEMANN_TOL
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub id: String,
    pub f0: Vec<String>,
    pub g: Vec<String>,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default)]
    pub t0: Option<String>,
    pub u: Vec<Vec<String>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thm11Payload {
    /// Stencil half-width relative to each family's radius.
    #[serde(default = "default_h_rel")]
    pub h_rel: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_quad")]
    pub quad_order: usize,
    #[serde(default)]
    pub scheme: LaplaceScheme,
    #[serde(default = "yes")]
    pub richardson: bool,
    /// Required error contraction under `h -> h/2` for non-vanishing cases.
    pub min_contraction: Option<f64>,
    /// Number of directions in the angle plot.
    #[serde(default = "default_angles")]
    pub plot_angles: usize,
    pub family: Vec<FamilySpec>,
}

fn default_h_rel() -> f64 {
    1e-2
}

fn default_tol() -> f64 {
    1e-3
}

fn default_angles() -> usize {
    24
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPayload {
    #[serde(default = "default_families")]
    pub families: usize,
    #[serde(default = "default_sections")]
    pub sections: usize,
    #[serde(default = "default_h_rel")]
    pub h_rel: f64,
    #[serde(default = "default_pos_tol")]
    pub pos_tol: f64,
    #[serde(default = "default_quad")]
    pub quad_order: usize,
}

fn default_families() -> usize {
    20
}

fn default_sections() -> usize {
    3
}

fn default_pos_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiTermSpec {
    pub coeff: String,
    pub p: u32,
    pub q: u32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiSpec {
    pub m: [i32; 2],
    pub terms: Vec<PsiTermSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusPayload {
    pub tau: String,
    pub k: u32,
    /// Theta truncation; derived from `tau` and `k` when absent.
    pub m: Option<usize>,
    #[serde(default = "default_grid")]
    pub n: usize,
    #[serde(default = "default_torus_h")]
    pub h: f64,
    #[serde(default)]
    pub t0: Option<String>,
    #[serde(default)]
    pub psi: Vec<PsiSpec>,
    /// Sections as theta-basis coefficients; the standard basis when empty.
    #[serde(default)]
    pub u: Vec<Vec<String>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_cg_tol")]
    pub cg_tol: f64,
    #[serde(default = "default_cg_iter")]
    pub cg_max_iter: usize,
    #[serde(default = "default_link_quad")]
    pub link_quad: usize,
    #[serde(default = "yes")]
    pub richardson: bool,
    #[serde(default)]
    pub scheme: LaplaceScheme,
    /// Include the `(n/2, h)`, `(n, h)`, `(n, h/2)` refinement table.
    #[serde(default = "yes")]
    pub convergence: bool,
}

fn default_grid() -> usize {
    torus::DEFAULT_GRID
}

fn default_torus_h() -> f64 {
    torus::DEFAULT_H
}

fn default_cg_tol() -> f64 {
    torus::DEFAULT_CG_TOL
}

fn default_cg_iter() -> usize {
    torus::DEFAULT_CG_MAX_ITER
}

fn default_link_quad() -> usize {
    torus::DEFAULT_LINK_QUAD
}

/// A parsed config with the digest of its source text.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn load(path: &Path) -> CliResult<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    parse(&text)
}

pub fn parse(text: &str) -> CliResult<LoadedConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(LoadedConfig { config, hash: sha256_hex(text.as_bytes()) })
}

impl ExperimentConfig {
    fn validate(&self) -> CliResult<()> {
        let present: BTreeMap<&str, bool> = [
            ("noether", self.noether.is_some()),
            ("periods", self.periods.is_some()),
            ("thm11", self.thm11.is_some()),
            ("sweep", self.sweep.is_some()),
            ("torus", self.torus.is_some()),
        ]
        .into_iter()
        .collect();
        let wanted = match self.kind {
            Kind::Thm12 | Kind::Bound15 => "torus",
            k => k.name(),
        };
        if !present[wanted] {
            return Err(CliError::Config(format!("kind '{}' needs a [{wanted}] table", self.kind.name())));
        }
        if let Some((extra, _)) = present.iter().find(|(name, on)| **on && **name != wanted) {
            return Err(CliError::Config(format!("table [{extra}] does not belong to kind '{}'", self.kind.name())));
        }
        Ok(())
    }
}

pub fn parse_complex(s: &str) -> CliResult<Complex64> {
    let g = parse_gaussian(s).map_err(|e| CliError::Config(format!("coefficient '{s}': {e}")))?;
    let (re, im) = g.to_f64_pair();
    Ok(Complex64::new(re, im))
}

pub fn parse_vector(v: &[String]) -> CliResult<Vec<Complex64>> {
    v.iter().map(|s| parse_complex(s)).collect()
}

/// Coefficients highest degree first.
pub fn parse_poly(v: &[String]) -> CliResult<ComplexPoly> {
    if v.is_empty() {
        return Err(CliError::Config("empty coefficient list".into()));
    }
    Ok(ComplexPoly::from_descending(&parse_vector(v)?))
}

pub fn parse_point(s: &Option<String>) -> CliResult<Complex64> {
    s.as_deref().map(parse_complex).unwrap_or(Ok(Complex64::new(0.0, 0.0)))
}

impl TorusPayload {
    pub fn to_core(&self) -> CliResult<TorusTwistedConfig> {
        let psi = self
            .psi
            .iter()
            .map(|s| {
                let poly = s
                    .terms
                    .iter()
                    .map(|t| Ok(TMonomial { coeff: parse_complex(&t.coeff)?, p: t.p, q: t.q }))
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(FourierTerm { m: s.m, poly })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let mut cfg = TorusTwistedConfig::new(parse_complex(&self.tau)?, self.k, psi);
        cfg.truncation = self.m;
        cfg.n = self.n;
        cfg.h = self.h;
        cfg.t0 = parse_point(&self.t0)?;
        cfg.tol = self.tol;
        cfg.cg_tol = self.cg_tol;
        cfg.cg_max_iter = self.cg_max_iter;
        cfg.link_quad = self.link_quad;
        cfg.richardson = self.richardson;
        cfg.scheme = self.scheme;
        Ok(cfg)
    }

    pub fn sections(&self) -> CliResult<Vec<Vec<Complex64>>> {
        if self.u.is_empty() {
            let k = self.k as usize;
            return Ok((0..k)
                .map(|i| (0..k).map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
                .collect());
        }
        self.u.iter().map(|u| parse_vector(u)).collect()
    }
}
