//! On-disk cache of period data keyed by curve content.
//!
//! Entries are JSON files written via a temporary file and an atomic
//! rename. Floats are written in shortest round-trip form, so a cached
//! entry reproduces every bit of the stored periods.

use std::io::Write;
use std::path::{Path, PathBuf};

use hodgelab_core::periods::{compute_period_data, HyperellipticCurve, PeriodData, PeriodRecord};
use hodgelab_core::{Execution, HOMOLOGY_CONVENTION_VERSION};
use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::error::{CliError, CliResult};

pub const CACHE_DIR_ENV: &str = "HODGELAB_CACHE_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheOutcome {
    Hit,
    Miss,
    /// An entry existed but was unreadable or stale.
    Recomputed,
    Disabled,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    homology_convention: u32,
    key: String,
    record: PeriodRecord,
}

#[derive(Clone, Debug)]
pub struct PeriodCache {
    dir: PathBuf,
}

/// `sha256` of the coefficient bit patterns, quadrature order and
/// homology convention version.
pub fn cache_key(curve: &HyperellipticCurve, quad_order: usize) -> String {
    let mut text = format!("v{HOMOLOGY_CONVENTION_VERSION};q{quad_order};");
    for c in curve.poly().coeffs() {
        text.push_str(&format!("{:016x}:{:016x};", c.re.to_bits(), c.im.to_bits()));
    }
    sha256_hex(text.as_bytes())
}

enum Lookup {
    Found(Box<PeriodData>),
    Absent,
    Invalid,
}

impl PeriodCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_DIR_ENV).filter(|v| !v.is_empty()).map(Self::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    fn lookup_inner(&self, key: &str) -> Lookup {
        let path = self.path(key);
        let Ok(text) = std::fs::read_to_string(&path) else {
            return Lookup::Absent;
        };
        let entry: Entry = match serde_json::from_str(&text) {
            Ok(e) => e,
            Err(e) => {
                log::warn!("ignoring corrupt cache entry {}: {e}", path.display());
                return Lookup::Invalid;
            }
        };
        if entry.homology_convention != HOMOLOGY_CONVENTION_VERSION || entry.key != key {
            log::info!("ignoring stale cache entry {}", path.display());
            return Lookup::Invalid;
        }
        match PeriodData::from_record(&entry.record) {
            Ok(d) => Lookup::Found(Box::new(d)),
            Err(e) => {
                log::warn!("ignoring invalid cache entry {}: {e}", path.display());
                Lookup::Invalid
            }
        }
    }

    pub fn lookup(&self, key: &str) -> Option<PeriodData> {
        match self.lookup_inner(key) {
            Lookup::Found(d) => Some(*d),
            _ => None,
        }
    }

    pub fn store(&self, key: &str, data: &PeriodData) -> CliResult<()> {
        let entry = Entry { homology_convention: HOMOLOGY_CONVENTION_VERSION, key: key.to_string(), record: data.to_record() };
        let write_err = |source| CliError::Write { path: self.dir.clone(), source };
        std::fs::create_dir_all(&self.dir).map_err(write_err)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(write_err)?;
        let text = serde_json::to_string(&entry).expect("period records always serialize");
        tmp.write_all(text.as_bytes()).map_err(write_err)?;
        tmp.persist(self.path(key)).map_err(|e| write_err(e.error))?;
        Ok(())
    }

    /// Cached data when valid, otherwise computes and stores it.
    pub fn get_or_compute(
        &self,
        curve: &HyperellipticCurve,
        quad_order: usize,
        exec: Execution,
    ) -> CliResult<(PeriodData, CacheOutcome)> {
        let key = cache_key(curve, quad_order);
        let outcome = match self.lookup_inner(&key) {
            Lookup::Found(d) => return Ok((*d, CacheOutcome::Hit)),
            Lookup::Absent => CacheOutcome::Miss,
            Lookup::Invalid => CacheOutcome::Recomputed,
        };
        let data = compute_period_data(curve, quad_order, exec)?;
        if let Err(e) = self.store(&key, &data) {
            log::warn!("could not write cache entry: {e}");
        }
        Ok((data, outcome))
    }
}

/// Goes through the cache when one is configured.
pub fn period_data(
    cache: Option<&PeriodCache>,
    curve: &HyperellipticCurve,
    quad_order: usize,
    exec: Execution,
) -> CliResult<(PeriodData, CacheOutcome)> {
    match cache {
        Some(c) => c.get_or_compute(curve, quad_order, exec),
        None => Ok((compute_period_data(curve, quad_order, exec)?, CacheOutcome::Disabled)),
    }
}
