//! Disk cache for computed normal forms.
//!
//! Order-N normalization dominates the runtime of every command, so scans
//! over a mass-ratio grid reuse results through a content-addressed cache:
//! one JSON file per (point, mass ratio, expansion degree), named by a
//! SHA-256 digest of that key. The cache directory is taken from the
//! `HALO_CACHE_DIR` environment variable; without it every request is
//! computed from scratch.
//!
//! Only the normalized series and its generators are stored. The cheap
//! stages (equilibrium geometry, expansion coefficients, linear data,
//! diagonalizing map, centre-manifold reduction) are recomputed on load, so
//! a cache hit reproduces the full pipeline result bit-for-bit. A stored
//! record computed at order M serves any request of order N <= M at the same
//! degree, because normalization is degree-graded: lower slots of a deeper
//! run are computed by the identical operations. Requests deeper than the
//! stored record recompute and overwrite it.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use halo_core::cr3bp_model::{self, ProblemSpec};
use halo_core::linearization;
use halo_core::normal_form::{
    center_manifold_reduce, compute_normal_form, NormalFormOptions, NormalFormResult,
    ResonantNormalForm,
};
use halo_core::LibrationPoint;

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "HALO_CACHE_DIR";

const CACHE_SCHEMA: u32 = 1;

/// On-disk cache record.
#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    schema_version: u32,
    method: String,
    point: LibrationPoint,
    /// Bit pattern of the mass ratio; exact equality is checked on load.
    mu_bits: u64,
    /// Mass ratio as a float, for human inspection only.
    mu: f64,
    degree: u32,
    order: u32,
    normal_form: serde_json::Value,
}

/// Cache handle; `dir == None` disables caching.
#[derive(Debug)]
pub struct NormalFormCache {
    dir: Option<PathBuf>,
}

impl NormalFormCache {
    /// Builds a handle from `HALO_CACHE_DIR`.
    pub fn from_env() -> Self {
        Self { dir: std::env::var_os(CACHE_ENV).map(PathBuf::from) }
    }

    fn path_for(&self, point: LibrationPoint, mu: f64, degree: u32) -> Option<PathBuf> {
        let dir = self.dir.as_ref()?;
        let tag = format!("halo-nf-v{CACHE_SCHEMA}|{point}|{:016x}|{degree}", mu.to_bits());
        let digest = Sha256::digest(tag.as_bytes());
        let mut name = String::from("nf-");
        for byte in digest.iter().take(16) {
            name.push_str(&format!("{byte:02x}"));
        }
        name.push_str(".json");
        Some(dir.join(name))
    }

    /// Returns the normal form for the request, reusing a cached record when
    /// one covers it.
    pub fn compute(
        &self,
        point: LibrationPoint,
        mu: f64,
        order: u32,
        degree_override: Option<u32>,
    ) -> Result<NormalFormResult> {
        let degree = degree_override.unwrap_or(2 * order + 2);
        let path = self.path_for(point, mu, degree);
        if let Some(path) = path.as_deref() {
            if let Some(result) = try_load(path, point, mu, order, degree) {
                return Ok(result);
            }
        }
        let result = compute_normal_form(point, mu, order, Some(degree), &NormalFormOptions::default())
            .with_context(|| format!("normal form at {point}, mu = {mu:e}, order {order}, degree {degree}"))?;
        if let Some(path) = path.as_deref() {
            store(path, &result).with_context(|| format!("writing cache file {}", path.display()))?;
        }
        Ok(result)
    }
}

/// Loads a record if it exists, matches the key exactly, and was computed at
/// least as deep as the request. Unreadable or stale records are treated as
/// cache misses.
fn try_load(
    path: &Path,
    point: LibrationPoint,
    mu: f64,
    order: u32,
    degree: u32,
) -> Option<NormalFormResult> {
    let text = fs::read_to_string(path).ok()?;
    let record: CacheRecord = serde_json::from_str(&text).ok()?;
    if record.schema_version != CACHE_SCHEMA
        || record.method != "DM"
        || record.point != point
        || record.mu_bits != mu.to_bits()
        || record.degree != degree
        || record.order < order
    {
        return None;
    }
    let payload = serde_json::to_string(&record.normal_form).ok()?;
    let nf = ResonantNormalForm::from_json(&payload).ok()?;
    rebuild(point, mu, degree, nf).ok()
}

/// Recomputes the cheap pipeline stages around a deserialized normal form.
fn rebuild(
    point: LibrationPoint,
    mu: f64,
    degree: u32,
    normal_form: ResonantNormalForm,
) -> Result<NormalFormResult> {
    let spec = ProblemSpec::new(point, mu, degree)?;
    let geometry = cr3bp_model::equilibrium_geometry(point, mu)?;
    let coefficients = cr3bp_model::model_coefficients(point, mu, degree)?;
    let quadratic = linearization::quadratic_data(&coefficients)?;
    let map = linearization::build_diagonalizing_map(&quadratic)?;
    let cm = center_manifold_reduce(&normal_form)?;
    Ok(NormalFormResult { spec, geometry, coefficients, quadratic, map, normal_form, cm })
}

/// Atomically writes the record: a temporary file in the same directory is
/// renamed into place, so concurrent scan workers never observe a partial
/// file.
fn store(path: &Path, result: &NormalFormResult) -> Result<()> {
    let dir = path.parent().context("cache path has no parent directory")?;
    fs::create_dir_all(dir)?;
    let record = CacheRecord {
        schema_version: CACHE_SCHEMA,
        method: "DM".to_string(),
        point: result.spec.point,
        mu_bits: result.spec.mu.to_bits(),
        mu: result.spec.mu,
        degree: result.spec.expansion_degree,
        order: result.normal_form.order,
        normal_form: serde_json::from_str(&result.normal_form.to_json())?,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(serde_json::to_string(&record)?.as_bytes())?;
    tmp.write_all(b"\n")?;
    tmp.persist(path)?;
    Ok(())
}
