//! Run manifest: config echo, provenance, status and per-run diagnostics.

use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

use crate::error::Result;
use crate::exponents::Verdict;
use crate::spectral::Grid;

#[derive(Debug, Clone, Serialize)]
pub struct VerdictJson {
    pub applicable: bool,
    pub route: String,
    pub failed_conditions: Vec<String>,
}

impl From<&Verdict> for VerdictJson {
    fn from(v: &Verdict) -> Self {
        VerdictJson {
            applicable: v.applicable,
            route: v.route.to_string(),
            failed_conditions: v.failed_conditions.iter().map(|c| c.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardJson {
    pub iterations: usize,
    pub diffs: Vec<f64>,
    pub ratios: Vec<f64>,
    pub residual: f64,
    pub tol: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config: BTreeMap<String, String>,
    pub code_version: String,
    pub seed: u64,
    pub grid_hash: String,
    pub wall_time_secs: f64,
    pub status: String,
    /// Finite-speed validity horizon for the generated data.
    pub horizon_time: f64,
    pub thm1: VerdictJson,
    pub thm2: VerdictJson,
    pub warnings: Vec<String>,
    pub snapshot_times: Vec<f64>,
    pub snapshot_files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aliasing_tail_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub picard: Option<PicardJson>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::KgError::Format(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// FNV-1a hash of the lattice geometry; identifies the grid a run used.
pub fn grid_hash(grid: &Grid) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    let spec = grid.spec();
    eat(&(spec.d as u64).to_le_bytes());
    eat(&(spec.k as u64).to_le_bytes());
    for &n in spec.nx.iter().chain(&spec.ny) {
        eat(&(n as u64).to_le_bytes());
    }
    for &l in spec.box_lengths.iter().chain(&spec.torus_lengths) {
        eat(&l.to_le_bytes());
    }
    for axis in grid.xi().iter().chain(grid.eta()) {
        for &f in axis {
            eat(&f.to_le_bytes());
        }
    }
    format!("{h:016x}")
}
