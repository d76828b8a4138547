use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::Path;

use qpgreen::bie::GratingSurface;
use qpgreen::scattering::{solve_grating, IncidentWave, ScatterResult, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    result: ScatterResult,
}

/// Reference solve, reused from `dir` when an entry with the same inputs exists.
///
/// The file name is a hash of the inputs; the full inputs are stored and
/// compared on load, so a collision only costs a recomputation.
pub fn reference_solve(
    dir: &Path,
    surface: &GratingSurface,
    wave: &IncidentWave,
    cfg: &SolverConfig,
) -> Result<ScatterResult, Failure> {
    let key = serde_json::to_string(&(env!("CARGO_PKG_VERSION"), surface, wave, cfg))
        .map_err(|e| Failure::Run(e.to_string()))?;
    let mut h = DefaultHasher::new();
    key.hash(&mut h);
    let path = dir.join(format!("reference-{:016x}.json", h.finish()));
    if let Some(entry) = fs::read(&path).ok().and_then(|b| serde_json::from_slice::<Entry>(&b).ok()) {
        if entry.key == key {
            return Ok(entry.result);
        }
    }
    let result = solve_grating(surface, wave, cfg)?;
    let entry = Entry { key, result };
    let stored = fs::create_dir_all(dir)
        .map_err(|e| e.to_string())
        .and_then(|_| serde_json::to_vec(&entry).map_err(|e| e.to_string()))
        .and_then(|bytes| fs::write(&path, bytes).map_err(|e| e.to_string()));
    if let Err(e) = stored {
        eprintln!("warning: reference solve not cached in {}: {e}", dir.display());
    }
    Ok(entry.result)
}
