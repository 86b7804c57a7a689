use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use triplet_odmr::experiments::{ExperimentConfig, FitReport, Trace};

use crate::Failure;

/// Everything needed to reproduce a run, written next to its CSV.
#[derive(Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub command: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub seed: u64,
    #[serde(default)]
    pub sequence: Option<String>,
    #[serde(default)]
    pub columns: Vec<String>,
    #[serde(default)]
    pub points: usize,
    #[serde(default, skip_deserializing)]
    pub fits: Vec<FitReport>,
    pub config: ExperimentConfig,
}

impl Sidecar {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let sidecar: Sidecar = serde_json::from_str(&text)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        sidecar
            .config
            .validate()
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        Ok(sidecar)
    }
}

pub fn is_sidecar(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

/// Writes `<name>.csv` and `<name>.json` under `dir`; returns the CSV path.
pub fn write(dir: &Path, trace: &Trace, sidecar: &Sidecar) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
    let csv = dir.join(format!("{}.csv", sidecar.name));
    let json = dir.join(format!("{}.json", sidecar.name));
    let body = serde_json::to_string_pretty(sidecar).map_err(|e| Failure::io(e.to_string()))?;
    fs::write(&csv, trace.to_csv()).map_err(|e| Failure::io(format!("{}: {e}", csv.display())))?;
    fs::write(&json, body + "\n").map_err(|e| Failure::io(format!("{}: {e}", json.display())))?;
    log::info!("wrote {} and {}", csv.display(), json.display());
    Ok(csv)
}
