//! Run manifests: everything needed to reproduce a run bit-exactly
//! (config hash, seed, command line) plus the result records.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub value: f64,
    pub std_error: f64,
    pub n_active: u32,
    pub n_inactive: u32,
    pub population: usize,
    pub histories: usize,
    pub seed: u64,
    pub lag1_autocorr: Option<f64>,
    pub extinct: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: String,
    pub config_sha256: String,
    pub seed: u64,
    pub workers: usize,
    pub command: Vec<String>,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub results: Vec<RunRecord>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        config_path: &Path,
        config_text: &str,
        seed: u64,
        workers: usize,
        results: Vec<RunRecord>,
        outputs: Vec<String>,
        wall_clock_seconds: f64,
    ) -> Self {
        let digest = Sha256::digest(config_text.as_bytes());
        let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Self {
            config_path: config_path.display().to_string(),
            config_sha256,
            seed,
            workers,
            command: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds,
            results,
            outputs,
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "{}", serde_json::to_string_pretty(self)?)
    }
}

/// JSON-lines result records: one object per estimator result.
pub fn write_results(path: &Path, records: &[RunRecord]) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    for r in records {
        writeln!(f, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}
