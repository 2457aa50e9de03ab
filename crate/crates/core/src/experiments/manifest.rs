use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ExperimentKind};
use super::rows::{csv_bytes, ResultRow};
use super::run::{run_experiment, RunOptions, RunOutput};
use crate::error::{Error, Result};

pub const MANIFEST_FORMAT: u32 = 1;
pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Everything needed to regenerate a results file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: u32,
    pub version: String,
    pub command: ExperimentKind,
    pub extended: bool,
    pub timing: bool,
    pub seeds: Vec<u64>,
    pub rows: usize,
    pub config_sha256: String,
    pub results_sha256: String,
    /// Effective configuration, CLI overrides applied.
    pub config: String,
    pub solver_specs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn new(kind: ExperimentKind, cfg: &ExperimentConfig, opts: RunOptions, output: &RunOutput) -> Result<Self> {
        let config = cfg.to_toml()?;
        Ok(Self {
            format: MANIFEST_FORMAT,
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: kind,
            extended: opts.extended,
            timing: opts.timing,
            seeds: cfg.seeds.clone(),
            rows: output.rows.len(),
            config_sha256: sha256_hex(config.as_bytes()),
            results_sha256: sha256_hex(&csv_bytes(&output.rows)?),
            config,
            solver_specs: output.solver_specs.clone(),
        })
    }

    pub fn to_text(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text)?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::Config(format!("unsupported manifest format {}", m.format)));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn options(&self) -> RunOptions {
        RunOptions { extended: self.extended, timing: self.timing }
    }
}

/// Files written by [`write_run`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunFiles {
    pub results: PathBuf,
    pub manifest: PathBuf,
}

/// Writes `results.csv` and `manifest.txt` under `dir`.
pub fn write_run(
    dir: &Path,
    kind: ExperimentKind,
    cfg: &ExperimentConfig,
    opts: RunOptions,
    output: &RunOutput,
) -> Result<RunFiles> {
    fs::create_dir_all(dir)?;
    let files = RunFiles { results: dir.join(RESULTS_FILE), manifest: dir.join(MANIFEST_FILE) };
    fs::write(&files.results, csv_bytes(&output.rows)?)?;
    fs::write(&files.manifest, Manifest::new(kind, cfg, opts, output)?.to_text()?)?;
    Ok(files)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub config_hash_ok: bool,
    /// Replayed CSV hashes to the recorded value.
    pub results_hash_ok: bool,
    /// Replayed CSV equals the given file byte for byte, when one was given.
    pub csv_identical: Option<bool>,
    pub version_matches: bool,
    pub rows: Vec<ResultRow>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.config_hash_ok && self.results_hash_ok && self.csv_identical.unwrap_or(true)
    }
}

/// Checks the embedded config against its hash and, if it matches, replays
/// the run and compares the regenerated CSV with the recorded hash and
/// optionally with an existing results file.
pub fn verify_manifest(manifest: &Manifest, csv: Option<&Path>) -> Result<Verification> {
    let version_matches = manifest.version == env!("CARGO_PKG_VERSION");
    if sha256_hex(manifest.config.as_bytes()) != manifest.config_sha256 {
        return Ok(Verification {
            config_hash_ok: false,
            results_hash_ok: false,
            csv_identical: None,
            version_matches,
            rows: Vec::new(),
        });
    }
    let cfg = ExperimentConfig::from_toml(&manifest.config)?;
    let output = run_experiment(manifest.command, &cfg, manifest.options())?;
    let bytes = csv_bytes(&output.rows)?;
    let csv_identical = match csv {
        Some(path) => Some(fs::read(path)? == bytes),
        None => None,
    };
    Ok(Verification {
        config_hash_ok: true,
        results_hash_ok: sha256_hex(&bytes) == manifest.results_sha256,
        csv_identical,
        version_matches,
        rows: output.rows,
    })
}
