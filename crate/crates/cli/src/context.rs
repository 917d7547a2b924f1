//! Shared command context: seeding, threading, output locations, run
//! manifests, and the exit-code policy.

use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Errors bucketed by exit code: 1 io, 2 invalid input/physics, 3 internal.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Invalid(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Invalid(m) | CliError::Internal(m) => m,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<spdc_optics::OpticsError> for CliError {
    fn from(e: spdc_optics::OpticsError) -> Self {
        use spdc_optics::OpticsError::*;
        match e {
            Io(err) => CliError::Io(err.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<spdc_schmidt::SchmidtError> for CliError {
    fn from(e: spdc_schmidt::SchmidtError) -> Self {
        use spdc_schmidt::SchmidtError::*;
        match e {
            Optics(inner) => inner.into(),
            NotNormalized(_) => CliError::Internal(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<spdc_dataset::DatasetError> for CliError {
    fn from(e: spdc_dataset::DatasetError) -> Self {
        use spdc_dataset::DatasetError::*;
        match e {
            Io(err) => CliError::Io(err.to_string()),
            BadMagic | BadVersion { .. } | Truncated { .. } | Checksum { .. } | Header(_)
            | InvalidTarget { .. } => CliError::Io(e.to_string()),
            Optics(inner) => inner.into(),
            Schmidt(inner) => inner.into(),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<spdc_oamnet::OamnetError> for CliError {
    fn from(e: spdc_oamnet::OamnetError) -> Self {
        use spdc_oamnet::OamnetError::*;
        match e {
            Io(err) => CliError::Io(err.to_string()),
            BadMagic | BadVersion(_) | Checksum | Truncated | Header(_) | LayoutMismatch(_) => {
                CliError::Io(e.to_string())
            }
            NonFiniteLoss { .. } => CliError::Internal(e.to_string()),
            Nn(inner) => CliError::Internal(inner.to_string()),
            Metric(inner) => CliError::Internal(inner.to_string()),
            Schmidt(inner) => inner.into(),
            Dataset(inner) => inner.into(),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<spdc_metrics::MetricError> for CliError {
    fn from(e: spdc_metrics::MetricError) -> Self {
        CliError::Internal(e.to_string())
    }
}

/// Execution context shared by every command.
pub struct Ctx {
    pub seed: u64,
    pub strict: bool,
    pub jobs: usize,
    pub out_dir: PathBuf,
    pub argv: Vec<String>,
    started: Instant,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    args: &'a [String],
    seed: u64,
    strict: bool,
    jobs: usize,
    tool_version: &'a str,
    config_hashes: &'a serde_json::Map<String, serde_json::Value>,
    wall_time_s: f64,
}

impl Ctx {
    pub fn new(seed: u64, strict: bool, jobs: usize, out_dir: PathBuf) -> CliResult<Self> {
        std::fs::create_dir_all(&out_dir)?;
        Ok(Ctx {
            seed,
            strict,
            jobs,
            out_dir,
            argv: std::env::args().collect(),
            started: Instant::now(),
        })
    }

    pub fn out_path(&self, name: impl AsRef<Path>) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Writes the run manifest for a finished command.
    pub fn emit_manifest(
        &self,
        command: &str,
        config_hashes: &[(&str, String)],
    ) -> CliResult<PathBuf> {
        let mut hashes = serde_json::Map::new();
        for (k, v) in config_hashes {
            hashes.insert(k.to_string(), serde_json::Value::String(v.clone()));
        }
        let manifest = RunManifest {
            command,
            args: &self.argv,
            seed: self.seed,
            strict: self.strict,
            jobs: self.jobs,
            tool_version: env!("CARGO_PKG_VERSION"),
            config_hashes: &hashes,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        let path = self.out_path(format!("{command}-run.json"));
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(&path, json)?;
        Ok(path)
    }
}
