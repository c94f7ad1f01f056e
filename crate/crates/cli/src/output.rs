//! Artifact writing. Files land atomically and are removed again if the run
//! fails later on.

use std::fs;
use std::path::{Path, PathBuf};

use finite_gauge::hamiltonian::{DROP_TOL, HERMITICITY_TOL, REALITY_TOL};
use finite_gauge::spectra::DEGENERACY_TOL;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub tolerances: Value,
}

impl Metadata {
    pub fn new(command: &str, config: &Config) -> Result<Self, CliError> {
        let lanczos = config.lanczos()?;
        Ok(Metadata {
            tool: "fgauge",
            version: env!("CARGO_PKG_VERSION"),
            library_version: finite_gauge::VERSION,
            command: command.to_string(),
            config_hash: config.hash.clone(),
            seed: lanczos.seed,
            tolerances: json!({
                "lanczos_residual": lanczos.tol,
                "degeneracy": DEGENERACY_TOL,
                "drop": DROP_TOL,
                "hermiticity": HERMITICITY_TOL,
                "reality": REALITY_TOL,
            }),
        })
    }

    /// `# key: value` lines for CSV and plain-text artifacts.
    pub fn comment_block(&self) -> String {
        let v = serde_json::to_value(self).expect("metadata serializes");
        let mut out = String::new();
        for (k, v) in v.as_object().expect("object") {
            let text = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("# {k}: {text}\n"));
        }
        out
    }
}

/// Files written by the current run.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
    created_dir: bool,
}

impl Artifacts {
    pub fn new(dir: PathBuf) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::Config(format!("output.dir: {}: {e}", dir.display())))?;
        Ok(Artifacts {
            dir,
            written: Vec::new(),
            created_dir,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.partial"));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &path)?;
        self.track(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Registers a file produced elsewhere so a failed run removes it.
    pub fn track(&mut self, path: PathBuf) {
        self.written.push(path);
    }

    pub fn rollback(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Shortest round-trip form: integers without a fraction, everything else
/// as Rust's `Debug` (exponent notation for very small or large values).
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x}")
    } else {
        format!("{x:?}")
    }
}
