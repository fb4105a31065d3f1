//! Atomic artifact writes and the run manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Collects the files written by one job.
pub struct Artifacts {
    dir: PathBuf,
    stem: String,
    pub written: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path, stem: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Artifacts { dir: dir.to_path_buf(), stem: stem.to_string(), written: Vec::new() })
    }

    /// Writes `<stem><suffix>` through a temporary file in the same directory.
    pub fn write(&mut self, suffix: &str, fill: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
        let name = format!("{}{}", self.stem, suffix);
        let path = self.dir.join(&name);
        let tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            fill(&mut w)?;
            w.flush().map_err(|e| CliError::io(&path, e))?;
        }
        tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
        self.written.push(name);
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, suffix: &str, value: &T) -> Result<(), CliError> {
        self.write(suffix, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(w).map_err(|e| CliError::Io(e.to_string()))
        })
    }

    /// A table from one of the library's CSV writers.
    pub fn csv<E: std::fmt::Display>(&mut self, suffix: &str, fill: impl FnOnce(&mut dyn Write) -> Result<(), E>) -> Result<(), CliError> {
        self.write(suffix, |w| fill(w).map_err(|e| CliError::Io(e.to_string())))
    }
}

#[derive(Serialize)]
pub struct Manifest<'a, P: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub parameters: &'a P,
    pub format: &'a str,
    pub seed: u64,
    pub workers: usize,
    pub outputs: &'a [String],
    pub wall_time_seconds: f64,
}
