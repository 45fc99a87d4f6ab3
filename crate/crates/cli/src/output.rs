//! Deterministic output files: every file starts with comment lines naming
//! the tool version and config hash, and numbers use Rust's shortest
//! round-trip formatting.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct OutputDir {
    dir: PathBuf,
    stem: String,
    hash: String,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path, potential_id: &str, hash: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            stem: format!("{potential_id}-{hash}"),
            hash: hash.to_string(),
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(format!("{}-{name}", self.stem));
        self.written.push(p.clone());
        p
    }

    fn preamble(&self, meta: &[(&str, String)]) -> String {
        let mut s = format!("# gsdecay {VERSION}\n# config {}\n", self.hash);
        for (k, v) in meta {
            s.push_str(&format!("# {k} {v}\n"));
        }
        s
    }

    /// CSV with a comment preamble, a header row and string rows.
    pub fn csv(
        &mut self,
        name: &str,
        meta: &[(&str, String)],
        header: &[String],
        rows: &[Vec<String>],
    ) -> Result<(), CliError> {
        let preamble = self.preamble(meta);
        let path = self.path(name);
        let mut file = fs::File::create(&path)?;
        file.write_all(preamble.as_bytes())?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plain `key = value` text report.
    pub fn text(&mut self, name: &str, lines: &[(String, String)]) -> Result<(), CliError> {
        let mut s = self.preamble(&[]);
        for (k, v) in lines {
            s.push_str(&format!("{k} = {v}\n"));
        }
        let path = self.path(name);
        fs::write(path, s)?;
        Ok(())
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn point(x: &[f64]) -> String {
    x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ")
}
