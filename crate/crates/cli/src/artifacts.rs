//! Artifact files: `<subcommand>-<config-hash>.{json,csv}` with the config
//! echoed verbatim.

use std::fs;
use std::path::{Path, PathBuf};

use levy_passage::LevyModel;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub subcommand: &'a str,
    pub config_hash: &'a str,
    pub seed: Option<u64>,
    pub config: &'a str,
    pub model: Option<&'a LevyModel>,
    pub model_fingerprint: Option<String>,
    pub result: T,
}

pub struct Sink {
    pub dir: PathBuf,
    pub subcommand: &'static str,
    pub hash: String,
    pub config: String,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })?;
    println!("{}", path.display());
    Ok(())
}

impl Sink {
    pub fn new(dir: &Path, subcommand: &'static str, hash: &str, config: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            subcommand,
            hash: hash.to_string(),
            config: config.to_string(),
        })
    }

    pub fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}-{}{suffix}", self.subcommand, self.hash))
    }

    pub fn json<T: Serialize>(&self, seed: Option<u64>, model: Option<&LevyModel>, result: T) -> Result<(), CliError> {
        let env = Envelope {
            subcommand: self.subcommand,
            config_hash: &self.hash,
            seed,
            config: &self.config,
            model,
            model_fingerprint: model.map(LevyModel::fingerprint),
            result,
        };
        let mut text = serde_json::to_string_pretty(&env).expect("artifact serialises");
        text.push('\n');
        write(&self.path(".json"), text.as_bytes())
    }

    /// Writes a CSV preceded by `# `-prefixed config lines.
    pub fn csv(&self, suffix: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>) -> Result<(), CliError> {
        let path = self.path(suffix);
        let mut buf = Vec::new();
        for line in self.config.lines() {
            buf.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        body(&mut buf).map_err(|e| CliError::Write {
            path: path.clone(),
            source: std::io::Error::other(e),
        })?;
        write(&path, &buf)
    }
}

/// Writes rows of displayable cells under a header.
pub fn table<W: std::io::Write>(w: W, header: &[&str], rows: &[Vec<String>]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

/// `NaN` marks an undefined statistic, an empty cell a missing one.
pub fn cell(x: f64) -> String {
    x.to_string()
}

pub fn opt_cell(x: Option<f64>) -> String {
    x.map_or(String::new(), cell)
}
