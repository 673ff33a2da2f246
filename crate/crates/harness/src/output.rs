//! Files of one experiment run. All writes go through [`OutputDir`], which
//! only accepts plain file names inside its root.

use std::fs;
use std::path::{Path, PathBuf};

use csv::{Terminator, WriterBuilder};
use dbmlab_core::ensembles::EnsembleSample;

use crate::error::HarnessError;

#[derive(Clone, Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, HarnessError> {
        fs::create_dir_all(root).map_err(|source| HarnessError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Names of the files written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn target(&mut self, name: &str) -> Result<PathBuf, HarnessError> {
        let plain = !name.is_empty()
            && name != "."
            && name != ".."
            && !name.contains(['/', '\\'])
            && Path::new(name).file_name().is_some_and(|f| f == name);
        if !plain {
            return Err(HarnessError::OutsideOutput(name.to_string()));
        }
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(self.root.join(name))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), HarnessError> {
        let path = self.target(name)?;
        fs::write(&path, text).map_err(|source| HarnessError::Io { path, source })
    }

    /// Comma-separated table with a header row and LF line endings.
    pub fn write_csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), HarnessError>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.target(name)?;
        let mut w = WriterBuilder::new()
            .terminator(Terminator::Any(b'\n'))
            .from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|source| HarnessError::Io { path, source })
    }

    /// `sample_index,i,lambda` for the first `limit` samples.
    pub fn write_spectra(&mut self, name: &str, samples: &[EnsembleSample], limit: usize) -> Result<(), HarnessError> {
        let rows = samples.iter().take(limit).enumerate().flat_map(|(s, sample)| {
            sample
                .eigenvalues
                .iter()
                .enumerate()
                .map(move |(i, l)| vec![s.to_string(), i.to_string(), num(*l)])
        });
        self.write_csv(name, &["sample_index", "i", "lambda"], rows)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}
