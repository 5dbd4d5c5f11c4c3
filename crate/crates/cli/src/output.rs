use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::Format;

/// Destination for the files one command writes. Every written path is
/// echoed on stdout in order.
pub struct Output {
    dir: PathBuf,
    pub format: Format,
}

impl Output {
    pub fn new(dir: &Path, format: Format) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            format,
        })
    }

    /// Writes `stem.csv` or `stem.json`, choosing the writer by format.
    pub fn emit(
        &self,
        stem: &str,
        csv: impl FnOnce(&mut dyn Write) -> Result<()>,
        json: impl FnOnce() -> Result<String>,
    ) -> Result<PathBuf> {
        match self.format {
            Format::Csv => self.write_with(&format!("{stem}.csv"), csv),
            Format::Json => self.write_with(&format!("{stem}.json"), |w| {
                w.write_all(json()?.as_bytes())?;
                w.write_all(b"\n")?;
                Ok(())
            }),
        }
    }

    /// Rows of flat records, as CSV with a header or as a JSON array.
    pub fn records<T: Serialize>(&self, stem: &str, rows: &[T]) -> Result<PathBuf> {
        self.emit(
            stem,
            |w| {
                let mut wtr = csv::Writer::from_writer(w);
                for r in rows {
                    wtr.serialize(r)?;
                }
                wtr.flush()?;
                Ok(())
            },
            || Ok(serde_json::to_string_pretty(rows)?),
        )
    }

    /// One flat record: a one-row CSV or a one-element JSON array.
    pub fn value<T: Serialize>(&self, stem: &str, v: &T) -> Result<PathBuf> {
        self.records(stem, std::slice::from_ref(v))
    }

    fn write_with(&self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        body(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush()?;
        println!("wrote {}", path.display());
        Ok(path)
    }
}
