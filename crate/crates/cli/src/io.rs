//! CSV plumbing shared by the commands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Streaming reader over a `value` column with an optional `index` column.
/// Rows are numbered from 1 (the header is row 0) so error messages can
/// point at the offending line.
pub struct ValueReader {
    records: csv::StringRecordsIntoIter<File>,
    value_col: usize,
    index_col: Option<usize>,
    row: usize,
}

impl ValueReader {
    pub fn open(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.kind() {
                csv::ErrorKind::Io(_) => CliError::Io {
                    path: path.to_path_buf(),
                    source: io::Error::other(e.to_string()),
                },
                _ => CliError::Input { row: 0, message: e.to_string() },
            })?;
        let headers = reader
            .headers()
            .map_err(|e| CliError::Input { row: 0, message: format!("bad header: {e}") })?;
        let value_col = headers
            .iter()
            .position(|h| h == "value")
            .ok_or_else(|| CliError::Input { row: 0, message: "no 'value' column in header".into() })?;
        let index_col = headers.iter().position(|h| h == "index");
        Ok(ValueReader { records: reader.into_records(), value_col, index_col, row: 0 })
    }

    /// Next data row as (file index if present, value).
    pub fn next_row(&mut self) -> Option<Result<(Option<i64>, f64)>> {
        let record = self.records.next()?;
        self.row += 1;
        let row = self.row;
        let parsed = record
            .map_err(|e| CliError::Input { row, message: e.to_string() })
            .and_then(|rec| {
                let raw = rec.get(self.value_col).ok_or_else(|| CliError::Input {
                    row,
                    message: "missing value field".into(),
                })?;
                let value: f64 = raw.parse().map_err(|_| CliError::Input {
                    row,
                    message: format!("value '{raw}' is not a number"),
                })?;
                if !value.is_finite() {
                    return Err(CliError::Input { row, message: format!("value {value} is not finite") });
                }
                let index = match self.index_col {
                    None => None,
                    Some(col) => {
                        let raw = rec.get(col).ok_or_else(|| CliError::Input {
                            row,
                            message: "missing index field".into(),
                        })?;
                        Some(raw.parse::<i64>().map_err(|_| CliError::Input {
                            row,
                            message: format!("index '{raw}' is not an integer"),
                        })?)
                    }
                };
                Ok((index, value))
            });
        Some(parsed)
    }

    /// Data rows consumed so far.
    pub fn row(&self) -> usize {
        self.row
    }
}

/// Buffered writer to the given path, or stdout when none is set.
pub fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            let file = File::create(p)
                .map_err(|source| CliError::Io { path: p.clone(), source })?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}
