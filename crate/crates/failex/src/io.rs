//! File helpers and the dataset CSV format.
//!
//! A dataset file has one header row naming the variables and one row per
//! trial. Continuous values are written in their shortest round-trip decimal
//! form, so reading a file back reproduces every value exactly. Labels are
//! written as plain strings.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use failex_core::{Dataset, Domain, Error as CoreError, Value, VariableSpec};
use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
}

/// Writes `contents` to `path` in one go.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io { path: path.into(), source })
}

/// Fails unless `path` is an existing regular file.
pub fn check_input(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::input(format!("{}: no such file", path.display())))
    }
}

/// Fails unless the directory that would hold `path` exists and `path` is
/// not itself a directory.
pub fn check_output(path: &Path) -> Result<()> {
    if path.is_dir() {
        return Err(Error::input(format!("{}: is a directory", path.display())));
    }
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if parent.is_dir() {
        Ok(())
    } else {
        Err(Error::input(format!("{}: directory {} does not exist", path.display(), parent.display())))
    }
}

/// A CSV file before any typing: header plus string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::from_reader(file).map_err(|source| Error::Csv { path: path.into(), source })
    }

    pub fn from_reader<R: Read>(reader: R) -> std::result::Result<Self, csv::Error> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(RawTable { headers, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Distinct values of a column, sorted.
    pub fn distinct(&self, col: usize) -> Vec<String> {
        let set: BTreeSet<&str> = self.rows.iter().map(|r| r[col].as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Types the cells according to `specs`. The header must name exactly
    /// the declared variables, in any order.
    pub fn to_dataset(&self, specs: Vec<VariableSpec>) -> Result<Dataset> {
        let mut cols = Vec::with_capacity(specs.len());
        for s in &specs {
            cols.push(self.column(&s.name).ok_or_else(|| Error::input(format!("CSV lacks column `{}`", s.name)))?);
        }
        if let Some(extra) = self.headers.iter().find(|h| !specs.iter().any(|s| &&s.name == h)) {
            return Err(Error::input(format!("CSV has unexpected column `{extra}`")));
        }
        if self.headers.len() != specs.len() {
            return Err(Error::input("CSV header repeats a column"));
        }
        let mut ds = Dataset::new(specs)?;
        for (r, raw) in self.rows.iter().enumerate() {
            let row = ds
                .variables()
                .iter()
                .zip(&cols)
                .map(|(spec, &c)| parse_cell(spec, &raw[c]).map_err(|e| Error::input(format!("line {}: {e}", r + 2))))
                .collect::<Result<Vec<_>>>()?;
            ds.push_row(row).map_err(|e| match e {
                CoreError::Row { source, .. } => Error::input(format!("line {}: {source}", r + 2)),
                other => other.into(),
            })?;
        }
        Ok(ds)
    }
}

fn parse_cell(spec: &VariableSpec, cell: &str) -> std::result::Result<Value, String> {
    match spec.domain {
        Domain::Continuous { .. } => match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Value::Number(v)),
            _ => Err(format!("`{}` is not a finite number: {cell:?}", spec.name)),
        },
        Domain::Labels(_) => Ok(Value::Label(cell.to_string())),
    }
}

/// Parses the raw text of a value for a declared variable.
pub fn parse_value(spec: &VariableSpec, cell: &str) -> Result<Value> {
    parse_cell(spec, cell.trim()).map_err(Error::Input)
}

/// Writes the dataset in declared variable order.
pub fn write_dataset<W: Write>(writer: W, ds: &Dataset) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ds.variables().iter().map(|v| v.name.as_str()))?;
    let mut cells = Vec::with_capacity(ds.variables().len());
    for row in ds.rows() {
        cells.clear();
        cells.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_file(path: &Path, ds: &Dataset) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.into(), source })?;
    write_dataset(BufWriter::new(file), ds).map_err(|source| Error::Csv { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn specs() -> Vec<VariableSpec> {
        vec![
            VariableSpec::continuous("x", -1.0, 1.0, 2),
            VariableSpec::categorical("c", &["a", "b"]),
            VariableSpec::outcome("o", &["0", "1"]),
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let mut ds = Dataset::new(specs()).unwrap();
        for (x, c, o) in [(0.1234567890123, "a", "1"), (-1.0, "b", "0"), (1e-9, "a", "0")] {
            ds.push_row(vec![Value::Number(x), Value::label(c), Value::label(o)]).unwrap();
        }
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,c,o\n0.1234567890123,a,1\n"));
        let back = RawTable::from_reader(&buf[..]).unwrap().to_dataset(specs()).unwrap();
        assert_eq!(back.rows(), ds.rows());
    }

    #[test]
    fn columns_may_be_reordered() {
        let raw = RawTable::from_reader("o,x,c\n1,0.5,b\n".as_bytes()).unwrap();
        let ds = raw.to_dataset(specs()).unwrap();
        assert_eq!(ds.rows()[0], vec![Value::Number(0.5), Value::label("b"), Value::label("1")]);
    }

    #[test]
    fn schema_mismatch_rejected() {
        let missing = RawTable::from_reader("x,c\n0.5,b\n".as_bytes()).unwrap();
        assert!(missing.to_dataset(specs()).is_err());
        let extra = RawTable::from_reader("x,c,o,z\n0.5,b,1,3\n".as_bytes()).unwrap();
        assert!(extra.to_dataset(specs()).is_err());
        let text = RawTable::from_reader("x,c,o\nabc,b,1\n".as_bytes()).unwrap();
        let err = text.to_dataset(specs()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let out_of_range = RawTable::from_reader("x,c,o\n0.5,b,1\n2.0,b,1\n".as_bytes()).unwrap();
        assert!(out_of_range.to_dataset(specs()).is_err());
        let bad_label = RawTable::from_reader("x,c,o\n0.5,z,1\n".as_bytes()).unwrap();
        assert!(bad_label.to_dataset(specs()).is_err());
    }

    #[test]
    fn distinct_is_sorted() {
        let raw = RawTable::from_reader("c\nb\na\nb\n".as_bytes()).unwrap();
        assert_eq!(raw.distinct(0), vec!["a", "b"]);
    }

    #[test]
    fn output_checks() {
        let dir = tempfile::tempdir().unwrap();
        assert!(check_output(&dir.path().join("x.csv")).is_ok());
        assert!(check_output(&dir.path().join("missing/x.csv")).is_err());
        assert!(check_output(dir.path()).is_err());
        assert!(check_input(&dir.path().join("x.csv")).is_err());
    }
}
