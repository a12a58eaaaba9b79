use std::io::Read;
use std::path::Path;

use clap::ValueEnum;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What to do with rows that have an empty or `NA` cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    #[default]
    DropRow,
    Error,
}

/// Expected columns of an input file.
#[derive(Debug, Clone, PartialEq)]
pub enum Schema {
    /// Every column, whatever the header.
    Any,
    /// Exactly this many columns.
    Count(usize),
    /// These columns by header name, in this order; others are ignored.
    Names(Vec<String>),
}

/// A parsed numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub data: Array2<f64>,
    pub columns: Vec<String>,
    pub dropped_rows: usize,
    /// Header columns present in the file but not selected.
    pub ignored_columns: Vec<String>,
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

/// Reads a headered CSV file of reals.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &Schema, policy: MissingPolicy) -> Result<Ingested> {
    let file = std::fs::File::open(path.as_ref())?;
    ingest_reader(file, schema, policy)
}

/// [`ingest_csv`] on any reader.
pub fn ingest_reader<R: Read>(reader: R, schema: &Schema, policy: MissingPolicy) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let select: Vec<usize> = match schema {
        Schema::Any => (0..header.len()).collect(),
        Schema::Count(c) => {
            if header.len() != *c {
                return Err(Error::Schema(format!("expected {c} columns, found {}", header.len())));
            }
            (0..*c).collect()
        }
        Schema::Names(names) => names
            .iter()
            .map(|n| {
                header
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| Error::Schema(format!("column {n:?} not in header {header:?}")))
            })
            .collect::<Result<_>>()?,
    };
    if select.is_empty() {
        return Err(Error::Schema("no columns selected".into()));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    let mut dropped = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec.get(0).is_some_and(|c| c.trim().is_empty()) {
            continue;
        }
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let mut row = Vec::with_capacity(select.len());
        let mut missing = None;
        for &j in &select {
            let cell = &rec[j];
            if is_missing(cell) {
                missing = Some(j);
                break;
            }
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {:?}: cannot parse {cell:?} as a number", header[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("column {:?}: non-finite value {cell:?}", header[j]),
                });
            }
            row.push(v);
        }
        match (missing, policy) {
            (None, _) => {
                values.extend(row);
                rows += 1;
            }
            (Some(_), MissingPolicy::DropRow) => dropped += 1,
            (Some(j), MissingPolicy::Error) => {
                return Err(Error::Parse {
                    line,
                    message: format!("missing value in column {:?}", header[j]),
                })
            }
        }
    }
    if rows == 0 {
        return Err(Error::InvalidInput("no complete data rows".into()));
    }
    let data = Array2::from_shape_vec((rows, select.len()), values).expect("each kept row has one value per column");
    let ignored_columns = (0..header.len()).filter(|j| !select.contains(j)).map(|j| header[j].clone()).collect();
    Ok(Ingested {
        data,
        columns: select.iter().map(|&j| header[j].clone()).collect(),
        dropped_rows: dropped,
        ignored_columns,
    })
}

/// Writes a matrix as CSV with the given header.
pub fn write_matrix_csv<W: std::io::Write>(w: W, header: &[String], data: &Array2<f64>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in data.outer_iter() {
        out.write_record(row.iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}
