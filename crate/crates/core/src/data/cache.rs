//! Lossless CSV storage of datasets. Floats are written in shortest
//! round-trip form, so a write followed by a read reproduces every bit.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::models::{LogisticRow, MixtureRow};

pub trait TabularRow: Sized {
    fn header(first: &Self) -> Vec<String>;
    fn to_fields(&self) -> Vec<String>;
    fn from_fields(fields: &csv::StringRecord, line: usize) -> Result<Self>;
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("bad or missing field {}", i + 1),
        })
}

impl TabularRow for f64 {
    fn header(_: &Self) -> Vec<String> {
        vec!["x".into()]
    }
    fn to_fields(&self) -> Vec<String> {
        vec![self.to_string()]
    }
    fn from_fields(rec: &csv::StringRecord, line: usize) -> Result<Self> {
        field(rec, 0, line)
    }
}

impl TabularRow for u8 {
    fn header(_: &Self) -> Vec<String> {
        vec!["y".into()]
    }
    fn to_fields(&self) -> Vec<String> {
        vec![self.to_string()]
    }
    fn from_fields(rec: &csv::StringRecord, line: usize) -> Result<Self> {
        field(rec, 0, line)
    }
}

impl TabularRow for LogisticRow {
    fn header(first: &Self) -> Vec<String> {
        let mut h: Vec<String> = (1..=first.x.len()).map(|j| format!("x{j}")).collect();
        h.push("y".into());
        h
    }
    fn to_fields(&self) -> Vec<String> {
        let mut f: Vec<String> = self.x.iter().map(f64::to_string).collect();
        f.push(self.y.to_string());
        f
    }
    fn from_fields(rec: &csv::StringRecord, line: usize) -> Result<Self> {
        let p = rec.len().saturating_sub(1);
        Ok(Self {
            x: (0..p).map(|i| field(rec, i, line)).collect::<Result<_>>()?,
            y: field(rec, p, line)?,
        })
    }
}

impl TabularRow for MixtureRow {
    fn header(_: &Self) -> Vec<String> {
        vec!["x1".into(), "x2".into(), "y".into()]
    }
    fn to_fields(&self) -> Vec<String> {
        vec![self.x1.to_string(), self.x2.to_string(), self.y.to_string()]
    }
    fn from_fields(rec: &csv::StringRecord, line: usize) -> Result<Self> {
        Ok(Self {
            x1: field(rec, 0, line)?,
            x2: field(rec, 1, line)?,
            y: field(rec, 2, line)?,
        })
    }
}

pub fn write_dataset_csv<R: TabularRow>(data: &Dataset<R>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(R::header(&data.rows()[0]))?;
    for row in data.rows() {
        w.write_record(row.to_fields())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset_csv<R: TabularRow>(path: &Path) -> Result<Dataset<R>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push(R::from_fields(&rec, line)?);
    }
    Dataset::new(rows)
}
