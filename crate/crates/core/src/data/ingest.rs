use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::models::LogisticRow;

/// How the binary label is derived from the raw label column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "kebab-case")]
pub enum LabelRule {
    /// `y = 1` iff the column equals the value.
    Equals(f64),
    /// `y = 1` iff the column is strictly greater than the value.
    GreaterThan(f64),
}

impl Default for LabelRule {
    fn default() -> Self {
        LabelRule::Equals(2.0)
    }
}

impl LabelRule {
    pub fn apply(self, v: f64) -> u8 {
        u8::from(match self {
            LabelRule::Equals(c) => v == c,
            LabelRule::GreaterThan(c) => v > c,
        })
    }

    pub fn describe(self) -> String {
        match self {
            LabelRule::Equals(c) => format!("y = 1 iff label == {c}"),
            LabelRule::GreaterThan(c) => format!("y = 1 iff label > {c}"),
        }
    }
}

fn default_delimiter() -> char {
    ','
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularSource {
    pub path: PathBuf,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// `None` detects a header from a non-numeric first record.
    #[serde(default)]
    pub has_header: Option<bool>,
    /// Zero-based label column; the last column when absent.
    #[serde(default)]
    pub label_column: Option<usize>,
    #[serde(default)]
    pub label_rule: LabelRule,
    /// Prepend a constant 1 to every standardized feature vector.
    #[serde(default = "default_true")]
    pub intercept: bool,
    #[serde(default)]
    pub row_limit: Option<usize>,
}

impl TabularSource {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            delimiter: ',',
            has_header: None,
            label_column: None,
            label_rule: LabelRule::default(),
            intercept: true,
            row_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub data: Dataset<LogisticRow>,
    pub positives: usize,
    /// Fraction of rows with `y = 1`.
    pub class_balance: f64,
    /// Raw means and population standard deviations used to standardize.
    pub feature_means: Vec<f64>,
    pub feature_sds: Vec<f64>,
    pub label_rule: String,
}

fn parse_field(field: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("column {} is not numeric: '{field}'", column + 1),
    })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse {
            line,
            message: format!("column {} is not finite", column + 1),
        })
    }
}

/// Reads the first `n_rows` data rows of `src`, keeping the first `n_features`
/// non-label columns standardized to zero mean and unit (population) variance.
pub fn ingest_csv(src: &TabularSource, n_features: usize, n_rows: usize) -> Result<Ingested> {
    if n_features == 0 || n_rows == 0 {
        return Err(Error::Config("need at least one feature and one row".into()));
    }
    if !src.delimiter.is_ascii() {
        return Err(Error::Config("delimiter must be a single ASCII character".into()));
    }
    let n_rows = src.row_limit.map_or(n_rows, |l| l.min(n_rows));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(src.delimiter as u8)
        .from_path(&src.path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(&src.path, io),
            other => Error::Config(format!("{other:?}")),
        })?;

    let mut features: Vec<Vec<f64>> = Vec::with_capacity(n_rows);
    let mut labels: Vec<u8> = Vec::with_capacity(n_rows);
    let mut record = csv::StringRecord::new();
    let mut first = true;
    while features.len() < n_rows {
        if !reader.read_record(&mut record)? {
            break;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if std::mem::take(&mut first) {
            let header = src
                .has_header
                .unwrap_or_else(|| record.iter().any(|f| f.trim().parse::<f64>().is_err()));
            if header {
                continue;
            }
        }
        let width = record.len();
        let label_col = src.label_column.unwrap_or(width.saturating_sub(1));
        if width < n_features + 1 || label_col >= width {
            return Err(Error::Parse {
                line,
                message: format!("expected at least {} columns, found {width}", n_features + 1),
            });
        }
        let label = parse_field(&record[label_col], line, label_col)?;
        let x = (0..width)
            .filter(|&c| c != label_col)
            .take(n_features)
            .map(|c| parse_field(&record[c], line, c))
            .collect::<Result<Vec<f64>>>()?;
        features.push(x);
        labels.push(src.label_rule.apply(label));
    }
    if features.len() < n_rows {
        return Err(Error::InsufficientRows {
            requested: n_rows,
            available: features.len(),
        });
    }

    let n = n_rows as f64;
    let means: Vec<f64> = (0..n_features)
        .map(|j| features.iter().map(|x| x[j]).sum::<f64>() / n)
        .collect();
    let sds: Vec<f64> = (0..n_features)
        .map(|j| (features.iter().map(|x| (x[j] - means[j]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    if let Some(j) = sds.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::DegenerateSample(format!("feature column {} is constant", j + 1)));
    }
    let rows: Vec<LogisticRow> = features
        .into_iter()
        .zip(&labels)
        .map(|(raw, &y)| {
            let mut x = Vec::with_capacity(n_features + usize::from(src.intercept));
            if src.intercept {
                x.push(1.0);
            }
            x.extend(raw.iter().zip(means.iter().zip(&sds)).map(|(v, (m, s))| (v - m) / s));
            LogisticRow { x, y }
        })
        .collect();
    let positives = labels.iter().map(|&y| y as usize).sum();
    Ok(Ingested {
        data: Dataset::new(rows)?,
        positives,
        class_balance: positives as f64 / n,
        feature_means: means,
        feature_sds: sds,
        label_rule: src.label_rule.describe(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn fixture(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    const TEN: &str = "a,b,c,type\n\
        1,10,0.5,2\n2,11,0.1,1\n3,9,0.7,2\n4,14,0.2,3\n5,12,0.9,2\n\
        6,8,0.3,1\n7,13,0.4,2\n8,10,0.6,7\n9,11,0.8,2\n10,15,0.0,1\n";

    #[test]
    fn standardized_columns() {
        let f = fixture(TEN);
        let got = ingest_csv(&TabularSource::new(f.path()), 3, 10).unwrap();
        assert_eq!(got.data.n(), 10);
        assert_eq!(got.positives, 5);
        for j in 1..4 {
            let col: Vec<f64> = got.data.rows().iter().map(|r| r.x[j]).collect();
            let m = col.iter().sum::<f64>() / 10.0;
            let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 10.0;
            assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
        }
        assert!(got.data.rows().iter().all(|r| r.x[0] == 1.0));
    }

    #[test]
    fn malformed_row_names_line() {
        let bad = TEN.replace("6,8,0.3,1", "6,8,,1");
        let f = fixture(&bad);
        match ingest_csv(&TabularSource::new(f.path()), 3, 10) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn too_many_rows_requested() {
        let f = fixture(TEN);
        assert!(matches!(
            ingest_csv(&TabularSource::new(f.path()), 3, 11),
            Err(Error::InsufficientRows {
                requested: 11,
                available: 10
            })
        ));
    }

    #[test]
    fn headerless_with_limit() {
        let body: String = TEN.lines().skip(1).map(|l| format!("{l}\n")).collect();
        let f = fixture(&body);
        let mut src = TabularSource::new(f.path());
        src.row_limit = Some(4);
        let got = ingest_csv(&src, 2, 10).unwrap();
        assert_eq!(got.data.n(), 4);
        assert_eq!(got.data.rows()[0].x.len(), 3);
    }
}
