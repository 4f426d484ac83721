//! Dataset loaders for dense CSV and sparse `label idx:value` text files.
//!
//! Both loaders return the raw values; call [`redcut_core::dataset::normalize`]
//! before discretizing.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use redcut_core::dataset::{encode_labels, Dataset};
use redcut_core::linalg::Matrix;

use crate::error::{Error, Result};

/// Which CSV column holds the class labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    /// Zero-based column index.
    Index(usize),
    /// Header name; the file must then have a header row.
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// `last`, a zero-based index, or a column name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(if s == "last" {
            LabelColumn::Last
        } else if let Ok(i) = s.parse() {
            LabelColumn::Index(i)
        } else {
            LabelColumn::Name(s.to_string())
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Sparse,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "sparse" => Ok(Format::Sparse),
            _ => Err(format!("unknown format `{s}` (expected csv or sparse)")),
        }
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

/// Loads `path` in the given format. `label` only applies to CSV.
pub fn load(path: &Path, format: Format, label: &LabelColumn) -> Result<Dataset> {
    match format {
        Format::Csv => load_csv(path, label),
        Format::Sparse => load_sparse(path),
    }
}

pub fn load_csv(path: &Path, label: &LabelColumn) -> Result<Dataset> {
    read_csv(open(path)?, &dataset_name(path), label)
}

fn parse_value(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads comma-separated records. The first row is a header iff one of its
/// non-label cells does not parse as a number.
pub fn read_csv<R: Read>(reader: R, name: &str, label: &LabelColumn) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths {
                pos,
                expected_len,
                len,
            } => Error::Parse(format!(
                "row {}: expected {expected_len} columns, found {len}",
                pos.as_ref().map_or(0, |p| p.line())
            )),
            _ => Error::Parse(e.to_string()),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec);
    }
    let Some(first) = rows.first() else {
        return Err(Error::Parse("no instances".into()));
    };
    let width = first.len();
    if width < 2 {
        return Err(Error::Parse(
            "need at least one feature column and a label column".into(),
        ));
    }
    let label_col = match label {
        LabelColumn::Last => width - 1,
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => {
            return Err(Error::Config(format!(
                "label column {i} is out of range for {width} columns"
            )))
        }
        LabelColumn::Name(n) => first
            .iter()
            .position(|c| c == n)
            .ok_or_else(|| Error::Config(format!("no column named `{n}` in the first row")))?,
    };
    let has_header = first
        .iter()
        .enumerate()
        .any(|(c, cell)| c != label_col && parse_value(cell).is_none());
    if matches!(label, LabelColumn::Name(_)) && !has_header {
        return Err(Error::Config(
            "label column given by name but the file has no header row".into(),
        ));
    }

    let feature_cols: Vec<usize> = (0..width).filter(|&c| c != label_col).collect();
    let names = has_header.then(|| feature_cols.iter().map(|&c| first[c].to_string()).collect());
    let body = &rows[usize::from(has_header)..];
    if body.is_empty() {
        return Err(Error::Parse("no instances".into()));
    }

    let (m, n) = (feature_cols.len(), body.len());
    let mut values = vec![0.0; m * n];
    let mut raw_labels = Vec::with_capacity(n);
    for (j, rec) in body.iter().enumerate() {
        let line = rec.position().map_or(j + 1, |p| p.line() as usize);
        for (i, &c) in feature_cols.iter().enumerate() {
            values[i * n + j] = parse_value(&rec[c]).ok_or_else(|| {
                Error::Parse(format!(
                    "row {line}, column {}: `{}` is not a finite number",
                    c + 1,
                    &rec[c]
                ))
            })?;
        }
        raw_labels.push(rec[label_col].to_string());
    }
    let (labels, _) = encode_labels(&raw_labels);
    Ok(Dataset::new(
        name,
        Matrix::from_row_major(m, n, values),
        labels,
        names,
    )?)
}

pub fn load_sparse(path: &Path) -> Result<Dataset> {
    read_sparse(BufReader::new(open(path)?), &dataset_name(path))
}

/// Reads one instance per line: a class label followed by `index:value`
/// pairs with 1-based indices. Absent indices are zero; the feature count
/// is the largest index seen. Blank lines and `#` comments are skipped.
pub fn read_sparse<R: BufRead>(reader: R, name: &str) -> Result<Dataset> {
    let mut raw_labels = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut m = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::Parse(format!("line {lineno}: {e}")))?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = tokens.next().unwrap_or_default();
        let mut row = Vec::new();
        for tok in tokens {
            let bad = || Error::Parse(format!("line {lineno}: malformed token `{tok}`"));
            let (idx, val) = tok.split_once(':').ok_or_else(bad)?;
            let idx: usize = idx.parse().map_err(|_| bad())?;
            let val = parse_value(val).ok_or_else(bad)?;
            if idx == 0 {
                return Err(Error::Parse(format!(
                    "line {lineno}: feature indices start at 1, found `{tok}`"
                )));
            }
            if row.iter().any(|&(i, _)| i == idx - 1) {
                return Err(Error::Parse(format!("line {lineno}: index {idx} repeated")));
            }
            m = m.max(idx);
            row.push((idx - 1, val));
        }
        raw_labels.push(label.to_string());
        entries.push(row);
    }
    if entries.is_empty() {
        return Err(Error::Parse("no instances".into()));
    }
    if m == 0 {
        return Err(Error::Parse("no feature values in file".into()));
    }
    let n = entries.len();
    let mut values = vec![0.0; m * n];
    for (j, row) in entries.iter().enumerate() {
        for &(i, v) in row {
            values[i * n + j] = v;
        }
    }
    let (labels, _) = encode_labels(&raw_labels);
    Ok(Dataset::new(
        name,
        Matrix::from_row_major(m, n, values),
        labels,
        None,
    )?)
}
