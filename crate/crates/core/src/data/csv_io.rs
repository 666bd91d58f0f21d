use std::fmt::Write as _;
use std::path::Path;

use super::{Dataset, Task};
use crate::error::{IkfError, Result};

/// Selects the response column by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl From<&str> for ColumnRef {
    fn from(s: &str) -> Self {
        ColumnRef::Name(s.to_string())
    }
}

/// Reads a headed, comma-separated numeric table.
pub fn load_csv(path: impl AsRef<Path>, response: &ColumnRef, task: Task) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| IkfError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |e: csv::Error| IkfError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let response_col = match response {
        ColumnRef::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IkfError::MissingResponse(name.clone()))?,
        ColumnRef::Index(i) if *i < header.len() => *i,
        ColumnRef::Index(i) => return Err(IkfError::MissingResponse(format!("#{i}"))),
    };

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(IkfError::Csv {
                path: path.to_path_buf(),
                message: format!(
                    "line {line} has {} fields, header has {}",
                    record.len(),
                    header.len()
                ),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| IkfError::NonNumeric {
                line,
                column: header[j].clone(),
                value: field.to_string(),
            })?;
            if !value.is_finite() {
                return Err(IkfError::NonFinite {
                    line,
                    column: header[j].clone(),
                    value: field.to_string(),
                });
            }
            if j == response_col && task == Task::BinaryClassification && value != 0.0 && value != 1.0 {
                return Err(IkfError::BadLabel {
                    location: format!("line {line}"),
                    value,
                });
            }
            columns[j].push(value);
        }
    }

    let y = columns.remove(response_col);
    let mut names = header;
    names.remove(response_col);
    Dataset::from_columns(columns, y, task, Some(names))
}

/// Writes predictors followed by the response column `response_name`.
///
/// Floats use the shortest representation that parses back to the same bits.
pub fn save_csv(data: &Dataset, path: impl AsRef<Path>, response_name: &str) -> Result<()> {
    let mut out = String::with_capacity(data.n() * (data.p() + 1) * 20);
    for name in data.names() {
        out.push_str(name);
        out.push(',');
    }
    out.push_str(response_name);
    out.push('\n');
    for i in 0..data.n() {
        for j in 0..data.p() {
            let _ = write!(out, "{},", data.value(i, j));
        }
        let _ = writeln!(out, "{}", data.y()[i]);
    }
    crate::report::write_atomic(path.as_ref(), out.as_bytes())
}
