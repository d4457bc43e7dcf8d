//! Numeric CSV input and output.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use classo::Matrix;

use crate::error::{CliError, Result};
use crate::output::atomic_write;

/// Which input column holds the response: a 1-based position or a header
/// name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Index(usize),
    Name(String),
}

impl Default for ResponseColumn {
    fn default() -> Self {
        ResponseColumn::Index(1)
    }
}

impl FromStr for ResponseColumn {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        match s.parse::<usize>() {
            Ok(0) => Err("response column positions start at 1".into()),
            Ok(k) => Ok(ResponseColumn::Index(k)),
            Err(_) if s.is_empty() => Err("empty response column".into()),
            Err(_) => Ok(ResponseColumn::Name(s.to_string())),
        }
    }
}

/// A rectangular numeric table as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    /// Present when the first row was not numeric.
    pub header: Option<Vec<String>>,
    pub rows: usize,
    pub cols: usize,
    /// Row-major values.
    pub values: Vec<f64>,
}

impl RawTable {
    /// Header names, or `col1, col2, …` when the file had none.
    pub fn names(&self) -> Vec<String> {
        match &self.header {
            Some(h) => h.clone(),
            None => (1..=self.cols).map(|k| format!("col{k}")).collect(),
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.values[i * self.cols + j])
            .collect()
    }
}

/// Response, predictors and predictor names split out of a [`RawTable`].
#[derive(Debug, Clone)]
pub struct Dataset {
    pub response: Vec<f64>,
    pub response_name: String,
    pub predictors: Matrix,
    pub names: Vec<String>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn p(&self) -> usize {
        self.predictors.ncols()
    }
}

/// Read a numeric CSV. The header is detected: a first row with a non-empty
/// cell that does not parse as a number is taken as column names.
pub fn read_table(path: &Path) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let table_err = |message: String| CliError::Table {
        path: path.to_path_buf(),
        message,
    };

    let mut header = None;
    let mut values = Vec::new();
    let mut cols = 0;
    let mut rows = 0;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths {
                pos,
                expected_len,
                len,
            } => table_err(format!(
                "row {} has {len} fields, expected {expected_len}",
                pos.as_ref().map_or(k + 1, |p| p.line() as usize)
            )),
            _ => table_err(e.to_string()),
        })?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if k == 0 {
            cols = record.len();
            if record
                .iter()
                .any(|cell| !cell.is_empty() && cell.parse::<f64>().is_err())
            {
                header = Some(record.iter().map(str::to_string).collect());
                continue;
            }
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| CliError::Parse {
                path: path.to_path_buf(),
                row: line,
                column: j + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(CliError::NonFiniteValue {
                    path: path.to_path_buf(),
                    row: line,
                    column: j + 1,
                    value: cell.to_string(),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(table_err("no data rows".into()));
    }
    Ok(RawTable {
        header,
        rows,
        cols,
        values,
    })
}

/// Read a CSV and split off the response column; every other column, in
/// file order, becomes a predictor.
pub fn read_csv(path: &Path, response: &ResponseColumn) -> Result<Dataset> {
    let table = read_table(path)?;
    let names = table.names();
    let r = match response {
        ResponseColumn::Index(k) if *k <= table.cols => k - 1,
        ResponseColumn::Index(k) => {
            return Err(CliError::usage(format!(
                "--response-col {k} but {} has {} columns",
                path.display(),
                table.cols
            )))
        }
        ResponseColumn::Name(name) => match &table.header {
            Some(h) => h.iter().position(|c| c == name).ok_or_else(|| {
                CliError::usage(format!("no column named {name:?} in {}", path.display()))
            })?,
            None => {
                return Err(CliError::usage(format!(
                    "--response-col {name:?} needs a header row in {}",
                    path.display()
                )))
            }
        },
    };
    if table.cols < 2 {
        return Err(CliError::Table {
            path: path.to_path_buf(),
            message: "need a response and at least one predictor column".into(),
        });
    }
    let keep: Vec<usize> = (0..table.cols).filter(|&j| j != r).collect();
    let columns: Vec<Vec<f64>> = keep.iter().map(|&j| table.column(j)).collect();
    Ok(Dataset {
        response: table.column(r),
        response_name: names[r].clone(),
        predictors: Matrix::from_columns(&columns)?,
        names: keep.iter().map(|&j| names[j].clone()).collect(),
    })
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `header` and `rows` as CSV, atomically.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let werr = |e: csv::Error| CliError::Table {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        w.write_record(header).map_err(werr)?;
        for r in rows {
            w.write_record(r).map_err(werr)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    atomic_write(path, &out)
}

/// Write a response and predictor matrix in the layout [`read_csv`]
/// expects, response first.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut header = vec![data.response_name.clone()];
    header.extend(data.names.iter().cloned());
    let rows: Vec<Vec<String>> = (0..data.n())
        .map(|i| {
            let mut row = vec![fmt_f64(data.response[i])];
            row.extend((0..data.p()).map(|j| fmt_f64(data.predictors.get(i, j))));
            row
        })
        .collect();
    write_csv(path, &header, &rows)
}

/// Fixed-width text rendering for standard output.
pub fn render_rows(header: &[&str], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|j| {
            rows.iter()
                .map(|r| r[j].len())
                .chain([header[j].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for line in std::iter::once(header.iter().map(|s| s.to_string()).collect::<Vec<_>>())
        .chain(rows.iter().cloned())
    {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  "));
    }
    out
}
