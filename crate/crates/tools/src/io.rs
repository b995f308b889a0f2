//! CSV ingestion.
//!
//! A header row is required and columns are picked by name. Empty cells and
//! `NA` are missing values, which are rejected with the offending line and
//! column rather than imputed.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{Context, Result};
use dcov_core::{PairedSample, Point};

use crate::config::{InputConfig, SpaceConfig, SpaceKindConfig};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CsvError {
    #[error("the file has no header row")]
    NoHeader,
    #[error("no data rows after the header")]
    Empty,
    #[error("unknown column `{name}` (available: {available})")]
    UnknownColumn { name: String, available: String },
    #[error("no {0} columns selected")]
    NoColumns(&'static str),
    #[error("line {line}, column `{column}`: missing value")]
    Missing { line: u64, column: String },
    #[error("line {line}, column `{column}`: cannot parse `{value}` as a finite number")]
    Number {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: u64, message: String },
    #[error("a discrete space reads exactly one column, got {0}")]
    DiscreteWidth(usize),
}

/// Raw cells of the selected columns, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Columns {
    pub names: Vec<String>,
    /// `cells[row][col]`, trimmed.
    pub cells: Vec<Vec<String>>,
    /// 1-based file line of each row.
    pub lines: Vec<u64>,
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na")
}

/// Reads `columns` from CSV text.
pub fn select_columns<R: std::io::Read>(reader: R, columns: &[&str]) -> Result<Columns, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CsvError::Malformed {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(CsvError::NoHeader);
    }
    let index = columns
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| CsvError::UnknownColumn {
                    name: name.to_string(),
                    available: headers.iter().collect::<Vec<_>>().join(", "),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Columns {
        names: columns.iter().map(|s| s.to_string()).collect(),
        cells: Vec::new(),
        lines: Vec::new(),
    };
    for record in rdr.records() {
        let record = record.map_err(|e| CsvError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(index.len());
        for (k, &i) in index.iter().enumerate() {
            match record.get(i) {
                Some(cell) if !is_missing(cell) => row.push(cell.to_string()),
                _ => {
                    return Err(CsvError::Missing {
                        line,
                        column: columns[k].to_string(),
                    })
                }
            }
        }
        out.cells.push(row);
        out.lines.push(line);
    }
    if out.cells.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(out)
}

/// Converts one side of the selected columns to points.
fn to_points(
    cols: &Columns,
    range: std::ops::Range<usize>,
    kind: SpaceKindConfig,
) -> Result<(Vec<Point>, usize, u32), CsvError> {
    let width = range.len();
    if kind == SpaceKindConfig::Discrete {
        if width != 1 {
            return Err(CsvError::DiscreteWidth(width));
        }
        // Labels become symbols in order of first appearance.
        let mut labels: HashMap<&str, u32> = HashMap::new();
        let points = cols
            .cells
            .iter()
            .map(|row| {
                let next = labels.len() as u32;
                Point::symbol(*labels.entry(row[range.start].as_str()).or_insert(next))
            })
            .collect();
        return Ok((points, 1, labels.len() as u32));
    }
    let mut points = Vec::with_capacity(cols.cells.len());
    for (row, line) in cols.cells.iter().zip(&cols.lines) {
        let mut v = Vec::with_capacity(width);
        for c in range.clone() {
            let value = &row[c];
            match value.parse::<f64>() {
                Ok(x) if x.is_finite() => v.push(x),
                _ => {
                    return Err(CsvError::Number {
                        line: *line,
                        column: cols.names[c].clone(),
                        value: value.clone(),
                    })
                }
            }
        }
        points.push(if width == 1 {
            Point::scalar(v[0])
        } else {
            Point::vector(v)
        });
    }
    Ok((points, width, 0))
}

/// Parses a paired sample from CSV text.
pub fn parse_sample<R: std::io::Read>(
    reader: R,
    input: &InputConfig,
    space_x: Option<&SpaceConfig>,
    space_y: Option<&SpaceConfig>,
) -> Result<PairedSample> {
    if input.x.is_empty() {
        return Err(CsvError::NoColumns("x").into());
    }
    if input.y.is_empty() {
        return Err(CsvError::NoColumns("y").into());
    }
    let names: Vec<&str> = input.x.iter().chain(&input.y).map(String::as_str).collect();
    let cols = select_columns(reader, &names)?;
    let (sx, sy) = (
        space_x.cloned().unwrap_or_default(),
        space_y.cloned().unwrap_or_default(),
    );
    let nx = input.x.len();
    let (xs, dx, ax) = to_points(&cols, 0..nx, sx.kind)?;
    let (ys, dy, ay) = to_points(&cols, nx..names.len(), sy.kind)?;
    let space_x = sx.build(dx, ax).context("space_x")?;
    let space_y = sy.build(dy, ay).context("space_y")?;
    Ok(PairedSample::new(xs, ys, space_x, space_y)?)
}

pub fn read_sample(
    input: &InputConfig,
    space_x: Option<&SpaceConfig>,
    space_y: Option<&SpaceConfig>,
) -> Result<PairedSample> {
    let path: &Path = &input.path;
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_sample(file, input, space_x, space_y)
        .with_context(|| format!("reading {}", path.display()))
}

/// One value per line under a single header.
pub fn column_csv(header: &str, values: &[f64]) -> String {
    let mut text = String::with_capacity(values.len() * 20 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for v in values {
        text.push_str(&format!("{v}\n"));
    }
    text
}
