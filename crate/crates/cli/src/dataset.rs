//! CSV datasets with a header row and round-trippable floats.

use std::fs::File;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    /// Floats use 17 significant digits so that parsing restores the bits.
    pub fn render(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Dataset {
    pub fn new(columns: &[&str]) -> Self {
        Dataset { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Values of a float column, skipping cells of other types.
    pub fn floats(&self, column: &str) -> Vec<f64> {
        let Some(i) = self.columns.iter().position(|c| c == column) else { return Vec::new() };
        self.rows
            .iter()
            .filter_map(|r| match r[i] {
                Cell::Float(v) => Some(v),
                Cell::Int(v) => Some(v as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }
}

pub fn write_dataset(data: &Dataset, path: &Path) -> std::io::Result<()> {
    if let Some(i) = data.rows.iter().position(|r| r.len() != data.columns.len()) {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("row {i} does not match the {} columns of the schema", data.columns.len()),
        ));
    }
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(&data.columns)?;
    for row in &data.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset back. Cells that parse as integers become `Int`, other
/// numbers `Float`, the rest `Text`.
pub fn read_dataset(path: &Path) -> std::io::Result<Dataset> {
    let mut r = csv::Reader::from_path(path)?;
    let columns = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(
            rec.iter()
                .map(|s| {
                    if let Ok(v) = s.parse::<i64>() {
                        Cell::Int(v)
                    } else if let Ok(v) = s.parse::<f64>() {
                        Cell::Float(v)
                    } else {
                        Cell::Text(s.to_string())
                    }
                })
                .collect(),
        );
    }
    Ok(Dataset { columns, rows })
}

pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    File::create(path)?.write_all(text.as_bytes())
}
