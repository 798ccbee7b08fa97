//! Comma-separated input with a mandatory header row.

use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::Data(format!("cannot read header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.is_empty() || header.iter().any(String::is_empty) {
            return Err(CliError::Data("header row is missing or has empty names".into()));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| match e.position() {
                Some(pos) => CliError::Data(format!("line {}: {e}", pos.line())),
                None => CliError::Data(e.to_string()),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let mut row = Vec::with_capacity(record.len());
            for (col, cell) in record.iter().enumerate() {
                let value: f64 = cell.parse().map_err(|_| {
                    CliError::Data(format!(
                        "line {line}, column {} ({}): cannot parse {cell:?} as a number",
                        col + 1,
                        header[col]
                    ))
                })?;
                if !value.is_finite() {
                    return Err(CliError::Data(format!(
                        "line {line}, column {} ({}): value {cell:?} is not finite",
                        col + 1,
                        header[col]
                    )));
                }
                row.push(value);
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(CliError::Data("no data rows".into()));
        }
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize, CliError> {
        self.header.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Data(format!(
                "column {name:?} not found (available: {})",
                self.header.join(", ")
            ))
        })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }
}
