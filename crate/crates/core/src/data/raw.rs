use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::data::FeatureSchema;
use crate::error::{Error, Result};

/// One parsed CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Missing,
}

impl Cell {
    /// Empty cells and the usual NA spellings are missing.
    pub fn parse(token: &str) -> Cell {
        let t = token.trim();
        if t.is_empty()
            || ["na", "n/a", "nan", "null"]
                .iter()
                .any(|m| t.eq_ignore_ascii_case(m))
        {
            return Cell::Missing;
        }
        match t.parse::<f64>() {
            Ok(v) => Cell::Num(v),
            Err(_) => Cell::Text(t.to_string()),
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

/// A header plus rectangular rows of cells, straight off disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// 1-based source line of each row (the header is line 1).
    pub lines: Vec<usize>,
}

impl RawTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Parse CSV text and check it against `schema`.
    pub fn from_reader<R: Read>(reader: R, schema: &FeatureSchema) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header: Vec<String> = match records.next() {
            Some(rec) => rec?
                .iter()
                .map(|h| h.trim().trim_start_matches('\u{feff}').to_string())
                .collect(),
            None => return Err(Error::MissingHeader("<input>".into())),
        };
        check_header(&header, schema)?;

        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for rec in records {
            let rec = rec?;
            let line = rec.position().map_or(rows.len() + 2, |p| p.line() as usize);
            if rec.len() == 1 && rec.get(0).is_some_and(|c| c.trim().is_empty()) && header.len() > 1 {
                continue;
            }
            if rec.len() != header.len() {
                return Err(Error::RaggedRow {
                    row: line,
                    expected: header.len(),
                    found: rec.len(),
                });
            }
            rows.push(rec.iter().map(Cell::parse).collect());
            lines.push(line);
        }
        Ok(RawTable { header, rows, lines })
    }
}

fn check_header(header: &[String], schema: &FeatureSchema) -> Result<()> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for h in header {
        *counts.entry(h.as_str()).or_default() += 1;
    }
    for name in schema.names().chain(std::iter::once(schema.label_name.as_str())) {
        match counts.get(name) {
            None => return Err(Error::MissingColumn(name.to_string())),
            Some(&c) if c > 1 => return Err(Error::DuplicateColumn(name.to_string())),
            _ => {}
        }
    }
    Ok(())
}

/// Read a CSV file whose header must name every schema feature and the label
/// column. Extra columns are kept in the table and ignored downstream.
pub fn load_raw(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    RawTable::from_reader(std::io::BufReader::new(file), schema).map_err(|e| match e {
        Error::MissingHeader(_) => Error::MissingHeader(path.to_path_buf()),
        other => other,
    })
}
