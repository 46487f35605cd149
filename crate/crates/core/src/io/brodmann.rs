//! Brodmann-area reference table CSV: `ba_id,x,y,z,name`.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::importance::{BrodmannArea, BrodmannTable};

use super::{create, open, parse_field};

pub fn write_brodmann(path: &Path, table: &BrodmannTable) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "ba_id,x,y,z,name").map_err(|e| Error::io(path, e))?;
    for e in &table.entries {
        writeln!(
            out,
            "{},{},{},{},{}",
            e.ba_id, e.centroid[0], e.centroid[1], e.centroid[2], e.name
        )
        .map_err(|err| Error::io(path, err))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_brodmann(path: &Path) -> Result<BrodmannTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(open(path)?);
    {
        let headers = reader.headers().map_err(|e| Error::parse(path, e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != ["ba_id", "x", "y", "z", "name"] {
            return Err(Error::parse(
                path,
                format!("unexpected Brodmann header {headers:?}"),
            ));
        }
    }
    let mut entries = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        let line = idx + 2;
        if record.len() != 5 {
            return Err(Error::parse(
                path,
                format!("line {line}: expected 5 fields, got {}", record.len()),
            ));
        }
        entries.push(BrodmannArea {
            ba_id: parse_field(path, line, "ba_id", record[0].trim())?,
            centroid: [
                parse_field(path, line, "x", record[1].trim())?,
                parse_field(path, line, "y", record[2].trim())?,
                parse_field(path, line, "z", record[3].trim())?,
            ],
            name: record[4].to_string(),
        });
    }
    let table = BrodmannTable { entries };
    table.validate()?;
    Ok(table)
}
