//! Atlas CSV: `id,name,x,y,z,functional_label,brodmann_hint` (hint empty when
//! absent).

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::synthgen::{Atlas, Region};

use super::{create, open, parse_field};

pub fn write_atlas(path: &Path, atlas: &Atlas) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "id,name,x,y,z,functional_label,brodmann_hint")
        .map_err(|e| Error::io(path, e))?;
    for region in &atlas.regions {
        let hint = region
            .brodmann_hint
            .map(|h| h.to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{hint}",
            region.id,
            region.name,
            region.centroid[0],
            region.centroid[1],
            region.centroid[2],
            region.functional_label,
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_atlas(path: &Path) -> Result<Atlas> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(open(path)?);
    {
        let headers = reader.headers().map_err(|e| Error::parse(path, e.to_string()))?;
        let expect = ["id", "name", "x", "y", "z", "functional_label", "brodmann_hint"];
        if headers.iter().collect::<Vec<_>>() != expect {
            return Err(Error::parse(
                path,
                format!("unexpected atlas header {headers:?}"),
            ));
        }
    }
    let mut regions = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        let line = idx + 2;
        if record.len() != 7 {
            return Err(Error::parse(
                path,
                format!("line {line}: expected 7 fields, got {}", record.len()),
            ));
        }
        let brodmann_hint = if record[6].trim().is_empty() {
            None
        } else {
            Some(parse_field(path, line, "brodmann_hint", record[6].trim())?)
        };
        regions.push(Region {
            id: parse_field(path, line, "id", record[0].trim())?,
            name: record[1].to_string(),
            centroid: [
                parse_field(path, line, "x", record[2].trim())?,
                parse_field(path, line, "y", record[3].trim())?,
                parse_field(path, line, "z", record[4].trim())?,
            ],
            functional_label: parse_field(path, line, "functional_label", record[5].trim())?,
            brodmann_hint,
        });
    }
    let atlas = Atlas {
        name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "atlas".into()),
        regions,
    };
    atlas.validate()?;
    Ok(atlas)
}
