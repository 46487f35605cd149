//! importance.csv: the ranked top-k feature table. Header:
//! `rank,feature_index,region_i,region_j,ba_i,ba_j,function_i,function_j,
//! raw_importance,z_score` (ba columns empty when unmapped).

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::importance::ImportanceRecord;

use super::{create, open, parse_field};

pub fn write_importance(path: &Path, records: &[ImportanceRecord]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(
        out,
        "rank,feature_index,region_i,region_j,ba_i,ba_j,function_i,function_j,raw_importance,z_score"
    )
    .map_err(|e| Error::io(path, e))?;
    for r in records {
        let (ba_i, ba_j) = match r.ba_pair {
            Some((a, b)) => (a.to_string(), b.to_string()),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{ba_i},{ba_j},{},{},{},{}",
            r.rank,
            r.feature_index,
            r.region_pair.0,
            r.region_pair.1,
            r.functional_pair.0,
            r.functional_pair.1,
            r.raw_importance,
            r.z_score
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_importance(path: &Path) -> Result<Vec<ImportanceRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(open(path)?);
    {
        let headers = reader.headers().map_err(|e| Error::parse(path, e.to_string()))?;
        let expect = [
            "rank",
            "feature_index",
            "region_i",
            "region_j",
            "ba_i",
            "ba_j",
            "function_i",
            "function_j",
            "raw_importance",
            "z_score",
        ];
        if headers.iter().collect::<Vec<_>>() != expect {
            return Err(Error::parse(
                path,
                format!("unexpected importance header {headers:?}"),
            ));
        }
    }
    let mut records = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        let line = idx + 2;
        if record.len() != 10 {
            return Err(Error::parse(
                path,
                format!("line {line}: expected 10 fields, got {}", record.len()),
            ));
        }
        let ba_pair = if record[4].trim().is_empty() || record[5].trim().is_empty() {
            None
        } else {
            Some((
                parse_field(path, line, "ba_i", record[4].trim())?,
                parse_field(path, line, "ba_j", record[5].trim())?,
            ))
        };
        records.push(ImportanceRecord {
            rank: parse_field(path, line, "rank", record[0].trim())?,
            feature_index: parse_field(path, line, "feature_index", record[1].trim())?,
            region_pair: (
                parse_field(path, line, "region_i", record[2].trim())?,
                parse_field(path, line, "region_j", record[3].trim())?,
            ),
            ba_pair,
            functional_pair: (
                parse_field(path, line, "function_i", record[6].trim())?,
                parse_field(path, line, "function_j", record[7].trim())?,
            ),
            raw_importance: parse_field(path, line, "raw_importance", record[8].trim())?,
            z_score: parse_field(path, line, "z_score", record[9].trim())?,
        });
    }
    Ok(records)
}
