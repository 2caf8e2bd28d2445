//! Reading listing files.
//!
//! Both CSV and JSON-lines inputs carry the same seven fields. Rows that fail
//! validation are skipped and logged in the [`IngestReport`]; only a broken
//! header (or an unreadable file) aborts the whole read.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::ClassifiedRecord;

pub const FIELDS: [&str; 7] = ["title", "description", "beds", "baths", "size", "location", "price"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("header is missing required column `{0}`")]
    MissingColumn(String),
    #[error("header has unexpected column `{0}`")]
    UnexpectedColumn(String),
    #[error("header repeats column `{0}`")]
    DuplicateColumn(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unsupported input extension for {0} (expected .csv or .jsonl)")]
    UnknownFormat(String),
}

/// Per-file accounting of accepted and rejected rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: usize,
    /// `(line number, reason)`; line numbers are 1-based file lines.
    pub rejection_reasons: Vec<(u64, String)>,
}

impl IngestReport {
    pub fn total(&self) -> usize {
        self.accepted + self.rejected
    }

    fn reject(&mut self, line: u64, reason: impl Into<String>) {
        self.rejected += 1;
        self.rejection_reasons.push((line, reason.into()));
    }
}

/// Reads by extension: `.jsonl`/`.ndjson` as JSON lines, everything else as CSV.
pub fn read_records(path: impl AsRef<Path>) -> Result<(Vec<ClassifiedRecord>, IngestReport), IngestError> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("jsonl") | Some("ndjson") => read_jsonl(path),
        Some("csv") | Some("txt") | None => read_csv(path),
        _ => Err(IngestError::UnknownFormat(path.display().to_string())),
    }
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<(Vec<ClassifiedRecord>, IngestReport), IngestError> {
    read_csv_from(File::open(path)?)
}

/// CSV reader over any byte source. The header must name exactly the seven
/// fields, in any order and any case.
pub fn read_csv_from<R: Read>(source: R) -> Result<(Vec<ClassifiedRecord>, IngestReport), IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(source);
    let header = reader.byte_headers()?.clone();
    let columns = column_map(header.iter().map(|h| String::from_utf8_lossy(h).trim().to_lowercase()))?;

    let mut records = Vec::new();
    let mut report = IngestReport::default();
    let mut row = csv::ByteRecord::new();
    loop {
        match reader.read_byte_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(err) => {
                let line = err.position().map_or(0, |p| p.line());
                report.reject(line, format!("unreadable row: {err}"));
                if matches!(err.kind(), csv::ErrorKind::Io(_)) {
                    break;
                }
                continue;
            }
        }
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != FIELDS.len() {
            report.reject(line, format!("expected {} fields, found {}", FIELDS.len(), row.len()));
            continue;
        }
        let mut fields: [&str; 7] = [""; 7];
        let mut bad_utf8 = None;
        for (slot, &col) in columns.iter().enumerate() {
            match std::str::from_utf8(&row[col]) {
                Ok(s) => fields[slot] = s,
                Err(_) => {
                    bad_utf8 = Some(FIELDS[slot]);
                    break;
                }
            }
        }
        if let Some(name) = bad_utf8 {
            report.reject(line, format!("invalid utf-8 in {name}"));
            continue;
        }
        let raw = RawRecord {
            title: Some(RawValue::Text(fields[0])),
            description: Some(RawValue::Text(fields[1])),
            beds: Some(RawValue::Text(fields[2])),
            baths: Some(RawValue::Text(fields[3])),
            size: Some(RawValue::Text(fields[4])),
            location: Some(RawValue::Text(fields[5])),
            price: Some(RawValue::Text(fields[6])),
        };
        match raw.validate() {
            Ok(r) => {
                report.accepted += 1;
                records.push(r);
            }
            Err(reason) => report.reject(line, reason),
        }
    }
    Ok((records, report))
}

/// Position of each of [`FIELDS`] in the header.
fn column_map(header: impl Iterator<Item = String>) -> Result<[usize; 7], IngestError> {
    let mut map = [usize::MAX; 7];
    for (idx, name) in header.enumerate() {
        let Some(slot) = FIELDS.iter().position(|f| *f == name) else {
            return Err(IngestError::UnexpectedColumn(name));
        };
        if map[slot] != usize::MAX {
            return Err(IngestError::DuplicateColumn(name));
        }
        map[slot] = idx;
    }
    if let Some(slot) = map.iter().position(|&m| m == usize::MAX) {
        return Err(IngestError::MissingColumn(FIELDS[slot].to_string()));
    }
    Ok(map)
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<(Vec<ClassifiedRecord>, IngestReport), IngestError> {
    read_jsonl_from(BufReader::new(File::open(path)?))
}

/// One JSON object per line with exactly the seven lower-case keys. Blank
/// lines are skipped and not counted.
pub fn read_jsonl_from<R: BufRead>(mut source: R) -> Result<(Vec<ClassifiedRecord>, IngestReport), IngestError> {
    let mut records = Vec::new();
    let mut report = IngestReport::default();
    let mut buf = Vec::new();
    let mut line_no = 0u64;
    loop {
        buf.clear();
        if source.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let Ok(line) = std::str::from_utf8(&buf) else {
            report.reject(line_no, "invalid utf-8");
            continue;
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(err) => {
                report.reject(line_no, format!("malformed line: {err}"));
                continue;
            }
        };
        let Some(obj) = value.as_object() else {
            report.reject(line_no, "malformed line: not a JSON object");
            continue;
        };
        if let Some(extra) = obj.keys().find(|k| !FIELDS.contains(&k.as_str())) {
            report.reject(line_no, format!("unexpected key {extra}"));
            continue;
        }
        let get = |k: &str| obj.get(k).map(RawValue::Json);
        let raw = RawRecord {
            title: get("title"),
            description: get("description"),
            beds: get("beds"),
            baths: get("baths"),
            size: get("size"),
            location: get("location"),
            price: get("price"),
        };
        match raw.validate() {
            Ok(r) => {
                report.accepted += 1;
                records.push(r);
            }
            Err(reason) => report.reject(line_no, reason),
        }
    }
    Ok((records, report))
}

enum RawValue<'a> {
    Text(&'a str),
    Json(&'a serde_json::Value),
}

struct RawRecord<'a> {
    title: Option<RawValue<'a>>,
    description: Option<RawValue<'a>>,
    beds: Option<RawValue<'a>>,
    baths: Option<RawValue<'a>>,
    size: Option<RawValue<'a>>,
    location: Option<RawValue<'a>>,
    price: Option<RawValue<'a>>,
}

impl RawRecord<'_> {
    fn validate(self) -> Result<ClassifiedRecord, String> {
        let title = text_field("title", self.title)?;
        let description = text_field("description", self.description)?;
        let beds = int_field("beds", self.beds)?;
        let baths = int_field("baths", self.baths)?;
        let size = int_field("size", self.size)?;
        let location = text_field("location", self.location)?;
        let price = int_field("price", self.price)?;
        if location.trim().is_empty() {
            return Err("empty location".into());
        }
        if size == 0 {
            return Err("non-positive size".into());
        }
        if price == 0 {
            return Err("non-positive price".into());
        }
        let beds = u32::try_from(beds).map_err(|_| "beds out of range".to_string())?;
        let baths = u32::try_from(baths).map_err(|_| "baths out of range".to_string())?;
        Ok(ClassifiedRecord { title, description, beds, baths, size, location: location.trim().to_string(), price })
    }
}

fn text_field(name: &str, value: Option<RawValue<'_>>) -> Result<String, String> {
    match value {
        None => Err(format!("missing {name}")),
        Some(RawValue::Text(s)) => Ok(s.to_string()),
        Some(RawValue::Json(serde_json::Value::String(s))) => Ok(s.clone()),
        Some(RawValue::Json(_)) => Err(format!("non-text {name}")),
    }
}

fn int_field(name: &str, value: Option<RawValue<'_>>) -> Result<u64, String> {
    match value {
        None => Err(format!("missing {name}")),
        Some(RawValue::Text(s)) => {
            let s = s.trim();
            match s.parse::<i128>() {
                Ok(v) if v < 0 => Err(format!("negative {name}")),
                Ok(v) => u64::try_from(v).map_err(|_| format!("{name} out of range")),
                Err(_) => Err(format!("non-integer {name}")),
            }
        }
        Some(RawValue::Json(v)) => {
            if let Some(u) = v.as_u64() {
                Ok(u)
            } else if v.as_i64().is_some() {
                Err(format!("negative {name}"))
            } else {
                Err(format!("non-integer {name}"))
            }
        }
    }
}

/// Writes records with the standard header, quoting as needed.
pub fn write_csv(path: impl AsRef<Path>, records: &[ClassifiedRecord]) -> Result<(), IngestError> {
    let file = File::create(path)?;
    write_csv_to(file, records)
}

pub fn write_csv_to<W: Write>(sink: W, records: &[ClassifiedRecord]) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(FIELDS)?;
    for r in records {
        writer.write_record([
            r.title.as_str(),
            r.description.as_str(),
            &r.beds.to_string(),
            &r.baths.to_string(),
            &r.size.to_string(),
            r.location.as_str(),
            &r.price.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
