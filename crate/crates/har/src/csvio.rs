//! Sample streams as CSV: `t_ms,ax,ay,az,gx,gy,gz,label`.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! record/replay cycle reproduces every value bit for bit. An empty label
//! field reads back as an absent label.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use har_core::SensorSample;
use thiserror::Error;

pub const HEADER: [&str; 8] = ["t_ms", "ax", "ay", "az", "gx", "gy", "gz", "label"];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    /// `row` counts data rows from 1, excluding the header.
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
}

fn csv_err(e: csv::Error, row: usize) -> CsvError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CsvError::Io(io),
        other => CsvError::MalformedRow {
            row,
            reason: format!("{other:?}"),
        },
    }
}

pub fn write_samples<W: Write>(writer: W, samples: impl IntoIterator<Item = SensorSample>) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER).map_err(|e| csv_err(e, 0))?;
    for (i, s) in samples.into_iter().enumerate() {
        let c = s.channels();
        w.write_record([
            s.t_ms.to_string(),
            c[0].to_string(),
            c[1].to_string(),
            c[2].to_string(),
            c[3].to_string(),
            c[4].to_string(),
            c[5].to_string(),
            s.label.unwrap_or_default(),
        ])
        .map_err(|e| csv_err(e, i + 1))?;
    }
    w.flush()?;
    Ok(())
}

pub fn record(path: impl AsRef<Path>, samples: impl IntoIterator<Item = SensorSample>) -> Result<(), CsvError> {
    write_samples(BufWriter::new(File::create(path)?), samples)
}

fn parse_row(rec: &csv::StringRecord, row: usize) -> Result<SensorSample, CsvError> {
    let bad = |reason: String| CsvError::MalformedRow { row, reason };
    if rec.len() < 7 || rec.len() > 8 {
        return Err(bad(format!("expected 7 or 8 fields, found {}", rec.len())));
    }
    let t_ms: i64 = rec[0].trim().parse().map_err(|e| bad(format!("t_ms: {e}")))?;
    let mut ch = [0.0f64; 6];
    for (k, v) in ch.iter_mut().enumerate() {
        let field = rec[k + 1].trim();
        *v = field.parse().map_err(|e| bad(format!("{}: {e}", HEADER[k + 1])))?;
        if !v.is_finite() {
            return Err(bad(format!("{} is not finite", HEADER[k + 1])));
        }
    }
    let label = rec.get(7).map(str::trim).filter(|l| !l.is_empty()).map(String::from);
    Ok(SensorSample::new(t_ms, [ch[0], ch[1], ch[2]], [ch[3], ch[4], ch[5]], label))
}

/// Lazily parses samples from any reader with a header row.
pub fn read_samples<R: Read>(reader: R) -> impl Iterator<Item = Result<SensorSample, CsvError>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader)
        .into_records()
        .enumerate()
        .map(|(i, rec)| rec.map_err(|e| csv_err(e, i + 1)).and_then(|rec| parse_row(&rec, i + 1)))
}

pub fn replay(path: impl AsRef<Path>) -> Result<Vec<SensorSample>, CsvError> {
    read_samples(BufReader::new(File::open(path)?)).collect()
}
