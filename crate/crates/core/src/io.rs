//! Series serialisation: CSV with one integer per line (optional header
//! `y`) or a JSON array of integers.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::Series;

/// On-disk encoding of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeriesFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for SeriesFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(SeriesFormat::Csv),
            "json" => Ok(SeriesFormat::Json),
            other => Err(Error::Parse(format!("format '{other}' must be csv or json"))),
        }
    }
}

impl fmt::Display for SeriesFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeriesFormat::Csv => "csv",
            SeriesFormat::Json => "json",
        })
    }
}

/// CSV text with a `y` header and one value per line.
pub fn series_to_csv(series: &Series) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(["y"]).expect("in-memory write");
    for v in series.values() {
        w.write_record([v.to_string()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// JSON array text.
pub fn series_to_json(series: &Series) -> String {
    serde_json::to_string(series.values()).expect("integers serialise")
}

/// Encodes in the requested format.
pub fn write_series(series: &Series, format: SeriesFormat) -> String {
    match format {
        SeriesFormat::Csv => series_to_csv(series),
        SeriesFormat::Json => series_to_json(series),
    }
}

/// Parses CSV text, accepting an optional `y` header.
pub fn series_from_csv(text: &str) -> Result<Series> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let field = rec.get(0).unwrap_or("");
        if i == 0 && field == "y" {
            continue;
        }
        if field.is_empty() {
            continue;
        }
        values.push(
            field
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("line {}: '{field}': {e}", i + 1)))?,
        );
    }
    Series::new(values)
}

/// Parses a JSON array of non-negative integers.
pub fn series_from_json(text: &str) -> Result<Series> {
    let values: Vec<u64> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Series::new(values)
}

/// Parses either encoding, detected from the first non-blank character.
pub fn read_series(text: &str) -> Result<Series> {
    if text.trim_start().starts_with('[') {
        series_from_json(text)
    } else {
        series_from_csv(text)
    }
}
