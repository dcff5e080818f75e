//! Fingerprint CSV files.
//!
//! ```text
//! # anchors=4 points=94 config=four seed=0 campaign=survey
//! -5.2113069146275613e1,-7.0385911513741227e1,-6.6417253771394741e1,-6.4092011402262380e1,0.0000000000000000e0,0.0000000000000000e0
//! ```
//!
//! The first line declares the number of RSSI columns and of distinct
//! reference points; anything after those two fields is free-form metadata.
//! Every following line is one sample: `R_1, …, R_n, X, Y`, RSSI in dBm and
//! position in meters, printed with 17 significant digits so values survive a
//! round trip exactly.

use std::io::{Read, Write};
use std::path::Path;

use rssiloc_core::{Dataset, Error as CoreError, Position, RssiVector, Sample};

use crate::{Error, Result};

/// Formats a value with 17 significant digits.
pub fn exact(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_string(data: &Dataset) -> String {
    let mut out = format!("# anchors={} points={}", data.anchor_count(), data.point_count());
    let meta = data.metadata().replace(['\n', '\r'], " ");
    if !meta.trim().is_empty() {
        out.push(' ');
        out.push_str(meta.trim());
    }
    out.push('\n');
    for row in data.rows() {
        let fields: Vec<String> = row.rssi.iter().chain([&row.target.x, &row.target.y]).map(|&v| exact(v)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(data: &Dataset, mut sink: impl Write) -> std::io::Result<()> {
    sink.write_all(to_string(data).as_bytes())
}

struct Header {
    anchors: usize,
    points: Option<usize>,
    metadata: String,
}

fn parse_header(line: &str) -> Result<Header> {
    let bad = |message: String| Error::Parse { line: 1, message };
    let body = line.strip_prefix('#').ok_or_else(|| bad("expected a `# anchors=<n> points=<m>` header".into()))?;
    let mut anchors = None;
    let mut points = None;
    let mut metadata = Vec::new();
    for token in body.split_whitespace() {
        match token.split_once('=') {
            Some(("anchors", v)) if anchors.is_none() => {
                anchors = Some(v.parse::<usize>().map_err(|_| bad(format!("bad anchor count {v:?}")))?)
            }
            Some(("points", v)) if points.is_none() => {
                points = Some(v.parse::<usize>().map_err(|_| bad(format!("bad point count {v:?}")))?)
            }
            _ => metadata.push(token),
        }
    }
    let anchors = anchors.filter(|&n| n > 0).ok_or_else(|| bad("header lacks a positive `anchors=`".into()))?;
    Ok(Header { anchors, points, metadata: metadata.join(" ") })
}

pub fn read_csv(mut source: impl Read) -> Result<Dataset> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::Parse { line: 0, message: format!("unreadable input: {e}") })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Dataset> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let header = parse_header(first.trim_end_matches('\r'))?;
    let n = header.anchors;

    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(rest.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record
            .map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line() + 1), message: e.to_string() })?;
        let line = record.position().map_or(0, |p| p.line() + 1);
        if record.len() != n + 2 {
            return Err(Error::AtLine {
                line,
                source: CoreError::DimensionMismatch { expected: n + 2, found: record.len() },
            });
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("column {}: {field:?} is not a number", col + 1),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let target = Position::new(values[n], values[n + 1]);
        if !target.is_finite() {
            return Err(Error::Parse { line, message: "position is not finite".into() });
        }
        let rssi = RssiVector::new(values[..n].to_vec()).map_err(|source| Error::AtLine { line, source })?;
        rows.push(Sample::new(rssi, target));
    }
    let data = Dataset::new(n, rows, header.metadata)?;
    if let Some(m) = header.points {
        if m != data.point_count() {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares {m} points but the rows hold {}", data.point_count()),
            });
        }
    }
    Ok(data)
}

pub fn load(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(Error::io(path))?;
    read_csv(file)
}
