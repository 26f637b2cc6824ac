//! Capture-file ingestion and export.
//!
//! Binary format: interleaved little-endian 32-bit floats in the order
//! XI, XQ, YI, YQ (16 bytes per dual-polarization sample). The CSV form
//! carries the same four columns per line.

use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sigproc::DualPolFrame;

use super::config::CaptureFormat;

const RECORD_BYTES: usize = 16;

/// Read a capture into a frame, attaching the given rate metadata.
pub fn ingest_frame(path: &Path, format: CaptureFormat, samples_per_symbol: f64) -> Result<DualPolFrame> {
    match format {
        CaptureFormat::F32x4 => ingest_binary(path, samples_per_symbol),
        CaptureFormat::Csv => ingest_csv(path, samples_per_symbol),
    }
}

fn ingest_binary(path: &Path, sps: f64) -> Result<DualPolFrame> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    if bytes.is_empty() {
        return Err(Error::config(format!("{}: empty capture", path.display())));
    }
    if bytes.len() % RECORD_BYTES != 0 {
        return Err(Error::config(format!(
            "{}: {} bytes is not a whole number of {}-byte records",
            path.display(),
            bytes.len(),
            RECORD_BYTES
        )));
    }
    let n = bytes.len() / RECORD_BYTES;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for rec in bytes.chunks_exact(RECORD_BYTES) {
        let f = |i: usize| f32::from_le_bytes([rec[4 * i], rec[4 * i + 1], rec[4 * i + 2], rec[4 * i + 3]]) as f64;
        x.push(Complex64::new(f(0), f(1)));
        y.push(Complex64::new(f(2), f(3)));
    }
    DualPolFrame::new(x, y, sps)
}

fn ingest_csv(path: &Path, sps: f64) -> Result<DualPolFrame> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = std::io::BufReader::new(file);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(vals) if vals.len() == 4 => {
                x.push(Complex64::new(vals[0], vals[1]));
                y.push(Complex64::new(vals[2], vals[3]));
            }
            // Tolerate one header line at the top.
            None if lineno == 0 => continue,
            _ => {
                return Err(Error::config(format!(
                    "{}:{}: expected 4 numeric columns, got `{trimmed}`",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if x.is_empty() {
        return Err(Error::config(format!("{}: no samples", path.display())));
    }
    DualPolFrame::new(x, y, sps)
}

/// Write a frame back out in the given capture format. Binary exports
/// round-trip bit-exactly through [`ingest_frame`].
pub fn export_frame(path: &Path, format: CaptureFormat, frame: &DualPolFrame) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    match format {
        CaptureFormat::F32x4 => {
            for i in 0..frame.len() {
                for v in [frame.x[i].re, frame.x[i].im, frame.y[i].re, frame.y[i].im] {
                    out.write_all(&(v as f32).to_le_bytes()).map_err(io_err)?;
                }
            }
        }
        CaptureFormat::Csv => {
            writeln!(out, "xi,xq,yi,yq").map_err(io_err)?;
            for i in 0..frame.len() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    frame.x[i].re, frame.x[i].im, frame.y[i].re, frame.y[i].im
                )
                .map_err(io_err)?;
            }
        }
    }
    out.flush().map_err(io_err)
}
