//! CSV and PGM readers and writers.
//!
//! CSV holds a 1D signal, one value per line (commas also separate values).
//! PGM holds a square grayscale image; samples map to `[0, 1]` by `maxval`.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::wavelet::DyadicSignal;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn is_pgm(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

/// Read a `.pgm` image or any other file as CSV.
pub fn read_signal(path: &Path) -> Result<DyadicSignal> {
    if is_pgm(path) {
        read_pgm(path)
    } else {
        read_csv(path)
    }
}

/// Write a 2D signal as PGM when the extension is `.pgm`, otherwise CSV.
pub fn write_signal(path: &Path, signal: &DyadicSignal) -> Result<()> {
    if is_pgm(path) {
        write_pgm(path, signal)
    } else {
        write_csv(path, signal)
    }
}

/// Parse numeric values separated by newlines or commas; `#` starts a comment.
pub fn parse_values(text: &str) -> std::result::Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for field in line.split(',') {
            let field = field.trim();
            if field.is_empty() {
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| format!("line {}: cannot parse {field:?}", line_no + 1))?;
            if !v.is_finite() {
                return Err(format!("line {}: non-finite value", line_no + 1));
            }
            out.push(v);
        }
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<DyadicSignal> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let values = parse_values(&text).map_err(|m| format_err(path, m))?;
    DyadicSignal::from_1d(values).map_err(|e| format_err(path, e.to_string()))
}

/// Read a list of values (e.g. a convolution kernel) from a CSV file.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_values(&text).map_err(|m| format_err(path, m))
}

/// One value per line, printed with round-trip precision. Images are row-major.
pub fn write_csv(path: &Path, signal: &DyadicSignal) -> Result<()> {
    let mut text = String::with_capacity(signal.len() * 20);
    for v in signal.values() {
        text.push_str(&format!("{v:?}\n"));
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> std::result::Result<Header, String> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err("not a PGM file (expected P2 or P5)".into()),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for f in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|c| c.is_ascii_digit()) {
            pos += 1;
        }
        *f = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("malformed header field")?;
    }
    // exactly one whitespace byte separates the header from binary data
    if !bytes.get(pos).is_some_and(|c| c.is_ascii_whitespace()) {
        return Err("malformed header".into());
    }
    let maxval = fields[2] as u32;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    Ok(Header {
        binary,
        width: fields[0],
        height: fields[1],
        maxval,
        data_start: pos + 1,
    })
}

/// Decode PGM bytes into row-major samples scaled to `[0, 1]`.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<f64>), String> {
    let h = parse_header(bytes)?;
    let count = h.width * h.height;
    let scale = h.maxval as f64;
    let raw: Vec<u32> = if h.binary {
        let data = &bytes[h.data_start.min(bytes.len())..];
        let wide = h.maxval > 255;
        let need = if wide { 2 * count } else { count };
        if data.len() < need {
            return Err(format!("expected {need} data bytes, found {}", data.len()));
        }
        if wide {
            data[..need]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
                .collect()
        } else {
            data[..need].iter().map(|&b| b as u32).collect()
        }
    } else {
        let text = std::str::from_utf8(&bytes[h.data_start.min(bytes.len())..])
            .map_err(|_| "non-ASCII data in P2 file")?;
        let vals: Vec<u32> = text
            .split_ascii_whitespace()
            .take(count)
            .map(|t| t.parse().map_err(|_| format!("bad sample {t:?}")))
            .collect::<std::result::Result<_, _>>()?;
        if vals.len() < count {
            return Err(format!("expected {count} samples, found {}", vals.len()));
        }
        vals
    };
    if let Some(v) = raw.iter().find(|&&v| v > h.maxval) {
        return Err(format!("sample {v} exceeds maxval {}", h.maxval));
    }
    Ok((
        h.width,
        h.height,
        raw.into_iter().map(|v| v as f64 / scale).collect(),
    ))
}

pub fn read_pgm(path: &Path) -> Result<DyadicSignal> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let (w, h, values) = decode_pgm(&bytes).map_err(|m| format_err(path, m))?;
    if w != h {
        return Err(format_err(
            path,
            format!("image is {w}x{h}; a square image is required"),
        ));
    }
    DyadicSignal::from_2d(w, values).map_err(|e| format_err(path, e.to_string()))
}

/// 16-bit binary PGM; values are clamped to `[0, 1]`.
pub fn encode_pgm(signal: &DyadicSignal) -> Result<Vec<u8>> {
    if signal.dim() != 2 {
        return Err(Error::dim("PGM output needs a 2D signal"));
    }
    let side = signal.side();
    let mut out = format!("P5\n{side} {side}\n65535\n").into_bytes();
    for v in signal.values() {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    Ok(out)
}

pub fn write_pgm(path: &Path, signal: &DyadicSignal) -> Result<()> {
    let bytes = encode_pgm(signal)?;
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?).map_err(|e| io_err(path, e))
}
