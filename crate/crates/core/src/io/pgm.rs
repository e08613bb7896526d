use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Binary 8-bit PGM (P5) of a row-major `rows x cols` map. Values are
/// clamped to `[lo, hi]` and mapped to `floor((v − lo)/(hi − lo)·255)`.
pub fn encode_pgm(values: &[f64], rows: usize, cols: usize, lo: f64, hi: f64) -> Result<Vec<u8>> {
    if values.len() != rows * cols {
        return Err(Error::InvalidInput(format!(
            "{} values cannot fill a {rows}x{cols} image",
            values.len()
        )));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidInput(format!("invalid display range [{lo}, {hi}]")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("PGM input"));
    }
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| {
        let t = (v.clamp(lo, hi) - lo) / (hi - lo);
        (t * 255.0).floor() as u8
    }));
    Ok(out)
}

pub fn write_pgm(path: &Path, values: &[f64], rows: usize, cols: usize, lo: f64, hi: f64) -> Result<()> {
    super::atomic_write(path, &encode_pgm(values, rows, cols, lo, hi)?)
}

/// Reads a P5 file written by [`write_pgm`]: returns `(rows, cols, pixels)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path)?;
    let bad = || Error::Format(format!("{}: not an 8-bit P5 image", path.display()));
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad());
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?.to_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(bad());
    }
    let cols: usize = fields[1].parse().map_err(|_| bad())?;
    let rows: usize = fields[2].parse().map_err(|_| bad())?;
    let pixels = bytes.get(pos..).ok_or_else(bad)?.to_vec();
    if pixels.len() != rows * cols {
        return Err(bad());
    }
    Ok((rows, cols, pixels))
}
