//! File formats: a binary matrix container, CSV matrices and reports, and
//! 8-bit PGM abundance maps. Every writer goes through [`atomic_write`].
//!
//! Binary layout: `b"ALMM"`, u32 version, u32 rows, u32 cols, then
//! `rows * cols` little-endian f64 values in row-major order.

mod pgm;

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::metrics::ReportRecord;
use crate::svdl::{SvdlDiagnostics, SvdlState};

pub use pgm::{encode_pgm, read_pgm, write_pgm};

pub const MAGIC: &[u8; 4] = b"ALMM";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn encode_matrix(m: &DMatrix<f64>) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.nrows()).map_err(|_| Error::Format("too many rows".into()))?;
    let cols = u32::try_from(m.ncols()).map_err(|_| Error::Format("too many columns".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.extend_from_slice(&m[(r, c)].to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8]) -> Result<DMatrix<f64>> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("not an ALMM matrix file".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4-byte slice"));
    let version = word(4);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported matrix format version {version}")));
    }
    let rows = word(8) as usize;
    let cols = word(12) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("matrix dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "{rows}x{cols} matrix needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    atomic_write(path, &encode_matrix(m)?)
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    decode_matrix(&fs::read(path)?).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// CSV with one matrix row per line and no header. Values are written with
/// Rust's shortest round-trip formatting, so reading back is exact.
pub fn encode_matrix_csv(m: &DMatrix<f64>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| Error::Format(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

pub fn decode_matrix_csv(bytes: &[u8]) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: cannot parse {f:?} as a number", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Format(format!(
                    "line {} has {} fields, expected {}",
                    i + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    atomic_write(path, &encode_matrix_csv(m)?)
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    decode_matrix_csv(&fs::read(path)?)
}

/// Reads either format, chosen by extension (`.csv` or anything else).
pub fn read_matrix_any(path: &Path) -> Result<DMatrix<f64>> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_matrix_csv(path)
    } else {
        read_matrix(path)
    }
}

pub fn encode_reports(records: &[ReportRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    if records.is_empty() {
        w.write_record(["run_id", "algorithm", "aRMSE", "rRMSE", "aSAM", "OA", "wall_ms"])
            .map_err(|e| Error::Format(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

pub fn decode_reports(bytes: &[u8]) -> Result<Vec<ReportRecord>> {
    csv::Reader::from_reader(bytes)
        .deserialize()
        .map(|r| r.map_err(|e| Error::Format(e.to_string())))
        .collect()
}

pub fn write_reports(path: &Path, records: &[ReportRecord]) -> Result<()> {
    atomic_write(path, &encode_reports(records)?)
}

pub fn read_reports(path: &Path) -> Result<Vec<ReportRecord>> {
    decode_reports(&fs::read(path)?)
}

/// One row per recorded iteration (row 0 is the initialization).
pub fn encode_diagnostics(diag: &SvdlDiagnostics) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Format(e.to_string());
    w.write_record([
        "iter",
        "objective",
        "coherence",
        "gram_deviation",
        "sparse_gap",
        "nonneg_gap",
        "product_gap",
        "dictionary_gap",
        "scale_gap",
        "dictionary_step",
        "xi",
    ])
    .map_err(fail)?;
    for i in 0..diag.len() {
        let mut row = vec![
            i.to_string(),
            diag.objective[i].to_string(),
            diag.coherence[i].to_string(),
            diag.gram_deviation[i].to_string(),
        ];
        row.extend(diag.residuals[i].as_array().iter().map(f64::to_string));
        row.push(diag.xi[i].to_string());
        w.write_record(&row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// Dumps every primal variable and multiplier of `state` into `dir` as
/// binary matrices (vectors as single columns), overwriting earlier dumps.
pub fn write_svdl_checkpoint(dir: &Path, state: &SvdlState) -> Result<()> {
    fs::create_dir_all(dir)?;
    let column = |v: &nalgebra::DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let matrices = [
        ("X", state.x.clone()),
        ("S", column(&state.s)),
        ("E", state.e.clone()),
        ("B", state.b.clone()),
        ("G", state.g.clone()),
        ("H", state.h.clone()),
        ("M", state.m.clone()),
        ("T", column(&state.t)),
        ("Q", state.q.clone()),
        ("Lambda", state.lambda.clone()),
        ("V", state.v.clone()),
        ("Omega", state.omega.clone()),
        ("Pi", state.pi.clone()),
        ("Delta", column(&state.delta)),
        ("xi_iter", DMatrix::from_row_slice(1, 2, &[state.xi, state.iter as f64])),
    ];
    for (name, m) in matrices {
        write_matrix(&dir.join(format!("{name}.bin")), &m)?;
    }
    Ok(())
}
