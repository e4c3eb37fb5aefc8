//! Matrix and signal files.
//!
//! CSV files hold one matrix row per line with numbers in shortest
//! round-trip form, so reading a written file reproduces it exactly. The
//! binary format is a 16-byte header (`b"TBAS"`, then little-endian `u32`
//! `q`, `N` and kind code) followed by `q * N` little-endian `f64` values in
//! row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::basis::{BasisKind, BasisMatrix, ColumnConvention, ROW_NORM_TOL};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"TBAS";

/// Shortest decimal string that parses back to `x`.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_matrix_csv<W: Write>(writer: W, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| format_f64(*x)))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with a header row: `header` followed by the rows of `m`, each row
/// prefixed by the matching entry of `row_labels`.
pub fn write_labeled_csv<W: Write>(
    writer: W,
    header: &[String],
    row_labels: &[String],
    m: &DMatrix<f64>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(header).map_err(csv_error)?;
    for (label, row) in row_labels.iter().zip(m.row_iter()) {
        let mut record = vec![label.clone()];
        record.extend(row.iter().map(|x| format_f64(*x)));
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_error)?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let width = record.len();
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Parse(format!(
                    "row {} has {width} fields, expected {c}",
                    line + 1
                )))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: '{field}' is not a number", line + 1)))?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// Reads a basis matrix from CSV. Rows already at unit norm are kept bit for
/// bit; otherwise rows are normalized.
pub fn read_basis_csv<R: Read>(reader: R, kind: BasisKind) -> Result<BasisMatrix> {
    let m = read_matrix_csv(reader)?;
    basis_from_matrix(m, kind)
}

fn basis_from_matrix(m: DMatrix<f64>, kind: BasisKind) -> Result<BasisMatrix> {
    let normalized = m.row_iter().all(|r| (r.norm() - 1.0).abs() <= ROW_NORM_TOL);
    if normalized {
        BasisMatrix::new(m, kind, ColumnConvention::TimeForward)
    } else {
        log::info!("input rows are not unit norm; normalizing");
        BasisMatrix::from_raw(m, kind, ColumnConvention::TimeForward)
    }
}

/// All numbers of a CSV file in reading order, as a flat sample sequence.
pub fn read_signal_csv<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_error)?;
        for field in record.iter().filter(|f| !f.is_empty()) {
            out.push(
                field
                    .parse()
                    .map_err(|_| Error::Parse(format!("'{field}' is not a number")))?,
            );
        }
    }
    Ok(out)
}

pub fn write_basis_binary<W: Write>(mut writer: W, basis: &BasisMatrix) -> Result<()> {
    let tf = basis.to_convention(ColumnConvention::TimeForward);
    let to_u32 = |x: usize| {
        u32::try_from(x).map_err(|_| Error::InvalidArgument(format!("dimension {x} exceeds u32")))
    };
    writer.write_all(BINARY_MAGIC)?;
    writer.write_all(&to_u32(tf.q())?.to_le_bytes())?;
    writer.write_all(&to_u32(tf.n())?.to_le_bytes())?;
    writer.write_all(&tf.kind().code().to_le_bytes())?;
    for row in tf.data().row_iter() {
        for x in row.iter() {
            writer.write_all(&x.to_le_bytes())?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn read_basis_binary<R: Read>(mut reader: R) -> Result<BasisMatrix> {
    let mut header = [0u8; 16];
    reader.read_exact(&mut header)?;
    if &header[0..4] != BINARY_MAGIC {
        return Err(Error::Parse("missing TBAS magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes"));
    let (q, n, code) = (word(4) as usize, word(8) as usize, word(12));
    let kind = BasisKind::from_code(code).ok_or_else(|| Error::Parse(format!("unknown kind code {code}")))?;
    let mut values = vec![0.0; q * n];
    let mut buf = [0u8; 8];
    for v in values.iter_mut() {
        reader.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    basis_from_matrix(DMatrix::from_row_slice(q, n, &values), kind)
}

fn is_binary_path(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("bin") | Some("tbas"))
}

/// Writes a basis to `path`: binary for `.bin`/`.tbas`, CSV otherwise.
pub fn save_basis(path: &Path, basis: &BasisMatrix) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    if is_binary_path(path) {
        write_basis_binary(file, basis)
    } else {
        write_matrix_csv(file, basis.to_convention(ColumnConvention::TimeForward).data())
    }
}

/// Reads a basis from `path`, detecting the binary format by its magic.
pub fn load_basis(path: &Path) -> Result<BasisMatrix> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(BINARY_MAGIC) {
        read_basis_binary(bytes.as_slice())
    } else {
        read_basis_csv(bytes.as_slice(), BasisKind::Custom)
    }
}

pub fn save_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_matrix_csv(BufWriter::new(File::create(path)?), m)
}

pub fn load_signal_csv(path: &Path) -> Result<Vec<f64>> {
    read_signal_csv(BufReader::new(File::open(path)?))
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse(format!("{other:?}")),
        }
    } else {
        Error::Parse(e.to_string())
    }
}
