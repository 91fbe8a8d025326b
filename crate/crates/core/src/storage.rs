//! On-disk persistence for dense matrices plus shared float formatting.
//!
//! The binary layout is deliberately plain: a magic tag, a format version,
//! the two dimensions, then row-major 64-bit little-endian floats. Nothing
//! here is meant to interoperate with other tools; the format exists so a
//! prepared run can be resumed without re-reading the source CSV.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::Mat;

const MAGIC: &[u8; 4] = b"LMMX";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StorageError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
}

impl StorageError {
    fn io(path: &Path, source: io::Error) -> Self {
        StorageError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn format(path: &Path, reason: impl Into<String>) -> Self {
        StorageError::Format {
            path: path.display().to_string(),
            reason: reason.into(),
        }
    }
}

/// Formats a float with 17 significant digits, enough for `f64` values to
/// survive a print/parse round trip exactly.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_matrix(path: &Path, m: &Mat) -> Result<(), StorageError> {
    let file = File::create(path).map_err(|e| StorageError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(m.rows() as u64).to_le_bytes())?;
        w.write_all(&(m.cols() as u64).to_le_bytes())?;
        for &v in m.data() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    })();
    res.map_err(|e| StorageError::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Mat, StorageError> {
    let file = File::open(path).map_err(|e| StorageError::io(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|e| StorageError::io(path, e))?;
    if &magic != MAGIC {
        return Err(StorageError::format(path, "not a matrix file (bad magic)"));
    }
    let version = read_u32(&mut r, path)?;
    if version != FORMAT_VERSION {
        return Err(StorageError::format(
            path,
            format!("unsupported matrix format version {version}"),
        ));
    }
    let rows = read_u64(&mut r, path)? as usize;
    let cols = read_u64(&mut r, path)? as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| StorageError::format(path, "dimension overflow"))?;

    let mut data = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)
            .map_err(|e| StorageError::io(path, e))?;
        data.push(f64::from_le_bytes(buf));
    }
    if r.read(&mut buf).map_err(|e| StorageError::io(path, e))? != 0 {
        return Err(StorageError::format(path, "trailing bytes after matrix data"));
    }
    Ok(Mat::from_vec(rows, cols, data))
}

fn read_u32<R: Read>(r: &mut R, path: &Path) -> Result<u32, StorageError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|e| StorageError::io(path, e))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R, path: &Path) -> Result<u64, StorageError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|e| StorageError::io(path, e))?;
    Ok(u64::from_le_bytes(buf))
}
