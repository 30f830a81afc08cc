//! AFLD binary field files.
//!
//! Layout (all integers and floats little-endian):
//!
//! | bytes            | content                                   |
//! |------------------|-------------------------------------------|
//! | 4                | magic `AFLD`                              |
//! | 1                | version, always 1                         |
//! | 1                | dim (2 or 3)                              |
//! | 1                | rank (0 scalar, 1 vector)                 |
//! | 1                | padding, always 0                         |
//! | 4 * dim          | u32 cell counts                           |
//! | 8 * dim          | f64 box lengths                           |
//! | 8 * values       | f64 raster(s), row-major                  |
//!
//! Vector fields store their `dim` component rasters one after another.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{Grid, ScalarField, VectorField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"AFLD";
pub const VERSION: u8 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum FieldFileError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
}

/// A field read from disk, either rank.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyField {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl AnyField {
    pub fn grid(&self) -> &Grid {
        match self {
            AnyField::Scalar(s) => s.grid(),
            AnyField::Vector(v) => v.grid(),
        }
    }
}

fn header(grid: &Grid, rank: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 12 * grid.dim());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[VERSION, grid.dim() as u8, rank, 0]);
    for &n in grid.n() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &l in grid.length() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

pub fn encode_scalar(field: &ScalarField) -> Vec<u8> {
    let mut out = header(field.grid(), 0);
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_vector(field: &VectorField) -> Vec<u8> {
    let mut out = header(field.grid(), 1);
    for c in field.components() {
        for v in c.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<AnyField, FieldFileError> {
    use FieldFileError::*;
    if bytes.len() < 8 {
        return Err(MalformedHeader(format!("{} bytes is shorter than the fixed header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(MalformedHeader(format!("bad magic {:?}", &bytes[..4])));
    }
    let (version, dim, rank, pad) = (bytes[4], bytes[5], bytes[6], bytes[7]);
    if version != VERSION {
        return Err(MalformedHeader(format!("unsupported version {version}")));
    }
    if pad != 0 {
        return Err(MalformedHeader(format!("non-zero padding byte {pad}")));
    }
    if !(dim == 2 || dim == 3) {
        return Err(MalformedHeader(format!("dim must be 2 or 3, got {dim}")));
    }
    if rank > 1 {
        return Err(MalformedHeader(format!("rank must be 0 or 1, got {rank}")));
    }
    let dim = dim as usize;
    let head_len = 8 + 12 * dim;
    if bytes.len() < head_len {
        return Err(MalformedHeader("header ends before grid description".into()));
    }
    let mut n = Vec::with_capacity(dim);
    let mut length = Vec::with_capacity(dim);
    for a in 0..dim {
        let o = 8 + 4 * a;
        n.push(u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize);
    }
    for a in 0..dim {
        let o = 8 + 4 * dim + 8 * a;
        length.push(f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()));
    }
    let grid = Grid::new(&n, &length).map_err(|e| MalformedHeader(e.to_string()))?;
    let count = grid.len() * if rank == 0 { 1 } else { dim };
    let expected = head_len + 8 * count;
    if bytes.len() < expected {
        return Err(TruncatedPayload { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(TrailingBytes(bytes.len() - expected));
    }
    let raster = |c: usize| -> Vec<f64> {
        let start = head_len + 8 * c * grid.len();
        (0..grid.len())
            .map(|k| {
                let o = start + 8 * k;
                f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap())
            })
            .collect()
    };
    let field = if rank == 0 {
        AnyField::Scalar(ScalarField::from_values(grid, raster(0)).expect("sized"))
    } else {
        let comps = (0..dim).map(|c| ScalarField::from_values(grid, raster(c)).expect("sized")).collect();
        AnyField::Vector(VectorField::from_components(comps).expect("sized"))
    };
    Ok(field)
}

fn file_err(path: &Path, source: FieldFileError) -> Error {
    Error::FieldFile { path: path.to_path_buf(), source }
}

pub fn write_scalar(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    fs::write(path, encode_scalar(field))?;
    Ok(())
}

pub fn write_vector(path: impl AsRef<Path>, field: &VectorField) -> Result<()> {
    fs::write(path, encode_vector(field))?;
    Ok(())
}

pub fn read_any(path: impl AsRef<Path>) -> Result<AnyField> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    decode(&bytes).map_err(|e| file_err(path, e))
}

pub fn read_scalar(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    match read_any(path)? {
        AnyField::Scalar(s) => Ok(s),
        AnyField::Vector(_) => Err(file_err(
            path,
            FieldFileError::DimensionMismatch("expected a scalar field, file holds a vector field".into()),
        )),
    }
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<VectorField> {
    let path = path.as_ref();
    match read_any(path)? {
        AnyField::Vector(v) => Ok(v),
        AnyField::Scalar(_) => Err(file_err(
            path,
            FieldFileError::DimensionMismatch("expected a vector field, file holds a scalar field".into()),
        )),
    }
}

/// Read a scalar field and require it to live on `grid`.
pub fn read_scalar_on(path: impl AsRef<Path>, grid: &Grid) -> Result<ScalarField> {
    let path = path.as_ref();
    let f = read_scalar(path)?;
    check_grid(path, f.grid(), grid)?;
    Ok(f)
}

pub fn read_vector_on(path: impl AsRef<Path>, grid: &Grid) -> Result<VectorField> {
    let path = path.as_ref();
    let f = read_vector(path)?;
    check_grid(path, f.grid(), grid)?;
    Ok(f)
}

fn check_grid(path: &Path, found: &Grid, expected: &Grid) -> Result<()> {
    if found == expected {
        return Ok(());
    }
    Err(file_err(
        path,
        FieldFileError::DimensionMismatch(format!(
            "file grid {:?} x {:?} differs from expected {:?} x {:?}",
            found.n(),
            found.length(),
            expected.n(),
            expected.length()
        )),
    ))
}
