//! Binary snapshot files for spectral fields.
//!
//! Layout (all integers little-endian):
//! magic `MLSF`, version `u32`, dimension `u32`, points-per-axis `u32`,
//! field count `u32`, then per field a `u32` name length, the UTF-8 name,
//! and the full complex coefficient array as `f64` (re, im) pairs in
//! row-major wavenumber order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex;

use thiserror::Error;

use crate::spectral::{SpectralError, SpectralField, TorusGrid};
use crate::Real;

pub const MAGIC: [u8; 4] = *b"MLSF";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes: not a snapshot file")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),
    #[error("field name is not valid UTF-8")]
    BadName,
    #[error("no fields to write")]
    NoFields,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Writes fields sharing one grid; order is preserved.
pub fn write<W: Write, T: Real>(
    mut w: W,
    fields: &[(&str, &SpectralField<T>)],
) -> Result<(), SnapshotError> {
    let (_, first) = fields.first().ok_or(SnapshotError::NoFields)?;
    let grid = first.grid();
    for (_, f) in fields {
        if !f.grid().same_shape(grid) {
            return Err(SnapshotError::Spectral(SpectralError::GridMismatch));
        }
    }
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.points() as u32).to_le_bytes())?;
    w.write_all(&(fields.len() as u32).to_le_bytes())?;
    for (name, field) in fields {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        for z in field.coeffs() {
            w.write_all(&z.re.to_f64().unwrap().to_le_bytes())?;
            w.write_all(&z.im.to_f64().unwrap().to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_file<T: Real>(
    path: impl AsRef<Path>,
    fields: &[(&str, &SpectralField<T>)],
) -> Result<(), SnapshotError> {
    let mut out = BufWriter::new(File::create(path)?);
    write(&mut out, fields)?;
    out.flush()?;
    Ok(())
}

/// Raw snapshot contents, grid shape plus named coefficient arrays.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub dim: usize,
    pub points: usize,
    pub fields: Vec<(String, Vec<Complex<f64>>)>,
}

/// Grid plus named fields, as reattached from a snapshot.
pub type NamedFields<T> = (Arc<TorusGrid<T>>, Vec<(String, SpectralField<T>)>);

impl Snapshot {
    /// Reattaches the arrays to a grid as spectral fields.
    pub fn into_fields<T: Real>(self) -> Result<NamedFields<T>, SnapshotError> {
        let grid = TorusGrid::<T>::new(self.dim, self.points)?;
        let mut out = Vec::with_capacity(self.fields.len());
        for (name, coeffs) in self.fields {
            let converted: Vec<Complex<T>> = coeffs
                .iter()
                .map(|z| {
                    Complex::new(
                        T::from_f64(z.re).unwrap(),
                        T::from_f64(z.im).unwrap(),
                    )
                })
                .collect();
            out.push((name, SpectralField::from_coeffs(&grid, converted)?));
        }
        Ok((grid, out))
    }
}

pub fn read<R: Read>(mut r: R) -> Result<Snapshot, SnapshotError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(SnapshotError::UnsupportedVersion(version));
    }
    let dim = read_u32(&mut r)? as usize;
    let points = read_u32(&mut r)? as usize;
    let count = read_u32(&mut r)? as usize;
    let len = points.pow(dim as u32);
    let mut fields = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| SnapshotError::BadName)?;
        let mut coeffs = Vec::with_capacity(len);
        let mut buf = [0u8; 16];
        for _ in 0..len {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            coeffs.push(Complex::new(re, im));
        }
        fields.push((name, coeffs));
    }
    Ok(Snapshot {
        dim,
        points,
        fields,
    })
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Snapshot, SnapshotError> {
    read(BufReader::new(File::open(path)?))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, std::io::Error> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
