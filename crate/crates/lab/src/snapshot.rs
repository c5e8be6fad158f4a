//! FNS1 binary snapshots of spectral vector fields.
//!
//! Layout, all little-endian: the magic `FNS1`, `u32 d`, `u32 n`, `f64 gamma`,
//! `f64 time`, `u8 flags` (bit 0 mean-zero, bit 1 divergence-free), then `d`
//! complex arrays of `n^d` entries as interleaved `(re, im)` pairs. Each array
//! runs over wavevectors with every axis in ascending wavenumber order
//! `−n/2, …, n/2−1`, the last axis fastest.

use std::path::Path;

use fns_core::spectral::{TorusGrid, DIV_FREE_REJECT};
use fns_core::SpectralVectorField;
use num_complex::Complex64;

use crate::error::{LabError, SnapshotError};
use crate::output::write_atomic;

pub const MAGIC: &[u8; 4] = b"FNS1";
pub const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 1;

const FLAG_MEAN_ZERO: u8 = 1;
const FLAG_DIV_FREE: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: SpectralVectorField,
    pub gamma: f64,
    pub time: f64,
}

/// Storage indices of the grid in file order.
fn file_order(grid: &TorusGrid) -> impl Iterator<Item = usize> + '_ {
    let n = grid.n();
    let d = grid.dim();
    let half = (n / 2) as i64;
    (0..grid.len()).map(move |pos| {
        let mut k = [0i64; 3];
        let mut rest = pos;
        for ax in (0..d).rev() {
            k[ax] = (rest % n) as i64 - half;
            rest /= n;
        }
        grid.index_of(k)
    })
}

pub fn encode_snapshot(u: &SpectralVectorField, gamma: f64, time: f64) -> Vec<u8> {
    let g = u.grid;
    let mut out = Vec::with_capacity(HEADER_LEN + g.dim() * g.len() * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&gamma.to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    let mut flags = 0u8;
    if u.mean_zero {
        flags |= FLAG_MEAN_ZERO;
    }
    if u.div_free {
        flags |= FLAG_DIV_FREE;
    }
    out.push(flags);
    for comp in &u.coeffs {
        for idx in file_order(&g) {
            out.extend_from_slice(&comp[idx].re.to_le_bytes());
            out.extend_from_slice(&comp[idx].im.to_le_bytes());
        }
    }
    out
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(SnapshotError::Length {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let d = u32_at(bytes, 4) as usize;
    let n = u32_at(bytes, 8) as usize;
    let gamma = f64_at(bytes, 12);
    let time = f64_at(bytes, 20);
    let flags = bytes[28];
    let grid = TorusGrid::new(d, n).map_err(|e| SnapshotError::Header(e.to_string()))?;
    if flags & !(FLAG_MEAN_ZERO | FLAG_DIV_FREE) != 0 {
        return Err(SnapshotError::Header(format!("unknown flag bits {flags:#04x}")));
    }
    let expected = HEADER_LEN + d * grid.len() * 16;
    if bytes.len() != expected {
        return Err(SnapshotError::Length {
            expected,
            actual: bytes.len(),
        });
    }
    let mut field = SpectralVectorField::zeros(grid);
    let mut at = HEADER_LEN;
    for comp in field.coeffs.iter_mut() {
        for idx in file_order(&grid) {
            comp[idx] = Complex64::new(f64_at(bytes, at), f64_at(bytes, at + 8));
            at += 16;
        }
    }
    field.mean_zero = flags & FLAG_MEAN_ZERO != 0;
    field.div_free = flags & FLAG_DIV_FREE != 0;
    if field.mean_zero && !field.mean_is_zero() {
        return Err(SnapshotError::FlagMismatch("mean-zero flag set but the mean mode is nonzero".into()));
    }
    if field.div_free {
        let rel = field.relative_divergence();
        if rel > DIV_FREE_REJECT {
            return Err(SnapshotError::FlagMismatch(format!(
                "divergence-free flag set but relative divergence is {rel:e}"
            )));
        }
    }
    Ok(Snapshot { field, gamma, time })
}

pub fn write_field_snapshot(u: &SpectralVectorField, gamma: f64, time: f64, path: &Path) -> Result<(), LabError> {
    write_atomic(path, &encode_snapshot(u, gamma, time))
}

pub fn read_field_snapshot(path: &Path) -> Result<Snapshot, LabError> {
    let bytes = std::fs::read(path).map_err(|e| LabError::io(path, e))?;
    decode_snapshot(&bytes).map_err(|source| LabError::Snapshot {
        path: path.display().to_string(),
        source,
    })
}
