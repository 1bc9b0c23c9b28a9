//! Field export: CSV with coordinates and a compact binary dump.
//!
//! Binary layout (little endian): 16-byte header
//! `b"IDSF" | version: u16 | dimension: u16 | mesh: u32 | n: u32`
//! followed by the values as `f64`, axis 0 fastest.

use std::io::{Read, Write};

use super::grid::{FieldKind, FieldOnGrid};
use crate::error::{IdsError, Result};

pub const FIELD_MAGIC: [u8; 4] = *b"IDSF";
pub const FIELD_VERSION: u16 = 1;

pub fn write_csv<W: Write>(field: &FieldOnGrid, mut out: W) -> Result<()> {
    let p = field.points_per_axis();
    match field.dimension {
        1 => {
            writeln!(out, "x,value")?;
            for (i, v) in field.values.iter().enumerate() {
                writeln!(out, "{},{}", field.coordinate(i), v)?;
            }
        }
        _ => {
            writeln!(out, "x,y,value")?;
            for (k, v) in field.values.iter().enumerate() {
                writeln!(out, "{},{},{}", field.coordinate(k % p), field.coordinate(k / p), v)?;
            }
        }
    }
    Ok(())
}

pub fn write_binary<W: Write>(field: &FieldOnGrid, mut out: W) -> Result<()> {
    let mut header = [0u8; 16];
    header[0..4].copy_from_slice(&FIELD_MAGIC);
    header[4..6].copy_from_slice(&FIELD_VERSION.to_le_bytes());
    header[6..8].copy_from_slice(&(field.dimension as u16).to_le_bytes());
    header[8..12].copy_from_slice(&(field.mesh as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(field.n as u32).to_le_bytes());
    out.write_all(&header)?;
    for v in &field.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a binary dump. The header carries no kind tag, so the field comes
/// back as `kind` with bounds taken from the data.
pub fn read_binary<R: Read>(mut input: R, kind: FieldKind, periodic: bool) -> Result<FieldOnGrid> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if header[0..4] != FIELD_MAGIC {
        return Err(IdsError::config("not a field dump (bad magic)"));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != FIELD_VERSION {
        return Err(IdsError::config(format!("unsupported field dump version {version}")));
    }
    let d = u16::from_le_bytes([header[6], header[7]]) as usize;
    let m = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    if !(1..=2).contains(&d) || m == 0 {
        return Err(IdsError::config(format!("bad field header d={d} m={m}")));
    }
    let count = (m * (2 * n + 1)).pow(d as u32);
    let mut buf = vec![0u8; count * 8];
    input.read_exact(&mut buf)?;
    let values: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let lower = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let upper = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    FieldOnGrid::new(d, m, n, values, kind, periodic, lower, upper)
}
