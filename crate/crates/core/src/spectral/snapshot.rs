//! Binary field snapshots.
//!
//! Layout (little-endian): magic `b"SNSE"`, format version `u32`, grid size
//! `n: u32`, component count `u32`, then each component's `n³` physical
//! samples as `f64`, x fastest.

use std::io::{Read, Write};

use super::field::ScalarField;
use super::grid::GridSpec;
use crate::error::{Result, SnseError};

pub const MAGIC: &[u8; 4] = b"SNSE";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(mut w: W, components: &[ScalarField]) -> Result<()> {
    let grid = match components.first() {
        Some(c) => c.grid().clone(),
        None => return Err(SnseError::Empty("snapshot components")),
    };
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    w.write_all(&(components.len() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(grid.len() * 8);
    for c in components {
        crate::spectral::field::ensure_same_grid(&grid, c.grid())?;
        buf.clear();
        for v in c.values().iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Vec<ScalarField>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SnseError::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(SnseError::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let count = read_u32(&mut r)? as usize;
    let grid = GridSpec::new(n)?;
    let mut out = Vec::with_capacity(count);
    let mut bytes = vec![0u8; grid.len() * 8];
    for _ in 0..count {
        r.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        out.push(ScalarField::from_physical(&grid, values)?);
    }
    Ok(out)
}
