//! Parameter snapshots: an 8-byte magic, a `u32` format version, the unit
//! count and feature dimension as `u64`, then the unit-major weights as
//! little-endian `f64`.

use std::io::{Read, Write};

use super::CoagentLayer;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"CEPARAM\0";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn save_layer<W: Write>(layer: &CoagentLayer, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(layer.num_units() as u64).to_le_bytes())?;
    w.write_all(&(layer.feature_dim() as u64).to_le_bytes())?;
    for v in layer.to_flat() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_layer<R: Read>(mut r: R) -> Result<CoagentLayer> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a parameter snapshot".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!(
            "snapshot version {version}, expected {SNAPSHOT_VERSION}"
        )));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let units = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let feature_dim = u64::from_le_bytes(b8) as usize;
    let count = units
        .checked_mul(feature_dim + 1)
        .ok_or_else(|| Error::Format("snapshot header overflows".into()))?;
    let mut flat = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        r.read_exact(&mut b8)?;
        flat.push(f64::from_le_bytes(b8));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after snapshot".into()));
    }
    CoagentLayer::from_flat(units, feature_dim, &flat)
}
