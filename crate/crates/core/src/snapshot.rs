//! Binary field snapshots. All integers and floats are little-endian.
//!
//! ```text
//! offset  size  field
//!      0     8  magic  "CHDMSNAP"
//!      8     4  u32    format version (1)
//!     12     4  u32    reserved (0)
//!     16     4  u32    dimension
//!     20     4  u32    points_per_axis
//!     24     8  f64    time
//!     32   8·L  f64    grid values, row-major (axis 0 slowest), L = points_per_axis^dimension
//! ```
//!
//! A 1D snapshot of 8 zeros at t = 0.5 starts with
//! `43 48 44 4d 53 4e 41 50 01 00 00 00 00 00 00 00 01 00 00 00 08 00 00 00 00 00 00 00 00 00 e0 3f`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::{DomainSpec, PhysicalField};

pub const MAGIC: &[u8; 8] = b"CHDMSNAP";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: PhysicalField,
}

pub fn encode(t: f64, field: &PhysicalField) -> Vec<u8> {
    let d = field.domain();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * d.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(d.dimension as u32).to_le_bytes());
    out.extend_from_slice(&(d.points_per_axis as u32).to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes a snapshot; the domain gets the default dealiasing fraction.
pub fn decode(bytes: &[u8]) -> std::result::Result<Snapshot, String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    if &bytes[..8] != MAGIC {
        return Err("bad magic".into());
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(8);
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let dimension = u32_at(16) as usize;
    let points = u32_at(20) as usize;
    let t = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let domain = DomainSpec::new(dimension, points).map_err(|e| e.to_string())?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * domain.len() {
        return Err(format!("expected {} values, found {} bytes", domain.len(), body.len()));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = PhysicalField::new(domain, values).map_err(|e| e.to_string())?;
    Ok(Snapshot { t, field })
}

pub fn save(path: &Path, t: f64, field: &PhysicalField) -> Result<()> {
    std::fs::write(path, encode(t, field)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Snapshot> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|message| Error::Snapshot {
        path: path.to_path_buf(),
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_header_bytes() {
        let d = DomainSpec::new(1, 8).unwrap();
        let bytes = encode(0.5, &PhysicalField::zeros(d));
        let hex: Vec<String> = bytes[..32].iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(
            hex.join(" "),
            "43 48 44 4d 53 4e 41 50 01 00 00 00 00 00 00 00 01 00 00 00 08 00 00 00 00 00 00 00 00 00 e0 3f"
        );
        assert_eq!(bytes.len(), 32 + 64);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let d = DomainSpec::new(2, 16).unwrap();
        let f = PhysicalField::from_fn(d, |[x, y]| (x * 1.1).sin() * (3.0 * y).cos() / 3.0 + 1e-300);
        let back = decode(&encode(1.0 / 3.0, &f)).unwrap();
        assert_eq!(back.t.to_bits(), (1.0f64 / 3.0).to_bits());
        assert!(back.field.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_corrupt_input() {
        let d = DomainSpec::new(1, 8).unwrap();
        let good = encode(0.0, &PhysicalField::constant(d, 1.0));
        assert!(decode(&good[..20]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        assert!(decode(&good[..good.len() - 8]).is_err());
        let mut v2 = good;
        v2[8] = 2;
        assert!(decode(&v2).unwrap_err().contains("version"));
    }
}
