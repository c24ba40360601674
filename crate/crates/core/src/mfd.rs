//! "MFD1" field dumps.
//!
//! Layout: the four bytes `MFD1`, a little-endian `u32` header length, a JSON
//! header, then the samples as little-endian `f64`, component by component.
//! x₂-invariant grids add a `rows` key to the header.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::grid::{Magnetization, ScalarField, TorusGrid, VectorField};
use crate::real::Real;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"MFD1";
const LAYOUT: &str = "row-major/component-major";
const DTYPE: &str = "f64le";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub n: usize,
    pub side_length: f64,
    pub components: usize,
    pub layout: String,
    pub dtype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
}

/// Decoded dump: grid plus one sample vector per component.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump<T: Real = f64> {
    pub grid: TorusGrid<T>,
    pub components: Vec<Vec<T>>,
}

impl<T: Real> FieldDump<T> {
    pub fn from_scalar(f: &ScalarField<T>) -> Self {
        Self { grid: *f.grid(), components: vec![f.values().to_vec()] }
    }

    pub fn from_vector(v: &VectorField<T>) -> Self {
        Self { grid: *v.grid(), components: v.components().to_vec() }
    }

    pub fn from_magnetization(m: &Magnetization<T>) -> Self {
        Self::from_vector(m.as_vector_field())
    }

    pub fn into_scalar(self) -> Result<ScalarField<T>> {
        if self.components.len() != 1 {
            return Err(Error::Format(format!("expected 1 component, found {}", self.components.len())));
        }
        let grid = self.grid;
        ScalarField::new(grid, self.components.into_iter().next().unwrap())
    }

    pub fn into_magnetization(self) -> Result<Magnetization<T>> {
        if self.components.len() != 3 {
            return Err(Error::Format(format!("expected 3 components, found {}", self.components.len())));
        }
        let mut it = self.components.into_iter();
        let comps = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
        Magnetization::new(VectorField::new(self.grid, comps)?)
    }
}

pub fn write<T: Real, W: Write>(dump: &FieldDump<T>, mut w: W) -> Result<()> {
    let header = Header {
        n: dump.grid.n(),
        side_length: dump.grid.side_length().to_f64_lossy(),
        components: dump.components.len(),
        layout: LAYOUT.into(),
        dtype: DTYPE.into(),
        rows: dump.grid.is_x2_invariant().then_some(1),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(8 * dump.grid.len() * dump.components.len());
    for comp in &dump.components {
        for v in comp {
            buf.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read<T: Real, R: Read>(mut r: R) -> Result<FieldDump<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, not an MFD1 file".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| Error::Format(e.to_string()))?;
    if header.layout != LAYOUT || header.dtype != DTYPE {
        return Err(Error::Format(format!("unsupported layout {} / dtype {}", header.layout, header.dtype)));
    }
    let side = T::from_f64(header.side_length).ok_or_else(|| Error::Format("side length".into()))?;
    let grid = match header.rows {
        None => TorusGrid::new(header.n, side)?,
        Some(1) => TorusGrid::x2_invariant(header.n, side)?,
        Some(r) if r == header.n => TorusGrid::new(header.n, side)?,
        Some(r) => return Err(Error::Format(format!("unsupported row count {r}"))),
    };
    let mut components = Vec::with_capacity(header.components);
    let mut bytes = vec![0u8; 8 * grid.len()];
    for _ in 0..header.components {
        r.read_exact(&mut bytes)?;
        let comp = bytes
            .chunks_exact(8)
            .map(|b| T::from_f64(f64::from_le_bytes(b.try_into().unwrap())).unwrap_or_else(T::nan))
            .collect();
        components.push(comp);
    }
    Ok(FieldDump { grid, components })
}

pub fn write_file<T: Real>(dump: &FieldDump<T>, path: impl AsRef<std::path::Path>) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write(dump, f)
}

pub fn read_file<T: Real>(path: impl AsRef<std::path::Path>) -> Result<FieldDump<T>> {
    read(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = TorusGrid::<f64>::new(8, 1.3).unwrap();
        let m = Magnetization::from_fn(g, |x, y| [x.sin(), (3.0 * y).cos(), 0.3 + x * y]).unwrap();
        let mut buf = Vec::new();
        write(&FieldDump::from_magnetization(&m), &mut buf).unwrap();
        let back = read::<f64, _>(&buf[..]).unwrap().into_magnetization().unwrap();
        for c in 0..3 {
            for (a, b) in m.component(c).iter().zip(back.component(c)) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        assert_eq!(back.grid(), m.grid());
    }

    #[test]
    fn header_layout() {
        let g = TorusGrid::<f64>::x2_invariant(4, 1.0).unwrap();
        let mut buf = Vec::new();
        write(&FieldDump::from_scalar(&ScalarField::constant(g, 0.5)), &mut buf).unwrap();
        assert_eq!(&buf[..4], b"MFD1");
        let len = u32::from_le_bytes(buf[4..8].try_into().unwrap()) as usize;
        let h: serde_json::Value = serde_json::from_slice(&buf[8..8 + len]).unwrap();
        assert_eq!(h["layout"], "row-major/component-major");
        assert_eq!(h["dtype"], "f64le");
        assert_eq!(h["rows"], 1);
        assert_eq!(buf.len(), 8 + len + 4 * 8);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read::<f64, _>(&b"MFD2\0\0\0\0"[..]).is_err());
        assert!(read::<f64, _>(&b"MF"[..]).is_err());
    }
}
