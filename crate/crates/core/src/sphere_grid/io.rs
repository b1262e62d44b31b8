//! Field serialization.
//!
//! Binary container, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "HCMFIELD"
//! version      u32      1
//! n            u32      sphere dimension
//! resolution   u32      nodes per polar angle
//! field_count  u32
//! node_count   u64
//! coords       node_count * (n+1) f64
//! weights      node_count f64
//! field_count times:
//!   name_len   u32
//!   name       name_len bytes, UTF-8
//!   values     node_count f64
//! ```
//!
//! The CSV export has one row per node: `node,x0,…,xn,<columns…>`.

use std::io::{Read, Write};

use super::{ScalarField, SphereGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"HCMFIELD";
pub const VERSION: u32 = 1;

/// Contents of a binary field container.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub n: usize,
    pub resolution: usize,
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl FieldFile {
    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn field(&self, name: &str) -> Option<ScalarField> {
        self.fields
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| ScalarField::new(v.clone()))
    }

    /// Errors unless the container was written on a grid with the same
    /// dimension, resolution and node coordinates.
    pub fn check_grid(&self, grid: &SphereGrid) -> Result<()> {
        if self.n != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "file has n = {}, grid has n = {}",
                self.n,
                grid.dim()
            )));
        }
        if self.resolution != grid.resolution() {
            return Err(Error::GridMismatch(format!(
                "file has resolution {}, grid has {}",
                self.resolution,
                grid.resolution()
            )));
        }
        if self.coords.len() != grid.coords().len() {
            return Err(Error::GridMismatch("node count differs".into()));
        }
        let gap = self
            .coords
            .iter()
            .zip(grid.coords())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if gap > 1e-12 {
            return Err(Error::GridMismatch(format!(
                "node coordinates differ by {gap:e}"
            )));
        }
        Ok(())
    }
}

pub fn write_fields<W: Write>(
    mut w: W,
    grid: &SphereGrid,
    fields: &[(&str, &ScalarField)],
) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.resolution() as u32).to_le_bytes())?;
    w.write_all(&(fields.len() as u32).to_le_bytes())?;
    w.write_all(&(grid.len() as u64).to_le_bytes())?;
    for v in grid.coords() {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in grid.weights() {
        w.write_all(&v.to_le_bytes())?;
    }
    for (name, f) in fields {
        if f.len() != grid.len() {
            return Err(Error::Input(format!(
                "field '{name}' has {} values for {} nodes",
                f.len(),
                grid.len()
            )));
        }
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        for v in f.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn read_fields<R: Read>(mut r: R) -> Result<FieldFile> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, not a field container".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let resolution = read_u32(&mut r)? as usize;
    let field_count = read_u32(&mut r)? as usize;
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let nodes = u64::from_le_bytes(b) as usize;
    if !(1..=8).contains(&n) || nodes > 1 << 28 {
        return Err(Error::Format(format!(
            "implausible header (n = {n}, nodes = {nodes})"
        )));
    }
    let coords = read_f64s(&mut r, nodes * (n + 1))?;
    let weights = read_f64s(&mut r, nodes)?;
    let mut fields = Vec::with_capacity(field_count);
    for _ in 0..field_count {
        let len = read_u32(&mut r)? as usize;
        if len > 4096 {
            return Err(Error::Format("field name too long".into()));
        }
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name =
            String::from_utf8(name).map_err(|_| Error::Format("field name not UTF-8".into()))?;
        fields.push((name, read_f64s(&mut r, nodes)?));
    }
    Ok(FieldFile {
        n,
        resolution,
        coords,
        weights,
        fields,
    })
}

pub fn write_csv<W: Write>(
    mut w: W,
    grid: &SphereGrid,
    columns: &[(&str, &ScalarField)],
) -> Result<()> {
    let mut header = String::from("node");
    for c in 0..=grid.dim() {
        header.push_str(&format!(",x{c}"));
    }
    for (name, f) in columns {
        if f.len() != grid.len() {
            return Err(Error::Input(format!("column '{name}' has wrong length")));
        }
        header.push(',');
        header.push_str(name);
    }
    writeln!(w, "{header}")?;
    for i in 0..grid.len() {
        let mut line = i.to_string();
        for v in grid.node(i) {
            line.push_str(&format!(",{v:.17e}"));
        }
        for (_, f) in columns {
            line.push_str(&format!(",{:.17e}", f[i]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}
