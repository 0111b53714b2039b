//! `GLF1` binary field files with a JSON sidecar.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic "GLF1" | u32 version | u32 n | u32 N | u32 p | u32 q | u32 flags | u32 count
//! count × ( u32 J | u32 K | N^{2n} × (f64 re, f64 im) )
//! ```
//!
//! `flags` bit 0 marks a form that claims to be real. Nodes are row-major over the axes
//! `x_1, y_1, …, x_n, y_n` with the last axis contiguous.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FormField, ScalarField, C64};
use crate::grid::PeriodicGrid;

pub const MAGIC: &[u8; 4] = b"GLF1";
pub const VERSION: u32 = 1;

/// Contents of the `.json` sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub version: u32,
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
    pub p: usize,
    pub q: usize,
    pub real: bool,
    /// `[J, K]` bitmasks in file order.
    pub components: Vec<[u32; 2]>,
    pub axis_order: String,
    pub bytes: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn push_u32(buf: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub fn encode(form: &FormField) -> Result<Vec<u8>> {
    let grid = form.grid();
    let (p, q) = form.bidegree();
    let mut buf = Vec::with_capacity(32 + form.num_components() * (8 + 16 * grid.len()));
    buf.extend_from_slice(MAGIC);
    push_u32(&mut buf, VERSION as usize)?;
    push_u32(&mut buf, grid.dim())?;
    push_u32(&mut buf, grid.size())?;
    push_u32(&mut buf, p)?;
    push_u32(&mut buf, q)?;
    push_u32(&mut buf, usize::from(form.claims_real()))?;
    push_u32(&mut buf, form.num_components())?;
    for (j, k, vals) in form.iter() {
        push_u32(&mut buf, j as usize)?;
        push_u32(&mut buf, k as usize)?;
        for v in vals {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    Ok(buf)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, len: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(Error::Format(format!("truncated at byte {}", self.pos)));
        };
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<FormField> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = r.u32()?;
    let size = r.u32()?;
    let grid = PeriodicGrid::new(n, size).map_err(|e| Error::Format(e.to_string()))?;
    let (p, q) = (r.u32()?, r.u32()?);
    let real = r.u32()? & 1 == 1;
    let count = r.u32()?;
    let template = FormField::zero(grid, p, q);
    if p > n || q > n || count != template.num_components() {
        return Err(Error::Format(format!("bidegree ({p},{q}) with {count} components on n = {n}")));
    }
    let order: Vec<(u32, u32)> = template.iter().map(|(j, k, _)| (j, k)).collect();
    let mut comps = Vec::with_capacity(count);
    for &(j, k) in &order {
        let (fj, fk) = (r.u32()? as u32, r.u32()? as u32);
        if (fj, fk) != (j, k) {
            return Err(Error::Format(format!("component ({fj},{fk}) out of order, expected ({j},{k})")));
        }
        let vals = (0..grid.len())
            .map(|_| Ok(C64::new(r.f64()?, r.f64()?)))
            .collect::<Result<Vec<_>>>()?;
        comps.push(vals);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    FormField::from_raw(grid, p, q, comps, real)
}

pub fn sidecar(form: &FormField, bytes: usize) -> Sidecar {
    let (p, q) = form.bidegree();
    Sidecar {
        format: "GLF1".into(),
        version: VERSION,
        n: form.grid().dim(),
        size: form.grid().size(),
        p,
        q,
        real: form.claims_real(),
        components: form.iter().map(|(j, k, _)| [j, k]).collect(),
        axis_order: "x1,y1,...,xn,yn row-major, last axis fastest".into(),
        bytes,
    }
}

/// Writes `path` and `path.json`.
pub fn write_form(path: &Path, form: &FormField) -> Result<()> {
    let bytes = encode(form)?;
    fs::write(path, &bytes)?;
    let meta = serde_json::to_string_pretty(&sidecar(form, bytes.len()))
        .map_err(|e| Error::Format(e.to_string()))?;
    fs::write(sidecar_path(path), meta)?;
    Ok(())
}

/// Reads `path`, cross-checking the sidecar when it exists.
pub fn read_form(path: &Path) -> Result<FormField> {
    let bytes = fs::read(path)?;
    let form = decode(&bytes)?;
    let side = sidecar_path(path);
    if side.exists() {
        let meta: Sidecar =
            serde_json::from_str(&fs::read_to_string(side)?).map_err(|e| Error::Format(e.to_string()))?;
        if meta != sidecar(&form, bytes.len()) {
            return Err(Error::Format("sidecar does not match the binary header".into()));
        }
    }
    Ok(form)
}

pub fn write_scalar(path: &Path, f: &ScalarField) -> Result<()> {
    write_form(path, &f.as_form())
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    let form = read_form(path)?;
    if form.bidegree() != (0, 0) {
        let (p, q) = form.bidegree();
        return Err(Error::Format(format!("expected a function, found a ({p},{q})-form")));
    }
    let real = form.claims_real();
    let grid = *form.grid();
    let values = form.component(0, 0).expect("(0,0) component").to_vec();
    ScalarField::new(grid, values, real)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_magic() {
        assert!(matches!(decode(b"GLF2\0\0\0\0"), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_truncation() {
        let grid = PeriodicGrid::new(2, 4).unwrap();
        let bytes = encode(&FormField::zero(grid, 1, 1)).unwrap();
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
    }
}
