//! Binary field snapshots.
//!
//! Layout (all little endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `NSFD` |
//! | 4     | format version (u32, currently 1) |
//! | 4     | dim (u32) |
//! | 12    | points per axis, three u32 (trailing axes of a 2D grid are 1) |
//! | 8     | domain length L (f64) |
//! | 4     | component count (u32) |
//! | 1     | real flag (u8) |
//! | 16·N·c| coefficients, component-major, flat index order, (re, im) f64 pairs |

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;

const MAGIC: &[u8; 4] = b"NSFD";
const VERSION: u32 = 1;

pub fn to_bytes(field: &SpectralField) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(41 + 16 * grid.len() * field.ncomp());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for n in grid.shape3() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&grid.length().to_le_bytes());
    out.extend_from_slice(&(field.ncomp() as u32).to_le_bytes());
    out.push(field.is_real() as u8);
    for comp in field.components() {
        for c in comp {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Snapshot("truncated snapshot".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<SpectralField> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let dim = r.u32()? as usize;
    let shape: Vec<usize> = (0..3).map(|_| r.u32().map(|v| v as usize)).collect::<Result<_>>()?;
    let length = r.f64()?;
    let grid = Grid::with_shape(dim, &shape[..dim.min(3)], length)?;
    let ncomp = r.u32()? as usize;
    let is_real = r.take(1)?[0] != 0;
    let mut comps = Vec::with_capacity(ncomp);
    for _ in 0..ncomp {
        let mut c = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = r.f64()?;
            let im = r.f64()?;
            c.push(Complex64::new(re, im));
        }
        comps.push(c);
    }
    if r.pos != buf.len() {
        return Err(Error::Snapshot("trailing bytes".into()));
    }
    SpectralField::from_components(&grid, comps, is_real)
}

pub fn write_snapshot(path: impl AsRef<Path>, field: &SpectralField) -> Result<()> {
    fs::write(path, to_bytes(field))?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<SpectralField> {
    from_bytes(&fs::read(path)?)
}
