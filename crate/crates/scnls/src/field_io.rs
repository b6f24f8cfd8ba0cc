//! Golden field-snapshot format.
//!
//! Layout, all little-endian IEEE-754 doubles:
//! `dim, N per axis, L per axis, eps, time_stamp`, then interleaved
//! `(re, im)` pairs in row-major order (axis 0 outermost). Byte-identical
//! across runs for identical inputs.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Result, ScnlsError};
use crate::grid::{Grid, WaveField};

pub fn write_field(path: &Path, u: &WaveField) -> Result<()> {
    let mut buf: Vec<f64> = Vec::with_capacity(3 + 2 * u.grid.dim() + 2 * u.data.len());
    buf.push(u.grid.dim() as f64);
    for a in 0..u.grid.dim() {
        buf.push(u.grid.n(a) as f64);
    }
    for a in 0..u.grid.dim() {
        buf.push(u.grid.half_width(a));
    }
    buf.push(u.eps);
    buf.push(u.time_stamp);
    for z in &u.data {
        buf.push(z.re);
        buf.push(z.im);
    }
    let mut file = std::fs::File::create(path)?;
    for v in buf {
        file.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field(path: &Path) -> Result<WaveField> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 || bytes.len() < 8 {
        return Err(ScnlsError::Config(format!(
            "malformed field file {path:?}: {} bytes",
            bytes.len()
        )));
    }
    let doubles: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut pos = 0usize;
    let mut next = || {
        let v = doubles.get(pos).copied();
        pos += 1;
        v
    };
    let dim = next().ok_or_else(|| ScnlsError::Config("truncated header".into()))? as usize;
    if dim == 0 || dim > crate::grid::MAX_DIM {
        return Err(ScnlsError::Config(format!("bad dim {dim}")));
    }
    let mut n = 0usize;
    for _ in 0..dim {
        n = next().ok_or_else(|| ScnlsError::Config("truncated header".into()))? as usize;
    }
    let mut l = 0.0f64;
    for _ in 0..dim {
        l = next().ok_or_else(|| ScnlsError::Config("truncated header".into()))?;
    }
    let eps = next().ok_or_else(|| ScnlsError::Config("truncated header".into()))?;
    let time_stamp = next().ok_or_else(|| ScnlsError::Config("truncated header".into()))?;
    let grid = Grid::new(dim, n, l)?;
    let header = 1 + 2 * dim + 2;
    let expect = header + 2 * grid.total_points();
    if doubles.len() != expect {
        return Err(ScnlsError::Config(format!(
            "field file length {} != expected {expect}",
            doubles.len()
        )));
    }
    let data: Vec<Complex64> = doubles[header..]
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    let mut f = WaveField::new(grid, eps, data)?;
    f.time_stamp = time_stamp;
    Ok(f)
}
