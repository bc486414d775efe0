//! CSV and binary serialization of [`PeriodicField`].
//!
//! Binary layout (little endian):
//!
//! ```text
//! magic   b"VPLF"
//! u32     format version (1)
//! u32     dim
//! u32     n (points per axis)
//! f64     length (period per axis)
//! u32     rank code (0 scalar, 1 vector, 2 tensor)
//! u32     number of components
//! f64 *   values, component-major, row-major nodes with axis 0 slowest
//! ```
//!
//! CSV files have a header row, one node per row: coordinates (`x`, `y`, `z`)
//! followed by the components, 17 significant digits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{PeriodicField, PeriodicGrid, Rank};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"VPLF";
const VERSION: u32 = 1;
const AXES: [&str; 3] = ["x", "y", "z"];

/// Fixed-width formatting used by every CSV writer in the crate.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn component_names(rank: Rank, dim: usize) -> Vec<String> {
    match rank {
        Rank::Scalar => vec!["value".to_string()],
        Rank::Vector => (0..dim).map(|c| format!("u{c}")).collect(),
        Rank::SymTensor => (0..dim * dim)
            .map(|c| format!("s{}{}", c / dim, c % dim))
            .collect(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_csv(field: &PeriodicField, path: &Path) -> Result<()> {
    let g = field.grid();
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header: Vec<String> = AXES[..g.dim()].iter().map(|s| s.to_string()).collect();
    header.extend(component_names(field.rank(), g.dim()));
    w.write_record(&header).map_err(csv_err)?;
    let comps = field.components();
    for i in 0..g.len() {
        let x = g.coords(i);
        let mut row: Vec<String> = x[..g.dim()].iter().map(|&v| fmt_f64(v)).collect();
        row.extend(comps.iter().map(|c| fmt_f64(c[i])));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_csv`]. The grid is inferred from the
/// coordinate columns, which must be in node order.
pub fn read_csv(path: &Path) -> Result<PeriodicField> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    let dim = header.iter().take_while(|h| AXES.contains(h)).count();
    if dim == 0 {
        return Err(Error::InvalidField("missing coordinate columns".into()));
    }
    let names: Vec<&str> = header.iter().skip(dim).collect();
    let rank = [Rank::Scalar, Rank::Vector, Rank::SymTensor]
        .into_iter()
        .find(|rk| component_names(*rk, dim) == names)
        .ok_or_else(|| Error::InvalidField(format!("unrecognized columns {names:?}")))?;
    let nc = rank.components(dim);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidField(format!("bad number {s:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != dim + nc {
            return Err(Error::InvalidField("ragged CSV row".into()));
        }
        rows.push(row);
    }
    let n = (rows.len() as f64).powf(1.0 / dim as f64).round() as usize;
    if n < 2 || n.pow(dim as u32) != rows.len() {
        return Err(Error::InvalidField(format!(
            "{} rows is not a {dim}D tensor grid",
            rows.len()
        )));
    }
    let h = rows[1][dim - 1] - rows[0][dim - 1];
    let grid = PeriodicGrid::new(dim, n, h * n as f64)?;
    let mut values = vec![0.0; nc * rows.len()];
    for (i, row) in rows.iter().enumerate() {
        for c in 0..nc {
            values[c * rows.len() + i] = row[dim + c];
        }
    }
    PeriodicField::new(grid, rank, values)
}

pub fn write_binary(field: &PeriodicField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&(g.n() as u32).to_le_bytes())?;
    w.write_all(&g.length().to_le_bytes())?;
    w.write_all(&field.rank().code().to_le_bytes())?;
    w.write_all(&(field.n_components() as u32).to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_binary(path: &Path) -> Result<PeriodicField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidField("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::InvalidField(format!("unsupported version {version}")));
    }
    let dim = read_u32(&mut r)? as usize;
    let n = read_u32(&mut r)? as usize;
    let length = read_f64(&mut r)?;
    let grid = PeriodicGrid::new(dim, n, length)?;
    let rank = Rank::from_code(read_u32(&mut r)?)
        .ok_or_else(|| Error::InvalidField("bad rank code".into()))?;
    let nc = read_u32(&mut r)? as usize;
    if nc != rank.components(dim) {
        return Err(Error::InvalidField("component count does not match rank".into()));
    }
    let count = nc * grid.len();
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        values.push(read_f64(&mut r)?);
    }
    PeriodicField::new(grid, rank, values)
}
