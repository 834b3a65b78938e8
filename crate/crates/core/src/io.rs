//! Binary snapshots. A single ASCII header line
//! `NSCHF 1 <name> <nx> <ny> <lx> <ly> <time>` (or `NSCHV` for face fields)
//! is followed by little-endian `f64` payload blocks: cell values in
//! row-major order, or x-faces then y-faces.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::grid::{FaceField, GridSpec, ScalarField};

const VERSION: &str = "1";

fn header(tag: &str, name: &str, grid: &GridSpec, time: f64) -> Result<String> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        return Err(Error::Format(format!("snapshot name must be a single token, got '{name}'")));
    }
    Ok(format!(
        "{tag} {VERSION} {name} {} {} {:e} {:e} {:e}\n",
        grid.nx, grid.ny, grid.lx, grid.ly, time
    ))
}

fn write_block(w: &mut impl Write, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 * values.len());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_block(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Snapshot metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub name: String,
    pub grid: GridSpec,
    pub time: f64,
}

fn read_header(r: &mut impl BufRead, tag: &str) -> Result<SnapshotHeader> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let tok: Vec<&str> = line.split_whitespace().collect();
    if tok.len() != 8 || tok[0] != tag {
        return Err(Error::Format(format!("expected '{tag}' header with 8 tokens, got '{}'", line.trim_end())));
    }
    if tok[1] != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {}", tok[1])));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad integer '{s}' in header")));
    let real = |s: &str| s.parse::<f64>().map_err(|_| Error::Format(format!("bad number '{s}' in header")));
    let grid = GridSpec::new(int(tok[3])?, int(tok[4])?, real(tok[5])?, real(tok[6])?)?;
    Ok(SnapshotHeader {
        name: tok[2].to_string(),
        grid,
        time: real(tok[7])?,
    })
}

pub fn write_scalar(w: &mut impl Write, name: &str, field: &ScalarField, time: f64) -> Result<()> {
    w.write_all(header("NSCHF", name, field.grid(), time)?.as_bytes())?;
    write_block(w, field.values())
}

pub fn read_scalar(r: &mut impl BufRead) -> Result<(SnapshotHeader, ScalarField)> {
    let h = read_header(r, "NSCHF")?;
    let values = read_block(r, h.grid.n_cells())?;
    let f = ScalarField::from_values(h.grid, values)?;
    Ok((h, f))
}

pub fn write_faces(w: &mut impl Write, name: &str, field: &FaceField, time: f64) -> Result<()> {
    w.write_all(header("NSCHV", name, field.grid(), time)?.as_bytes())?;
    write_block(w, field.x())?;
    write_block(w, field.y())
}

pub fn read_faces(r: &mut impl BufRead) -> Result<(SnapshotHeader, FaceField)> {
    let h = read_header(r, "NSCHV")?;
    let x = read_block(r, h.grid.n_xfaces())?;
    let y = read_block(r, h.grid.n_yfaces())?;
    let f = FaceField::from_components(h.grid, x, y)?;
    Ok((h, f))
}

pub fn save_scalar(path: &std::path::Path, name: &str, field: &ScalarField, time: f64) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_scalar(&mut w, name, field, time)?;
    w.flush()?;
    Ok(())
}

pub fn load_scalar(path: &std::path::Path) -> Result<(SnapshotHeader, ScalarField)> {
    read_scalar(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn save_faces(path: &std::path::Path, name: &str, field: &FaceField, time: f64) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_faces(&mut w, name, field, time)?;
    w.flush()?;
    Ok(())
}

pub fn load_faces(path: &std::path::Path) -> Result<(SnapshotHeader, FaceField)> {
    read_faces(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}
