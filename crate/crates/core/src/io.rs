//! File formats: state checkpoints, carpets (binary, CSV, 16-bit PGM) and
//! the CSV tables. Floats in CSV files carry 17 significant digits.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridState, SpatialGrid};
use crate::model::{energy, LevelIndex, WellModel};
use crate::observables::CarpetGrid;
use crate::wavepacket::CoefficientVector;

const CHECKPOINT_MAGIC: &[u8; 4] = b"SALP";
const CARPET_MAGIC: &[u8; 4] = b"CRPT";
const FORMAT_VERSION: u32 = 1;

/// Round-trip exact decimal form.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-separated rows with a header line.
pub struct CsvWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, header: &[&str]) -> Result<Self> {
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvWriter { out })
    }

    pub fn row(&mut self, fields: &[Field<'_>]) -> Result<()> {
        let line: Vec<String> = fields
            .iter()
            .map(|f| match f {
                Field::Float(x) => format_float(*x),
                Field::Int(n) => n.to_string(),
                Field::Text(s) => (*s).to_string(),
            })
            .collect();
        writeln!(self.out, "{}", line.join(","))?;
        Ok(())
    }

    pub fn floats(&mut self, values: &[f64]) -> Result<()> {
        let fields: Vec<Field<'_>> = values.iter().map(|&x| Field::Float(x)).collect();
        self.row(&fields)
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub enum Field<'a> {
    Float(f64),
    Int(u64),
    Text(&'a str),
}

fn write_f64<W: Write>(w: &mut W, x: f64) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<()> {
    let found: [u8; 4] = read_array(r)?;
    if &found != magic {
        return Err(Error::Format(format!(
            "expected magic {:?}, found {:?}",
            magic, found
        )));
    }
    let version = u32::from_le_bytes(read_array(r)?);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

/// Little-endian: `"SALP"`, version, `N`, `x_min`, `x_max` (last node),
/// time, then `N` pairs `(Re, Im)`.
pub fn write_checkpoint<W: Write>(mut w: W, state: &GridState) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(state.samples.len() as u64).to_le_bytes())?;
    write_f64(&mut w, state.grid.origin())?;
    write_f64(&mut w, state.grid.end())?;
    write_f64(&mut w, state.time)?;
    for z in &state.samples {
        write_f64(&mut w, z.re)?;
        write_f64(&mut w, z.im)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<GridState> {
    read_header(&mut r, CHECKPOINT_MAGIC)?;
    let n = read_u64(&mut r)? as usize;
    let x_min = read_f64(&mut r)?;
    let x_max = read_f64(&mut r)?;
    let time = read_f64(&mut r)?;
    if n < 2 {
        return Err(Error::Format(format!("checkpoint with {n} samples")));
    }
    let grid = SpatialGrid::new(x_min, (x_max - x_min) / (n - 1) as f64, n)
        .map_err(|e| Error::Format(e.to_string()))?;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        samples.push(Complex64::new(re, im));
    }
    GridState::new(samples, grid, time)
}

/// Contents of a binary carpet file.
#[derive(Debug, Clone, PartialEq)]
pub struct CarpetFile {
    pub rows: usize,
    pub cols: usize,
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub x1: f64,
    pub density: Vec<f64>,
}

/// `"CRPT"`, version, rows, cols, `t0`, `t1`, `x0`, `x1`, row-major `f64`.
pub fn write_carpet_binary<W: Write>(mut w: W, carpet: &CarpetGrid) -> Result<()> {
    w.write_all(CARPET_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(carpet.rows() as u64).to_le_bytes())?;
    w.write_all(&(carpet.cols() as u64).to_le_bytes())?;
    let t0 = carpet.times.first().copied().unwrap_or(0.0);
    let t1 = carpet.times.last().copied().unwrap_or(0.0);
    for x in [t0, t1, carpet.grid.origin(), carpet.grid.end()] {
        write_f64(&mut w, x)?;
    }
    for &d in &carpet.density {
        write_f64(&mut w, d)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_carpet_binary<R: Read>(mut r: R) -> Result<CarpetFile> {
    read_header(&mut r, CARPET_MAGIC)?;
    let rows = read_u64(&mut r)? as usize;
    let cols = read_u64(&mut r)? as usize;
    let t0 = read_f64(&mut r)?;
    let t1 = read_f64(&mut r)?;
    let x0 = read_f64(&mut r)?;
    let x1 = read_f64(&mut r)?;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("carpet dimensions overflow".into()))?;
    let mut density = Vec::with_capacity(count);
    for _ in 0..count {
        density.push(read_f64(&mut r)?);
    }
    Ok(CarpetFile {
        rows,
        cols,
        t0,
        t1,
        x0,
        x1,
        density,
    })
}

/// One line per sample: `t,x,density`.
pub fn write_carpet_csv<W: Write>(w: W, carpet: &CarpetGrid) -> Result<()> {
    let mut csv = CsvWriter::new(w, &["t", "x", "density"])?;
    for (r, &t) in carpet.times.iter().enumerate() {
        for (x, &d) in carpet.grid.positions().zip(carpet.row(r)) {
            csv.floats(&[t, x, d])?;
        }
    }
    csv.finish()?;
    Ok(())
}

/// Binary 16-bit PGM, rows are times, scaled to the carpet maximum.
pub fn write_carpet_pgm<W: Write>(mut w: W, carpet: &CarpetGrid) -> Result<()> {
    let max = carpet.density.iter().cloned().fold(0.0, f64::max);
    write!(w, "P5\n{} {}\n65535\n", carpet.cols(), carpet.rows())?;
    let mut bytes = Vec::with_capacity(2 * carpet.density.len());
    for &d in &carpet.density {
        let level = if max > 0.0 {
            (d / max * 65535.0).round().clamp(0.0, 65535.0) as u16
        } else {
            0
        };
        bytes.extend_from_slice(&level.to_be_bytes());
    }
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// `n,re,im,abs2`.
pub fn write_coefficients_csv<W: Write>(w: W, coeffs: &CoefficientVector) -> Result<()> {
    let mut csv = CsvWriter::new(w, &["n", "re", "im", "abs2"])?;
    for (n, a) in coeffs.levels() {
        csv.row(&[
            Field::Int(n.get()),
            Field::Float(a.re),
            Field::Float(a.im),
            Field::Float(a.norm_sqr()),
        ])?;
    }
    csv.finish()?;
    Ok(())
}

/// `n,E_numeric,E_analytic,abs_error,rel_error`; `levels[k]` is level `k + 1`.
pub fn write_spectrum_comparison_csv<W: Write>(
    w: W,
    model: &WellModel,
    levels: &[f64],
) -> Result<()> {
    let mut csv = CsvWriter::new(
        w,
        &["n", "E_numeric", "E_analytic", "abs_error", "rel_error"],
    )?;
    for (k, &e) in levels.iter().enumerate() {
        let n = k as u64 + 1;
        let exact = energy(model, LevelIndex::new(n)?);
        let err = (e - exact).abs();
        csv.row(&[
            Field::Int(n),
            Field::Float(e),
            Field::Float(exact),
            Field::Float(err),
            Field::Float(err / exact),
        ])?;
    }
    csv.finish()?;
    Ok(())
}
