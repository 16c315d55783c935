//! Flat binary snapshot format.
//!
//! Layout (all little-endian): magic `KGPS`, version `u32`, `d: u32`,
//! `k: u32`, `nx` (`d` times `u32`), `ny` (`k` times `u32`), box lengths
//! (`d` times `f64`), torus lengths (`k` times `f64`), then row-major
//! complex `f64` pairs for `u` followed by `v`.

use num_complex::Complex64;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DomainSpec, FieldState};
use crate::error::{KgError, Result};

pub const MAGIC: &[u8; 4] = b"KGPS";
pub const VERSION: u32 = 1;

pub fn write_snapshot(path: &Path, spec: &DomainSpec, state: &FieldState) -> Result<()> {
    let n = spec.total_points();
    if state.u.len() != n || state.v.len() != n {
        return Err(KgError::Domain("state shape does not match spec".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(spec.d as u32).to_le_bytes())?;
    w.write_all(&(spec.k as u32).to_le_bytes())?;
    for &v in spec.nx.iter().chain(&spec.ny) {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    for &v in spec.box_lengths.iter().chain(&spec.torus_lengths) {
        w.write_all(&v.to_le_bytes())?;
    }
    for z in state.u.iter().chain(&state.v) {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot; the stored pair carries no time stamp (run manifests
/// map snapshot files to times), so `time` is set to zero.
pub fn read_snapshot(path: &Path) -> Result<(DomainSpec, FieldState)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(KgError::Format(format!(
            "bad magic {:?} in {}",
            magic,
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(KgError::Format(format!("unsupported version {version}")));
    }
    let d = read_u32(&mut r)? as usize;
    let k = read_u32(&mut r)? as usize;
    if d == 0 || d > 8 || k == 0 || k > 8 {
        return Err(KgError::Format(format!("implausible dimensions d={d}, k={k}")));
    }
    let mut nx = Vec::with_capacity(d);
    for _ in 0..d {
        nx.push(read_u32(&mut r)? as usize);
    }
    let mut ny = Vec::with_capacity(k);
    for _ in 0..k {
        ny.push(read_u32(&mut r)? as usize);
    }
    let mut box_lengths = Vec::with_capacity(d);
    for _ in 0..d {
        box_lengths.push(read_f64(&mut r)?);
    }
    let mut torus_lengths = Vec::with_capacity(k);
    for _ in 0..k {
        torus_lengths.push(read_f64(&mut r)?);
    }
    let spec = DomainSpec {
        d,
        k,
        box_lengths,
        torus_lengths,
        nx,
        ny,
    };
    let n = spec.total_points();
    let read_component = |r: &mut BufReader<File>| -> Result<Vec<Complex64>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let re = read_f64(r)?;
            let im = read_f64(r)?;
            out.push(Complex64::new(re, im));
        }
        Ok(out)
    };
    let u = read_component(&mut r)?;
    let v = read_component(&mut r)?;
    Ok((spec, FieldState { time: 0.0, u, v }))
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
