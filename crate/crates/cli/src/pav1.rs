//! PAV1 volume files.
//!
//! Layout: the magic `PAV1`, then `nx ny nt` as little-endian `u32`, then
//! `dx dy dt t0 c z_f NA` as little-endian `f64`, then `nx*ny*nt` samples as
//! little-endian `f32` with `t` varying fastest, then `y`, then `x`.

use std::path::Path;

use arpam::{AcquisitionGeometry, Error, RfVolume};
use ndarray::Array3;

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"PAV1";
pub const HEADER_LEN: usize = 4 + 3 * 4 + 7 * 8;

/// Serialize a volume. Samples are narrowed to single precision.
pub fn encode(vol: &RfVolume) -> Vec<u8> {
    let (nx, ny, nt) = vol.dims();
    let g = &vol.geometry;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * nx * ny * nt);
    out.extend_from_slice(MAGIC);
    for n in [nx, ny, nt] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for v in [g.dx, g.dy, g.dt, g.t0, g.sound_speed, g.focal_length, g.numerical_aperture] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    // standard layout of [ix, iy, it] is already t-fastest
    for &v in vol.samples().iter() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

/// Parse a PAV1 byte buffer. The centre frequency is not stored and takes
/// its default value.
pub fn decode(bytes: &[u8]) -> arpam::Result<RfVolume> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::NotPav1);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "truncated PAV1 header: {} of {HEADER_LEN} bytes",
            bytes.len()
        )));
    }
    let (nx, ny, nt) = (u32_at(bytes, 4) as usize, u32_at(bytes, 8) as usize, u32_at(bytes, 12) as usize);
    let count = nx
        .checked_mul(ny)
        .and_then(|n| n.checked_mul(nt))
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Format(format!("bad PAV1 dimensions {nx} x {ny} x {nt}")))?;
    let expected = count
        .checked_mul(4)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("PAV1 payload size overflows".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "PAV1 payload size mismatch: expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let f = |i: usize| f64_at(bytes, 16 + 8 * i);
    let geometry = AcquisitionGeometry {
        dx: f(0),
        dy: f(1),
        dt: f(2),
        t0: f(3),
        sound_speed: f(4),
        focal_length: f(5),
        numerical_aperture: f(6),
        ..Default::default()
    };
    geometry.validate()?;
    let samples: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    let samples = Array3::from_shape_vec((nx, ny, nt), samples).expect("length checked");
    RfVolume::new(geometry, samples)
}

pub fn read(path: &Path) -> CliResult<RfVolume> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(decode(&bytes)?)
}

pub fn write(path: &Path, vol: &RfVolume) -> CliResult<()> {
    std::fs::write(path, encode(vol)).map_err(|e| CliError::io(path, e))
}
